//! Log-barrier interior-point method for the beamformer subproblem.
//!
//! The problem is rescaled so the power ball is the unit ball and every
//! constraint row has unit magnitude. A phase-I problem that minimizes a
//! shared slack finds a strictly feasible start (or certifies that none
//! exists); phase II then follows the central path with damped Newton
//! centering. Dual multipliers are read off the barrier gradients at each
//! centered point, which gives the reported KKT residuals.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::problem::SubproblemData;
use crate::model::BeamformingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverState {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct KktResiduals {
    /// Largest constraint violation of the returned point.
    pub primal: f64,
    /// Relative stationarity residual of the Lagrangian.
    pub dual: f64,
    /// Duality gap relative to the objective magnitude.
    pub gap: f64,
}

/// Multipliers certifying that the phase-I slack cannot be driven negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfeasibilityCertificate {
    /// Smallest achievable normalized violation shared by all constraints.
    pub min_violation: f64,
    /// Phase-I multipliers of (cone, affine, ball); they sum to one.
    pub multipliers: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverStatus {
    pub state: SolverState,
    pub kkt: KktResiduals,
    /// Outer (centering) iterations of phase II.
    pub iterations: usize,
    pub newton_steps: usize,
    /// Duality-gap bound `ν/t` after every centering step.
    pub gap_history: Vec<f64>,
    pub certificate: Option<InfeasibilityCertificate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100 }
    }
}

#[derive(Debug, Clone)]
pub struct RealSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub status: SolverStatus,
}

/// Solve and map the result back to a beamforming matrix.
pub fn solve(data: &SubproblemData, tol: f64, max_iter: usize) -> (BeamformingMatrix, SolverStatus) {
    let sol = solve_real(data, &SolverSettings { tol, max_iter });
    (data.lift.to_beam(&sol.x), sol.status)
}

const MU: f64 = 12.0;
const MAX_NEWTON: usize = 60;
const PHASE1_EXIT: f64 = -0.05;
const OBJ_FLOOR: f64 = 1e-9;

struct Soc {
    head: DVector<f64>,
    head0: f64,
    body: DMatrix<f64>,
    body0: DVector<f64>,
}

struct Lin {
    g: DVector<f64>,
    r: f64,
}

/// `r + g·x − Σ_{i<k} x_i² ≥ 0`
struct Ball {
    k: usize,
    g: DVector<f64>,
    r: f64,
}

/// minimize `xᵀ quad x + lin·x` over the intersection of the constraint sets.
struct Program {
    quad: Option<DMatrix<f64>>,
    lin: DVector<f64>,
    socs: Vec<Soc>,
    lins: Vec<Lin>,
    balls: Vec<Ball>,
}

type ExitTest<'a> = dyn Fn(&DVector<f64>) -> bool + 'a;

enum Centering {
    Done { steps: usize },
    EarlyExit { steps: usize },
    Failed,
}

impl Program {
    fn n(&self) -> usize {
        self.lin.len()
    }

    fn degree(&self) -> f64 {
        (2 * self.socs.len() + self.lins.len() + self.balls.len()) as f64
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        let q = self.quad.as_ref().map_or(0.0, |q| x.dot(&(q * x)));
        q + self.lin.dot(x)
    }

    fn objective_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.quad {
            Some(q) => q * x * 2.0 + &self.lin,
            None => self.lin.clone(),
        }
    }

    fn soc_parts(s: &Soc, x: &DVector<f64>) -> (f64, DVector<f64>) {
        (s.head.dot(x) + s.head0, &s.body * x + &s.body0)
    }

    fn ball_slack(b: &Ball, x: &DVector<f64>) -> f64 {
        b.r + b.g.dot(x) - x.rows(0, b.k).norm_squared()
    }

    /// Barrier value, or `None` outside the domain.
    fn barrier(&self, x: &DVector<f64>) -> Option<f64> {
        let mut phi = 0.0;
        for s in &self.socs {
            let (tau, u) = Self::soc_parts(s, x);
            let un = u.norm();
            if !(tau > un) {
                return None;
            }
            phi -= ((tau - un) * (tau + un)).ln();
        }
        for l in &self.lins {
            let v = l.g.dot(x) + l.r;
            if !(v > 0.0) {
                return None;
            }
            phi -= v.ln();
        }
        for b in &self.balls {
            let v = Self::ball_slack(b, x);
            if !(v > 0.0) {
                return None;
            }
            phi -= v.ln();
        }
        Some(phi)
    }

    fn barrier_derivatives(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n();
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for s in &self.socs {
            let (tau, u) = Self::soc_parts(s, x);
            let un = u.norm();
            let d = (tau - un) * (tau + un);
            // ∇(τ² − ‖u‖²) = 2(τ·head − bodyᵀu)
            let v = &s.head * tau - s.body.tr_mul(&u);
            grad.axpy(-2.0 / d, &v, 1.0);
            hess.ger(4.0 / (d * d), &v, &v, 1.0);
            hess.ger(-2.0 / d, &s.head, &s.head, 1.0);
            hess += s.body.tr_mul(&s.body) * (2.0 / d);
        }
        for l in &self.lins {
            let v = l.g.dot(x) + l.r;
            grad.axpy(-1.0 / v, &l.g, 1.0);
            hess.ger(1.0 / (v * v), &l.g, &l.g, 1.0);
        }
        for b in &self.balls {
            let v = Self::ball_slack(b, x);
            let mut dv = b.g.clone();
            dv.rows_mut(0, b.k).axpy(-2.0, &x.rows(0, b.k), 1.0);
            grad.axpy(-1.0 / v, &dv, 1.0);
            hess.ger(1.0 / (v * v), &dv, &dv, 1.0);
            for i in 0..b.k {
                hess[(i, i)] += 2.0 / v;
            }
        }
        (grad, hess)
    }

    /// Multipliers implied by the barrier at a centered point:
    /// (cone, affine, ball) each scaled by `1/t`.
    fn multipliers(&self, x: &DVector<f64>, t: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for s in &self.socs {
            let (tau, u) = Self::soc_parts(s, x);
            let un = u.norm();
            // z = 2/(t d)·(τ, −u); report z₀.
            out[0] += 2.0 * tau / (t * (tau - un) * (tau + un));
        }
        for l in &self.lins {
            out[1] += 1.0 / (t * (l.g.dot(x) + l.r));
        }
        for b in &self.balls {
            out[2] += 1.0 / (t * Self::ball_slack(b, x));
        }
        out
    }

    /// Damped Newton minimization of `t·f₀ + φ` starting from a domain point.
    fn center(&self, x: &mut DVector<f64>, t: f64, exit: Option<&ExitTest>) -> (Centering, f64) {
        let mut decrement = f64::INFINITY;
        let merit = |x: &DVector<f64>| self.barrier(x).map(|phi| t * self.objective(x) + phi);
        let Some(mut value) = merit(x) else {
            return (Centering::Failed, decrement);
        };
        for step in 0..MAX_NEWTON {
            let (bg, mut h) = self.barrier_derivatives(x);
            let grad = self.objective_grad(x) * t + bg;
            if let Some(q) = &self.quad {
                h += q * (2.0 * t);
            }
            let Some(dx) = newton_direction(h, &grad) else {
                return (Centering::Failed, decrement);
            };
            let slope = grad.dot(&dx);
            decrement = -slope;
            if -slope <= 2e-14 {
                return (Centering::Done { steps: step }, decrement);
            }
            let mut s = 1.0;
            let accepted = loop {
                let trial = &*x + &dx * s;
                if let Some(v) = merit(&trial) {
                    if v <= value + 0.25 * s * slope {
                        break Some((trial, v));
                    }
                }
                s *= 0.5;
                if s < 1e-12 {
                    break None;
                }
            };
            let Some((trial, v)) = accepted else {
                // No further decrease representable in floating point.
                return (Centering::Done { steps: step }, decrement);
            };
            *x = trial;
            value = v;
            if let Some(f) = exit {
                if f(x) {
                    return (Centering::EarlyExit { steps: step + 1 }, decrement);
                }
            }
        }
        (Centering::Done { steps: MAX_NEWTON }, decrement)
    }
}

fn newton_direction(mut h: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let diag_max = h.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..8 {
        if let Some(ch) = h.clone().cholesky() {
            let dx = ch.solve(&(-grad));
            if dx.iter().all(|v| v.is_finite()) {
                return Some(dx);
            }
        }
        let next = if shift == 0.0 { 1e-14 * diag_max } else { shift * 100.0 };
        for i in 0..h.nrows() {
            h[(i, i)] += next - shift;
        }
        shift = next;
    }
    None
}

/// Subproblem rewritten in `ξ = x / R` with unit-magnitude rows.
struct Scaled {
    program: Program,
    radius: f64,
    /// Constraint (cone 0, affine 1, ball 2) that no scaling of `x` can
    /// satisfy strictly, with its normalized violation.
    trivially_infeasible: Option<(usize, f64)>,
}

fn scale_problem(data: &SubproblemData) -> Scaled {
    let n = data.dim();
    let radius = data.radius_sq.max(0.0).sqrt();
    let mut trivially_infeasible = (!(radius > 0.0)).then_some((2, 0.0));
    let r = if radius > 0.0 { radius } else { 1.0 };

    let lin = &data.linear * (-r);
    let quad = &data.quadratic * (r * r);
    let obj_scale = lin.amax().max(quad.amax());
    let (quad, lin) =
        if obj_scale > 0.0 { (Some(quad / obj_scale), lin / obj_scale) } else { (None, DVector::zeros(n)) };

    let mut socs = Vec::new();
    let head = &data.soc.head * r;
    let body = &data.soc.body * r;
    let s_scale = head.amax().max(body.amax()).max(data.soc.head_offset.abs()).max(data.soc.body_offset.amax());
    if s_scale > 0.0 {
        socs.push(Soc {
            head: head / s_scale,
            head0: data.soc.head_offset / s_scale,
            body: body / s_scale,
            body0: &data.soc.body_offset / s_scale,
        });
    } else {
        trivially_infeasible = Some((0, 0.0));
    }

    let mut lins = Vec::new();
    let g = &data.affine.coeffs * r;
    let g_scale = g.amax();
    if g_scale > 0.0 {
        let l_scale = g_scale.max(data.affine.rhs.abs());
        lins.push(Lin { g: g / l_scale, r: -data.affine.rhs / l_scale });
    } else if data.affine.rhs > 0.0 {
        trivially_infeasible = Some((1, 1.0));
    }

    let balls = vec![Ball { k: n, g: DVector::zeros(n), r: 1.0 }];
    Scaled { program: Program { quad, lin, socs, lins, balls }, radius: r, trivially_infeasible }
}

fn phase_one(p: &Program, start: &DVector<f64>) -> Result<DVector<f64>, (Option<InfeasibilityCertificate>, bool)> {
    let n = p.n();
    let ext = |v: &DVector<f64>| v.clone().insert_row(n, 1.0);
    let mut violation: f64 = 0.0;
    for s in &p.socs {
        let (tau, u) = Program::soc_parts(s, start);
        violation = violation.max(u.norm() - tau);
    }
    for l in &p.lins {
        violation = violation.max(-(l.g.dot(start) + l.r));
    }
    for b in &p.balls {
        violation = violation.max(-Program::ball_slack(b, start));
    }
    let mut lin = DVector::zeros(n + 1);
    lin[n] = 1.0;
    let aux = Program {
        quad: None,
        lin,
        socs: p
            .socs
            .iter()
            .map(|s| Soc {
                head: ext(&s.head),
                head0: s.head0,
                body: s.body.clone().insert_column(n, 0.0),
                body0: s.body0.clone(),
            })
            .collect(),
        lins: p.lins.iter().map(|l| Lin { g: ext(&l.g), r: l.r }).collect(),
        balls: p.balls.iter().map(|b| Ball { k: b.k, g: ext(&b.g), r: b.r }).collect(),
    };
    let mut x = start.clone().insert_row(n, violation.max(0.0) + 1.0);
    let exit = |x: &DVector<f64>| x[n] < PHASE1_EXIT;
    let nu = aux.degree();
    let mut t = 1.0;
    for _ in 0..200 {
        match aux.center(&mut x, t, Some(&exit)).0 {
            Centering::Failed => return Err((None, true)),
            Centering::EarlyExit { .. } => return Ok(x.rows(0, n).into_owned()),
            Centering::Done { .. } => {}
        }
        let s = x[n];
        if s < -1e-10 && nu / t < s.abs() {
            return Ok(x.rows(0, n).into_owned());
        }
        if s - nu / t > 1e-12 {
            // Lower bound on the optimal slack is positive.
            let m = aux.multipliers(&x, t);
            let total: f64 = m.iter().sum::<f64>().max(1e-300);
            return Err((
                Some(InfeasibilityCertificate {
                    min_violation: s,
                    multipliers: [m[0] / total, m[1] / total, m[2] / total],
                }),
                false,
            ));
        }
        if nu / t < 1e-13 {
            let m = aux.multipliers(&x, t);
            let total: f64 = m.iter().sum::<f64>().max(1e-300);
            return Err((
                Some(InfeasibilityCertificate {
                    min_violation: s,
                    multipliers: [m[0] / total, m[1] / total, m[2] / total],
                }),
                false,
            ));
        }
        t *= MU;
    }
    Err((None, true))
}

pub fn solve_real(data: &SubproblemData, settings: &SolverSettings) -> RealSolution {
    let n = data.dim();
    let scaled = scale_problem(data);
    let p = &scaled.program;
    let r = scaled.radius;
    let mut status = SolverStatus {
        state: SolverState::Optimal,
        kkt: KktResiduals::default(),
        iterations: 0,
        newton_steps: 0,
        gap_history: Vec::new(),
        certificate: None,
    };
    let finish = |xi: DVector<f64>, status: SolverStatus| {
        let x = xi * r;
        RealSolution { objective: data.objective(&x), x, status }
    };

    let start = data
        .start
        .as_ref()
        .filter(|s| s.len() == n && s.iter().all(|v| v.is_finite()))
        .map(|s| s / r)
        .unwrap_or_else(|| DVector::zeros(n));

    if let Some((which, violation)) = scaled.trivially_infeasible {
        let mut multipliers = [0.0; 3];
        multipliers[which] = 1.0;
        status.state = SolverState::Infeasible;
        status.certificate = Some(InfeasibilityCertificate { min_violation: violation, multipliers });
        status.kkt.primal = data.max_violation(&(&start * r));
        return finish(start, status);
    }

    let interior = p.barrier(&start).is_some() && {
        let min_slack = p
            .lins
            .iter()
            .map(|l| l.g.dot(&start) + l.r)
            .chain(p.socs.iter().map(|s| {
                let (tau, u) = Program::soc_parts(s, &start);
                tau - u.norm()
            }))
            .chain(p.balls.iter().map(|b| Program::ball_slack(b, &start)))
            .fold(f64::INFINITY, f64::min);
        min_slack > 1e-6
    };
    let mut xi = if interior {
        start.clone()
    } else {
        match phase_one(p, &start) {
            Ok(x) => x,
            Err((cert, numerical)) => {
                status.state = if numerical { SolverState::NumericalFailure } else { SolverState::Infeasible };
                status.certificate = cert;
                status.kkt.primal = data.max_violation(&(&start * r));
                return finish(start, status);
            }
        }
    };

    let nu = p.degree();
    if p.quad.is_none() && p.lin.amax() == 0.0 {
        // Constant objective: return the analytic center.
        let (outcome, decrement) = p.center(&mut xi, 1.0, None);
        if let Centering::Failed = outcome {
            status.state = SolverState::NumericalFailure;
        }
        if let Centering::Done { steps } = outcome {
            status.newton_steps = steps;
        }
        status.iterations = 1;
        status.gap_history.push(0.0);
        status.kkt = KktResiduals { primal: 0.0, dual: decrement / 2.0, gap: 0.0 };
        return finish(xi, status);
    }

    let mut t = 1.0;
    for outer in 1..=settings.max_iter {
        let (outcome, decrement) = p.center(&mut xi, t, None);
        match outcome {
            Centering::Done { steps } | Centering::EarlyExit { steps } => status.newton_steps += steps,
            Centering::Failed => {
                status.state = SolverState::NumericalFailure;
                return finish(xi, status);
            }
        }
        status.iterations = outer;
        let gap = nu / t;
        status.gap_history.push(gap);
        let f0 = p.objective(&xi);
        status.kkt = KktResiduals {
            primal: data.max_violation(&(&xi * r)),
            dual: decrement / (2.0 * t) / f0.abs().max(OBJ_FLOOR),
            gap: gap / f0.abs().max(OBJ_FLOOR),
        };
        let k = status.kkt;
        if k.gap <= settings.tol && k.dual <= settings.tol && k.primal <= settings.tol {
            return finish(xi, status);
        }
        t *= MU;
    }
    status.state = SolverState::MaxIterations;
    finish(xi, status)
}
