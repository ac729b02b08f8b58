//! Rate maximization under tag/AP SINR and power constraints.
//!
//! The UE SINR is handled with the quadratic transform
//! `F(W, y) = 2y·Re{h_u w_u} − y²·D(W)`, maximized alternately in `y`
//! (closed form) and in `W` (successive convex approximation of the AP echo
//! constraint, each step a convex subproblem).

mod init;
mod trace;

use num_complex::Complex64;

use crate::error::{Constraint, Error, Result};
use crate::model::{
    detection_probability, equal_gain_combiner, rate, row_mul, sinr_ap, sinr_tag, sinr_ue, total_gain,
    BeamformingMatrix, ChannelSet, SystemConfig,
};
use crate::socp::{build_subproblem, solve, SolverSettings, SolverState, SolverStatus};

pub use init::initialize_w;
pub use trace::{ComplexTable, IterationRecord, IterationTrace, SolveReport};

/// Stopping thresholds of the inner (SCA) and outer (alternating) loops.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StoppingRule {
    /// Inner threshold on δ, relative to `‖h_f W‖²`.
    pub delta_th: f64,
    pub inner_max: usize,
    /// Outer threshold on ε = y_k − y_{k−1}, relative to `max(1, |y_k|)`.
    pub eps_th: f64,
    pub outer_max: usize,
    pub solver: SolverSettingsDef,
}

/// Serializable mirror of [`SolverSettings`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverSettingsDef {
    pub tol: f64,
    pub max_iter: usize,
}

impl From<SolverSettingsDef> for SolverSettings {
    fn from(s: SolverSettingsDef) -> Self {
        SolverSettings { tol: s.tol, max_iter: s.max_iter }
    }
}

impl Default for StoppingRule {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            delta_th: 1e-4,
            inner_max: 50,
            eps_th: 1e-5,
            outer_max: 30,
            solver: SolverSettingsDef { tol: s.tol, max_iter: s.max_iter },
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_th > 0.0 && self.eps_th > 0.0 && self.solver.tol > 0.0) {
            return Err(Error::Validation("stopping thresholds must be positive".into()));
        }
        if self.inner_max == 0 || self.outer_max == 0 || self.solver.max_iter == 0 {
            return Err(Error::Validation("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Quadratic-transform objective `F(W, y)`.
pub fn objective_f(w: &BeamformingMatrix, y: f64, ch: &ChannelSet, cfg: &SystemConfig) -> f64 {
    let signal = row_mul(&ch.h_u, w.w_u()).re;
    let d = sinr_ue(w, ch, cfg).denominator();
    2.0 * y * signal - y * y * d
}

/// Maximizer of `F(W, ·)`: `y* = Re{h_u w_u} / D(W)`.
pub fn optimal_y(w: &BeamformingMatrix, ch: &ChannelSet, cfg: &SystemConfig) -> f64 {
    row_mul(&ch.h_u, w.w_u()).re / sinr_ue(w, ch, cfg).denominator()
}

fn derotate(w: &mut BeamformingMatrix, h: &nalgebra::DVector<Complex64>, col: usize) {
    let g = row_mul(h, w.column(col));
    if g.norm() > 0.0 {
        let phase = g.conj() / g.norm();
        let rotated = w.column(col).into_owned() * phase;
        w.column_mut(col).copy_from(&rotated);
    }
}

/// Rotate `w_t` so `h_f w_t` is real non-negative and `w_u` so `h_u w_u` is.
/// Every SINR is unchanged.
pub fn rotate_phases(w: &BeamformingMatrix, ch: &ChannelSet) -> BeamformingMatrix {
    let mut out = w.clone();
    derotate(&mut out, &ch.h_f, BeamformingMatrix::TAG);
    derotate(&mut out, &ch.h_u, BeamformingMatrix::UE);
    out
}

/// Signed constraint residuals; non-negative means satisfied.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FeasibilityReport {
    /// `γ_t − γ_tth`
    pub tag_sinr: f64,
    /// `γ_ap − γ_apth`
    pub ap_sinr: f64,
    /// `P_T − Tr(W Wᴴ)`
    pub power: f64,
    pub tol: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violated().is_none()
    }

    /// First violated constraint, if any.
    pub fn violated(&self) -> Option<Constraint> {
        if self.tag_sinr < -self.tol {
            Some(Constraint::TagSinr)
        } else if self.ap_sinr < -self.tol {
            Some(Constraint::ApSinr)
        } else if self.power < -self.tol {
            Some(Constraint::PowerBudget)
        } else {
            None
        }
    }
}

pub(crate) fn ap_sinr_value(w: &BeamformingMatrix, ch: &ChannelSet, cfg: &SystemConfig) -> f64 {
    match equal_gain_combiner(&ch.h_b) {
        Ok(w_r) => sinr_ap(w, &w_r, ch, cfg).value,
        Err(_) => 0.0,
    }
}

pub fn check_feasibility(w: &BeamformingMatrix, ch: &ChannelSet, cfg: &SystemConfig, tol: f64) -> FeasibilityReport {
    FeasibilityReport {
        tag_sinr: sinr_tag(w, ch, cfg).value - cfg.gamma_tth,
        ap_sinr: ap_sinr_value(w, ch, cfg) - cfg.gamma_apth,
        power: cfg.p_t - w.power(),
        tol,
    }
}

fn record(iteration: usize, y: f64, w: &BeamformingMatrix, ch: &ChannelSet, cfg: &SystemConfig) -> IterationRecord {
    let gamma_u = sinr_ue(w, ch, cfg).value;
    IterationRecord {
        iteration,
        y,
        objective: objective_f(w, y, ch, cfg),
        gamma_u,
        rate: rate(gamma_u).unwrap_or(0.0),
        gamma_t: sinr_tag(w, ch, cfg).value,
        gamma_ap: ap_sinr_value(w, ch, cfg),
        power: w.power(),
        inner_iterations: 0,
        delta: None,
        epsilon: None,
    }
}

/// δ from the SCA loop: `|Tr[Wᴴ F (W − W‡)] + Tr[Wᵀ Fᵀ (W − W‡)*]|`.
fn sca_delta(w: &BeamformingMatrix, anchor: &BeamformingMatrix, ch: &ChannelSet) -> f64 {
    let mut acc = 0.0;
    for c in 0..w.n_cols() {
        let g = row_mul(&ch.h_f, w.column(c));
        let diff = row_mul(&ch.h_f, w.column(c)) - row_mul(&ch.h_f, anchor.column(c));
        acc += 2.0 * (g.conj() * diff).re;
    }
    acc.abs()
}

fn solver_error(stage: &'static str, iteration: usize, status: &SolverStatus) -> Error {
    Error::Solver { stage, iteration, state: status.state }
}

/// Successive convex approximation of the beamformer update for fixed `y`.
///
/// `w_init` must satisfy the true constraints. Each iteration linearizes the
/// AP echo constraint at the current point and solves the convex
/// subproblem; the first record is the starting point.
pub fn sca_solve(
    y: f64,
    w_init: &BeamformingMatrix,
    rule: &StoppingRule,
    ch: &ChannelSet,
    cfg: &SystemConfig,
) -> Result<(BeamformingMatrix, IterationTrace)> {
    let mut trace = IterationTrace::default();
    trace.records.push(record(0, y, w_init, ch, cfg));
    let mut w = w_init.clone();
    let settings: SolverSettings = rule.solver.into();
    for i in 1..=rule.inner_max {
        let anchor = w.clone();
        let data = build_subproblem(&anchor, y, ch, cfg);
        let (next, status) = solve(&data, settings.tol, settings.max_iter);
        if status.state != SolverState::Optimal {
            return Err(solver_error("SCA subproblem", i, &status));
        }
        let delta = sca_delta(&next, &anchor, ch);
        w = next;
        let mut rec = record(i, y, &w, ch, cfg);
        rec.inner_iterations = status.iterations;
        rec.delta = Some(delta);
        trace.records.push(rec);
        if delta < rule.delta_th * total_gain(&ch.h_f, &w).max(f64::MIN_POSITIVE) {
            trace.converged = true;
            break;
        }
    }
    Ok((w, trace))
}

/// Alternating maximization over `y` and `W` starting from [`initialize_w`].
pub fn alternating_solve(
    rule: &StoppingRule,
    ch: &ChannelSet,
    cfg: &SystemConfig,
) -> Result<(BeamformingMatrix, IterationTrace, SolveReport)> {
    cfg.validate()?;
    ch.check_dims(cfg)?;
    rule.validate()?;
    let mut w = initialize_w(ch, cfg)?;
    let mut trace = IterationTrace::default();
    let mut inner_traces = Vec::new();
    let mut y_prev = 0.0;
    for k in 1..=rule.outer_max {
        w = rotate_phases(&w, ch);
        let y = optimal_y(&w, ch, cfg);
        let (next, inner) = sca_solve(y, &w, rule, ch, cfg).map_err(|e| match e {
            Error::Solver { iteration, state, .. } => {
                Error::Solver { stage: "alternating W-update", iteration: (k - 1) * rule.inner_max + iteration, state }
            }
            other => other,
        })?;
        w = next;
        let epsilon = y - y_prev;
        let mut rec = record(k, y, &w, ch, cfg);
        rec.inner_iterations = inner.records.len() - 1;
        rec.delta = inner.records.last().and_then(|r| r.delta);
        rec.epsilon = Some(epsilon);
        trace.records.push(rec);
        inner_traces.push(inner);
        y_prev = y;
        if epsilon < rule.eps_th * y.abs().max(1.0) {
            trace.converged = true;
            break;
        }
    }
    let w = rotate_phases(&w, ch);
    let report = SolveReport::new(&w, ch, cfg, &trace, inner_traces)?;
    Ok((w, trace, report))
}

pub(crate) fn detection_for(gamma_ap: f64, cfg: &SystemConfig) -> Result<f64> {
    detection_probability(gamma_ap, cfg.p_f)
}
