//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bisac_core::model::{BeamformingMatrix, ChannelSet, SystemConfig};
use bisac_core::optimizer::{check_feasibility, initialize_w, optimal_y};
use bisac_core::scenario::Scenario;
use bisac_core::socp::{build_subproblem, AffineConstraint, ColumnLift, SocConstraint, SubproblemData};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn default_setup() -> (SystemConfig, ChannelSet) {
    Scenario::default().build().unwrap()
}

pub fn cvec(n: usize, r: &mut ChaCha8Rng) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

pub fn cgauss(r: &mut ChaCha8Rng, var: f64) -> Complex64 {
    // Box-Muller, kept local so the oracle shares no sampling code with the crate.
    let u1: f64 = r.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = r.random_range(0.0..1.0);
    let rad = (-var * u1.ln()).sqrt();
    let ang = std::f64::consts::TAU * u2;
    Complex64::new(rad * ang.cos(), rad * ang.sin())
}

pub fn random_beam(n: usize, scale: f64, r: &mut ChaCha8Rng) -> BeamformingMatrix {
    BeamformingMatrix::from_matrix(DMatrix::from_fn(n, n + 2, |_, _| {
        Complex64::new(r.random_range(-scale..scale), r.random_range(-scale..scale))
    }))
    .unwrap()
}

/// Random feasible beamformer: the deterministic start perturbed column by
/// column, rescaled into the power budget, kept only when feasible.
pub fn random_feasible(ch: &ChannelSet, cfg: &SystemConfig, r: &mut ChaCha8Rng) -> BeamformingMatrix {
    let base = initialize_w(ch, cfg).unwrap();
    let n = cfg.n_t;
    loop {
        let noise = random_beam(n, 1.0, r);
        let eps: f64 = r.random_range(0.0..0.05);
        let mut m = base.matrix().clone();
        for (c, col) in noise.matrix().column_iter().enumerate() {
            let scale = base.column(c).norm().max(1e-3) * eps;
            let step = col.into_owned() * Complex64::new(scale, 0.0);
            let updated = m.column(c) + step;
            m.set_column(c, &updated);
        }
        let mut w = BeamformingMatrix::from_matrix(m).unwrap();
        if w.power() > cfg.p_t {
            w = w.scaled((cfg.p_t / w.power()).sqrt() * 0.999);
        }
        if check_feasibility(&w, ch, cfg, 0.0).is_feasible() {
            return w;
        }
    }
}

/// Convex subproblem of a random two-antenna instance, linearized at a
/// random feasible anchor with `y` perturbed around its optimum.
pub fn random_subproblem(seed: u64) -> SubproblemData {
    let mut r = rng(seed);
    loop {
        let cfg = SystemConfig {
            n_t: 2,
            n_r: 2,
            noise_ap: 10f64.powf(r.random_range(-3.0..-1.0)),
            noise_tag: 10f64.powf(r.random_range(-3.0..-1.0)),
            noise_ue: 10f64.powf(r.random_range(-3.0..-1.0)),
            alpha: r.random_range(0.2..1.0),
            gamma_tth: r.random_range(0.5..10.0),
            gamma_apth: r.random_range(0.5..10.0),
            p_t: 1.0,
            waveform_len: 64,
            p_f: 0.1,
        };
        let ch = ChannelSet {
            h_f: cvec(2, &mut r),
            h_b: cvec(2, &mut r),
            h_u: cvec(2, &mut r),
            h_tu: Complex64::new(r.random_range(-0.5..0.5), r.random_range(-0.5..0.5)),
        };
        if initialize_w(&ch, &cfg).is_err() {
            continue;
        }
        let anchor = random_feasible(&ch, &cfg, &mut r);
        let y = optimal_y(&anchor, &ch, &cfg) * r.random_range(0.5..1.5);
        return build_subproblem(&anchor, y, &ch, &cfg);
    }
}

/// Concave quadratic whose constraints are all slack at the maximizer,
/// with that maximizer `Q⁻¹c/2`.
pub fn unconstrained_subproblem(seed: u64) -> (SubproblemData, DVector<f64>) {
    let mut r = rng(seed);
    let lift = ColumnLift::full(2);
    let n = lift.dim();
    let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let q = &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5;
    let c = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
    let x_star = q.clone().cholesky().unwrap().solve(&c) * 0.5;
    let data = SubproblemData {
        lift,
        linear: c,
        quadratic: q,
        offset: 0.0,
        soc: SocConstraint {
            head: DVector::zeros(n),
            head_offset: 10.0,
            body: DMatrix::zeros(1, n),
            body_offset: DVector::from_element(1, 1.0),
        },
        affine: AffineConstraint { coeffs: DVector::zeros(n), rhs: -10.0 },
        radius_sq: 100.0 * x_star.norm_squared().max(1.0),
        start: None,
    };
    (data, x_star)
}

/// Row-times-column with the conjugate-row storage convention, written
/// with nalgebra's own conjugated dot product.
pub fn hw(h: &DVector<Complex64>, w: &DVector<Complex64>) -> Complex64 {
    h.dotc(w)
}

/// Sample-average SINRs at the tag, the AP echo and the UE over `len`
/// symbols with Gaussian data and tag symbols and Gaussian noise.
pub struct SimulatedSinr {
    pub tag: f64,
    pub ap: f64,
    pub ue: f64,
}

pub fn simulate_sinrs(
    w: &BeamformingMatrix,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    len: usize,
    r: &mut ChaCha8Rng,
) -> SimulatedSinr {
    let n = cfg.n_t;
    let cols = n + 2;
    let w_r = &ch.h_b / Complex64::new(ch.h_b.norm(), 0.0);
    let wm = w.matrix();
    let sa = cfg.alpha.sqrt();
    let (mut tag_sig, mut tag_rest) = (0.0, 0.0);
    let (mut ap_sig, mut ap_rest) = (0.0, 0.0);
    let (mut ue_sig, mut ue_rest) = (0.0, 0.0);
    let comb = hw(&w_r, &ch.h_b);
    for _ in 0..len {
        let s = DVector::from_fn(cols, |_, _| cgauss(r, 1.0));
        let x = wm * &s;
        let c = cgauss(r, 1.0);
        let n_t = cgauss(r, cfg.noise_tag);
        let n_u = cgauss(r, cfg.noise_ue);
        let n_ap = DVector::from_fn(cfg.n_r, |_, _| cgauss(r, cfg.noise_ap));

        let at_tag = hw(&ch.h_f, &x) + n_t;
        let tag_desired = hw(&ch.h_f, &wm.column(BeamformingMatrix::TAG).into_owned()) * s[BeamformingMatrix::TAG];
        tag_sig += tag_desired.norm_sqr();
        tag_rest += (at_tag - tag_desired).norm_sqr();

        let echo_desired = comb * sa * hw(&ch.h_f, &x) * c;
        let received: DVector<Complex64> = &ch.h_b * (at_tag * c * sa) + &n_ap;
        let combined = hw(&w_r, &received);
        ap_sig += echo_desired.norm_sqr();
        ap_rest += (combined - echo_desired).norm_sqr();

        let ue_desired = hw(&ch.h_u, &wm.column(BeamformingMatrix::UE).into_owned()) * s[BeamformingMatrix::UE];
        let y_u = hw(&ch.h_u, &x) + ch.h_tu * sa * at_tag * c + n_u;
        ue_sig += ue_desired.norm_sqr();
        ue_rest += (y_u - ue_desired).norm_sqr();
    }
    SimulatedSinr { tag: tag_sig / tag_rest, ap: ap_sig / ap_rest, ue: ue_sig / ue_rest }
}

/// `max_x L(x, λ)` for raw multipliers `λ = (cone, affine, ball)`, found
/// by damped Newton on the smooth concave Lagrangian (the cone body has a
/// constant noise entry, so its norm never vanishes). By weak duality the
/// value bounds the subproblem optimum from above.
pub fn lagrangian_max(data: &SubproblemData, lam: [f64; 3]) -> f64 {
    let n = data.dim();
    let [ls, la, lb] = lam;
    let x0 = data.start.clone().unwrap_or_else(|| DVector::zeros(n));
    let scale = data.objective(&x0).abs().max(data.linear.amax()).max(1.0);
    let lagr = |x: &DVector<f64>| {
        data.objective(x) + ls * data.soc.residual(x) + la * data.affine.residual(x) + lb * data.ball_residual(x)
    };
    let mut x = x0;
    for _ in 0..200 {
        let u = &data.soc.body * &x + &data.soc.body_offset;
        let un = u.norm();
        let mut grad = &data.linear - (&data.quadratic * &x) * 2.0;
        grad += &data.soc.head * ls;
        grad -= data.soc.body.transpose() * (&u * (ls / un));
        grad += &data.affine.coeffs * la;
        grad -= &x * (2.0 * lb);
        // Hessian of the concave Lagrangian, negated.
        let bt = data.soc.body.transpose();
        let bu = &bt * &u;
        let mut h = &data.quadratic * 2.0 + DMatrix::identity(n, n) * (2.0 * lb);
        h += (&bt * &data.soc.body) * (ls / un) - (&bu * bu.transpose()) * (ls / (un * un * un));
        h += DMatrix::identity(n, n) * 1e-12 * h.amax().max(1.0);
        let step = match h.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => grad.clone(),
        };
        let dec = grad.dot(&step);
        if dec <= 1e-24 * scale {
            break;
        }
        let f0 = lagr(&x);
        let mut t = 1.0;
        while t > 1e-12 {
            let cand = &x + &step * t;
            if lagr(&cand) >= f0 + 0.25 * t * dec {
                x = cand;
                break;
            }
            t *= 0.5;
        }
        if t <= 1e-12 {
            break;
        }
    }
    lagr(&x)
}

/// Gradients of the objective and of the three constraint residuals.
fn gradients(data: &SubproblemData, x: &DVector<f64>) -> (DVector<f64>, [DVector<f64>; 3]) {
    let u = &data.soc.body * x + &data.soc.body_offset;
    let obj = &data.linear - (&data.quadratic * x) * 2.0;
    let soc = &data.soc.head - data.soc.body.transpose() * (&u / u.norm());
    (obj, [soc, data.affine.coeffs.clone(), x * -2.0])
}

/// Dual bound from multipliers fitted to the stationarity condition at a
/// candidate point: least squares over every subset of the three
/// constraints, keeping nonnegative fits, each scored by its Lagrangian
/// maximum.
pub fn fitted_dual_bound(data: &SubproblemData, x: &DVector<f64>) -> f64 {
    let (g0, gs) = gradients(data, x);
    let mut best = lagrangian_max(data, [0.0; 3]);
    for mask in 1u8..8 {
        let idx: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let a = DMatrix::from_fn(x.len(), idx.len(), |r, c| gs[idx[c]][r]);
        let Some(inv) = (a.transpose() * &a).try_inverse() else {
            continue;
        };
        let sol = inv * a.transpose() * (-&g0);
        if sol.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            continue;
        }
        let mut lam = [0.0; 3];
        for (k, &i) in idx.iter().enumerate() {
            lam[i] = sol[k];
        }
        best = best.min(lagrangian_max(data, lam));
    }
    best
}

/// Optimal value of a subproblem from a grid search over its Lagrange
/// multipliers.
///
/// The dual function `g(λ) = max_x L(x, λ)` is convex and, since the
/// problem is convex with a strictly feasible point, its minimum over
/// `λ ≥ 0` equals the primal optimum. The grid starts log-spaced over many
/// decades and the best node is polished by a restarted simplex search.
pub fn dual_grid_optimum(data: &SubproblemData) -> f64 {
    let n = data.dim();
    let head_scale = data.soc.head.amax().max(data.soc.body.amax()).max(data.soc.body_offset.amax());
    let aff_scale = data.affine.coeffs.amax().max(data.affine.rhs.abs()).max(1e-300);
    let ball_scale = data.radius_sq.max(1e-300);
    let x0 = data.start.clone().unwrap_or_else(|| DVector::zeros(n));
    let obj_scale = data.objective(&x0).abs().max(data.linear.amax()).max(1.0);

    let eval = |lam: [f64; 3]| -> f64 {
        lagrangian_max(
            data,
            [lam[0] * obj_scale / head_scale, lam[1] * obj_scale / aff_scale, lam[2] * obj_scale / ball_scale],
        )
    };

    let mut axis: Vec<f64> = vec![0.0];
    axis.extend((0..9).map(|k| 10f64.powi(k - 6)));
    let mut best = ([0.0; 3], f64::INFINITY);
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                let v = eval([a, b, c]);
                if v < best.1 {
                    best = ([a, b, c], v);
                }
            }
        }
    }
    // Polish with restarted Nelder-Mead on the convex dual; negative
    // coordinates are folded back onto the orthant.
    let folded = |p: [f64; 3]| eval([p[0].abs(), p[1].abs(), p[2].abs()]);
    for _ in 0..4 {
        let start = best.0;
        let mut simplex: Vec<([f64; 3], f64)> = vec![(start, best.1)];
        for i in 0..3 {
            let mut p = start;
            p[i] = if p[i] == 0.0 { 1e-3 } else { p[i] * 1.2 };
            simplex.push((p, folded(p)));
        }
        for _ in 0..400 {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let worst = simplex[3];
            let mut c = [0.0; 3];
            for (p, _) in &simplex[..3] {
                for i in 0..3 {
                    c[i] += p[i] / 3.0;
                }
            }
            let along = |k: f64| std::array::from_fn(|i| c[i] + k * (worst.0[i] - c[i]));
            let refl = along(-1.0);
            let fr = folded(refl);
            if fr < simplex[0].1 {
                let exp = along(-2.0);
                let fe = folded(exp);
                simplex[3] = if fe < fr { (exp, fe) } else { (refl, fr) };
            } else if fr < simplex[2].1 {
                simplex[3] = (refl, fr);
            } else {
                let con = along(0.5);
                let fc = folded(con);
                if fc < worst.1 {
                    simplex[3] = (con, fc);
                } else {
                    let b = simplex[0].0;
                    for (p, f) in simplex.iter_mut().skip(1) {
                        *p = std::array::from_fn(|i| b[i] + 0.5 * (p[i] - b[i]));
                        *f = folded(*p);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best.1 {
            best = (simplex[0].0.map(f64::abs), simplex[0].1);
        }
    }
    best.1
}
