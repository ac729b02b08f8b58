use nalgebra::{DMatrix, DVector};

use super::lift::ColumnLift;
use crate::model::{column_gains, equal_gain_combiner, row_mul, BeamformingMatrix, ChannelSet, SystemConfig};

/// `head·x + head_offset ≥ ‖body·x + body_offset‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocConstraint {
    pub head: DVector<f64>,
    pub head_offset: f64,
    pub body: DMatrix<f64>,
    pub body_offset: DVector<f64>,
}

impl SocConstraint {
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        self.head.dot(x) + self.head_offset - (&self.body * x + &self.body_offset).norm()
    }
}

/// `coeffs·x ≥ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConstraint {
    pub coeffs: DVector<f64>,
    pub rhs: f64,
}

impl AffineConstraint {
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        self.coeffs.dot(x) - self.rhs
    }
}

/// One convex subproblem in real coordinates:
///
/// maximize `linear·x − xᵀ·quadratic·x + offset`
/// subject to one second-order cone, one affine inequality and `‖x‖² ≤ radius_sq`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemData {
    pub lift: ColumnLift,
    pub linear: DVector<f64>,
    /// Symmetric positive semidefinite.
    pub quadratic: DMatrix<f64>,
    pub offset: f64,
    pub soc: SocConstraint,
    pub affine: AffineConstraint,
    pub radius_sq: f64,
    /// Initial point handed to the solver, if any.
    pub start: Option<DVector<f64>>,
}

impl SubproblemData {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.linear.dot(x) - x.dot(&(&self.quadratic * x)) + self.offset
    }

    pub fn ball_residual(&self, x: &DVector<f64>) -> f64 {
        self.radius_sq - x.norm_squared()
    }

    /// Most negative of the three constraint residuals, or 0 if all hold.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        [self.soc.residual(x), self.affine.residual(x), self.ball_residual(x)].iter().fold(0.0, |acc, r| acc.max(-r))
    }
}

/// Convex subproblem of the beamformer update for fixed `y`, with the AP
/// echo constraint linearized at `anchor`. Columns live in the channel
/// subspace.
pub fn build_subproblem(anchor: &BeamformingMatrix, y: f64, ch: &ChannelSet, cfg: &SystemConfig) -> SubproblemData {
    build_subproblem_with(ColumnLift::channel_subspace(ch), anchor, y, ch, cfg)
}

pub fn build_subproblem_with(
    lift: ColumnLift,
    anchor: &BeamformingMatrix,
    y: f64,
    ch: &ChannelSet,
    cfg: &SystemConfig,
) -> SubproblemData {
    let n = lift.dim();
    let cols = lift.n_cols();
    let ue = BeamformingMatrix::UE;
    let tag = BeamformingMatrix::TAG;
    let reflect = cfg.alpha * ch.h_tu.norm_sqr();

    let f_rows: Vec<_> = (0..cols).map(|c| lift.functional(&ch.h_f, c)).collect();
    let u_rows: Vec<_> = (0..cols).map(|c| lift.functional(&ch.h_u, c)).collect();

    // F(W, y) = 2y·Re{h_u w_u} − y²·D(W)
    let linear = &u_rows[ue].0 * (2.0 * y);
    let mut quadratic = DMatrix::zeros(n, n);
    let y2 = y * y;
    for c in 0..cols {
        if c != ue {
            let (p, q) = &u_rows[c];
            quadratic.ger(y2, p, p, 1.0);
            quadratic.ger(y2, q, q, 1.0);
        }
        if reflect > 0.0 {
            let (p, q) = &f_rows[c];
            quadratic.ger(y2 * reflect, p, p, 1.0);
            quadratic.ger(y2 * reflect, q, q, 1.0);
        }
    }
    let offset = -y2 * (reflect * cfg.noise_tag + cfg.noise_ue);

    // √(1/γ_tth)·Re{h_f w_t} ≥ ‖[h_f w_u, h_f w_1 … h_f w_Nt, σ_t]‖
    let interferers: Vec<usize> = std::iter::once(ue).chain(BeamformingMatrix::PROBE0..cols).collect();
    let m = 2 * interferers.len() + 1;
    let mut body = DMatrix::zeros(m, n);
    for (k, &c) in interferers.iter().enumerate() {
        body.row_mut(2 * k).copy_from(&f_rows[c].0.transpose());
        body.row_mut(2 * k + 1).copy_from(&f_rows[c].1.transpose());
    }
    let mut body_offset = DVector::zeros(m);
    body_offset[m - 1] = cfg.noise_tag.sqrt();
    let soc = SocConstraint { head: &f_rows[tag].0 / cfg.gamma_tth.sqrt(), head_offset: 0.0, body, body_offset };

    // First-order minorant of the convex map W ↦ Tr(F W Wᴴ) = ‖h_f W‖² at
    // the anchor: ‖g‖² + 2·Re Σ_c conj(g_c)·h_f(w_c − w‡_c), with g = h_f W‡.
    let w_r = equal_gain_combiner(&ch.h_b).ok();
    let (combined, combiner_norm2) = match &w_r {
        Some(w_r) => (row_mul(w_r, ch.h_b.as_view()).norm_sqr(), w_r.norm_squared()),
        None => (0.0, 0.0),
    };
    let gain = cfg.alpha / cfg.gamma_apth * combined;
    let noise = cfg.alpha * combined * cfg.noise_tag + combiner_norm2 * cfg.noise_ap;
    let g = column_gains(&ch.h_f, anchor);
    let mut coeffs = DVector::zeros(n);
    for (c, gc) in g.iter().enumerate() {
        coeffs.axpy(2.0 * gain * gc.re, &f_rows[c].0, 1.0);
        coeffs.axpy(2.0 * gain * gc.im, &f_rows[c].1, 1.0);
    }
    let g_norm2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
    let affine = AffineConstraint { coeffs, rhs: noise + gain * g_norm2 };

    SubproblemData {
        start: Some(lift.to_real(anchor)),
        lift,
        linear,
        quadratic,
        offset,
        soc,
        affine,
        radius_sq: cfg.p_t,
    }
}
