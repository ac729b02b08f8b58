use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::check_feasibility;
use crate::error::{Constraint, Error, Result};
use crate::model::{equal_gain_combiner, BeamformingMatrix, ChannelSet, SystemConfig};

const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_HALVINGS: usize = 30;

fn infeasible(constraint: Constraint, detail: impl Into<String>) -> Error {
    Error::InfeasibleScenario { constraint, detail: detail.into() }
}

fn unit(v: DVector<Complex64>) -> Option<DVector<Complex64>> {
    let n = v.norm();
    (n > 1e-12).then(|| v / Complex64::new(n, 0.0))
}

/// Orthonormal completion of `span{vs}` in C^n, by Gram–Schmidt over the
/// standard basis.
fn complement(vs: &[DVector<Complex64>], n: usize) -> Vec<DVector<Complex64>> {
    let mut basis: Vec<DVector<Complex64>> = vs.to_vec();
    let mut out = Vec::new();
    for k in 0..n {
        let mut e = DVector::zeros(n);
        e[k] = Complex64::new(1.0, 0.0);
        for b in &basis {
            let proj = b.dotc(&e);
            e -= b * proj;
        }
        if let Some(u) = unit(e).filter(|u| u.iter().all(|z| z.re.is_finite())) {
            if basis.iter().all(|b| b.dotc(&u).norm() < 1e-8) {
                basis.push(u.clone());
                out.push(u);
            }
        }
    }
    out
}

/// Deterministic strictly feasible starting beamformer.
///
/// `w_t` is matched to `h_f` with a little more than the least power that
/// meets both the tag and AP thresholds; that least power is exactly the
/// feasibility limit, so any scenario it rejects has no feasible point at
/// all. `w_u` is matched to the part of `h_uᴴ` orthogonal to `h_fᴴ` and the
/// probing columns share what is left of the budget.
pub fn initialize_w(ch: &ChannelSet, cfg: &SystemConfig) -> Result<BeamformingMatrix> {
    cfg.validate()?;
    ch.check_dims(cfg)?;
    let n = cfg.n_t;
    if cfg.p_t <= 0.0 {
        return Err(infeasible(Constraint::PowerBudget, "transmit power budget is zero"));
    }
    let hf2 = ch.h_f.norm_squared();
    if !(hf2 > 0.0) {
        return Err(infeasible(Constraint::TagSinr, "AP to tag channel is zero"));
    }
    let w_r = equal_gain_combiner(&ch.h_b).map_err(|_| infeasible(Constraint::ApSinr, "tag to AP channel is zero"))?;
    let combined = ch.h_b.norm_squared();
    if cfg.alpha * combined <= 0.0 {
        return Err(infeasible(Constraint::ApSinr, "no reflected power reaches the AP"));
    }

    // Least total gain ‖h_f W‖² for each threshold, all on the tag beam.
    let tag_gain = cfg.gamma_tth * cfg.noise_tag;
    let ap_gain = cfg.gamma_apth * (cfg.alpha * combined * cfg.noise_tag + w_r.norm_squared() * cfg.noise_ap)
        / (cfg.alpha * combined);
    let (binding, gain) =
        if tag_gain >= ap_gain { (Constraint::TagSinr, tag_gain) } else { (Constraint::ApSinr, ap_gain) };
    let p_req = gain / hf2;
    if p_req >= cfg.p_t {
        return Err(infeasible(
            binding,
            format!("needs at least {p_req:.6e} mW on the tag beam, budget is {:.6e} mW", cfg.p_t),
        ));
    }
    let p_tag = (2.0 * p_req).min(0.5 * (p_req + cfg.p_t));
    let residual = cfg.p_t - p_tag;

    let t_dir = unit(ch.h_f.clone()).expect("h_f is non-zero");
    let proj = t_dir.dotc(&ch.h_u);
    let u_dir = unit(&ch.h_u - &t_dir * proj).or_else(|| unit(ch.h_u.clone())).unwrap_or_else(|| t_dir.clone());
    let probes = complement(&[t_dir.clone(), u_dir.clone()], n);

    let mut fraction = 0.5;
    for _ in 0..=MAX_HALVINGS {
        let p_u = fraction * residual;
        let p_s = residual - p_u;
        let mut w_s = DMatrix::zeros(n, n);
        if !probes.is_empty() {
            let amp = Complex64::new((p_s / probes.len() as f64).sqrt(), 0.0);
            for (k, v) in probes.iter().enumerate() {
                w_s.set_column(k, &(v * amp));
            }
        }
        let w = BeamformingMatrix::from_parts(
            &(&u_dir * Complex64::new(p_u.sqrt(), 0.0)),
            &(&t_dir * Complex64::new(p_tag.sqrt(), 0.0)),
            &w_s,
        )?;
        let report = check_feasibility(&w, ch, cfg, FEASIBILITY_TOL * cfg.p_t.max(1.0));
        if report.is_feasible() && report.tag_sinr > 0.0 && report.ap_sinr > 0.0 {
            return Ok(w);
        }
        fraction *= 0.5;
    }
    Err(infeasible(binding, "no strictly feasible starting point found"))
}
