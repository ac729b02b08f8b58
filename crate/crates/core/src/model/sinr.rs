//! Closed-form SINRs at the tag, the AP echo and the UE, plus the UE rate.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use super::beam::BeamformingMatrix;
use super::channel::{row_mul, ChannelSet};
use super::config::SystemConfig;
use crate::error::{Error, Result};

/// An SINR together with the labeled power terms that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinrBreakdown {
    pub value: f64,
    pub numerator: f64,
    pub interference: Vec<(&'static str, f64)>,
    pub noise: f64,
}

impl SinrBreakdown {
    fn new(numerator: f64, interference: Vec<(&'static str, f64)>, noise: f64) -> Self {
        let denom: f64 = interference.iter().map(|(_, v)| v).sum::<f64>() + noise;
        Self { value: numerator / denom, numerator, interference, noise }
    }

    pub fn denominator(&self) -> f64 {
        self.interference.iter().map(|(_, v)| v).sum::<f64>() + self.noise
    }

    pub fn term(&self, label: &str) -> Option<f64> {
        self.interference.iter().find(|(l, _)| *l == label).map(|(_, v)| *v)
    }
}

/// Per-column products `h w_c` for a channel row.
pub(crate) fn column_gains(h: &DVector<Complex64>, w: &BeamformingMatrix) -> Vec<Complex64> {
    (0..w.n_cols()).map(|c| row_mul(h, w.column(c))).collect()
}

/// `‖h W‖²` summed over every column.
pub(crate) fn total_gain(h: &DVector<Complex64>, w: &BeamformingMatrix) -> f64 {
    column_gains(h, w).iter().map(|g| g.norm_sqr()).sum()
}

pub fn sinr_tag(w: &BeamformingMatrix, ch: &ChannelSet, cfg: &SystemConfig) -> SinrBreakdown {
    let g = column_gains(&ch.h_f, w);
    let probing: f64 = g[BeamformingMatrix::PROBE0..].iter().map(|z| z.norm_sqr()).sum();
    SinrBreakdown::new(
        g[BeamformingMatrix::TAG].norm_sqr(),
        vec![("ue_stream", g[BeamformingMatrix::UE].norm_sqr()), ("probing", probing)],
        cfg.noise_tag,
    )
}

/// Equal-gain (matched) receive combiner row `h_bᴴ / ‖h_b‖`, stored like
/// every row as the column `h_b / ‖h_b‖`.
pub fn equal_gain_combiner(h_b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let norm = h_b.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::invalid("equal-gain combiner needs a non-zero channel"));
    }
    Ok(h_b.map(|z| z / norm))
}

/// AP echo SINR for the combiner row `w_r`.
///
/// The rank-one numerator `α·w_r h_b h_f W Wᴴ h_fᴴ h_bᴴ w_rᴴ` is evaluated as
/// `α·|w_r h_b|²·‖h_f W‖²`.
pub fn sinr_ap(w: &BeamformingMatrix, w_r: &DVector<Complex64>, ch: &ChannelSet, cfg: &SystemConfig) -> SinrBreakdown {
    let combined = row_mul(w_r, ch.h_b.as_view()).norm_sqr();
    SinrBreakdown::new(
        cfg.alpha * combined * total_gain(&ch.h_f, w),
        vec![("tag_noise", cfg.alpha * combined * cfg.noise_tag)],
        w_r.norm_squared() * cfg.noise_ap,
    )
}

pub fn sinr_ue(w: &BeamformingMatrix, ch: &ChannelSet, cfg: &SystemConfig) -> SinrBreakdown {
    let gu = column_gains(&ch.h_u, w);
    let reflect = cfg.alpha * ch.h_tu.norm_sqr();
    let probing: f64 = gu[BeamformingMatrix::PROBE0..].iter().map(|z| z.norm_sqr()).sum();
    SinrBreakdown::new(
        gu[BeamformingMatrix::UE].norm_sqr(),
        vec![
            ("tag_stream", gu[BeamformingMatrix::TAG].norm_sqr()),
            ("probing", probing),
            ("backscatter", reflect * total_gain(&ch.h_f, w)),
            ("backscatter_noise", reflect * cfg.noise_tag),
        ],
        cfg.noise_ue,
    )
}

/// Achievable rate `log₂(1 + γ)` in bit/s/Hz.
pub fn rate(gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::invalid(format!("SINR must be non-negative, got {gamma}")));
    }
    Ok(gamma.ln_1p() / std::f64::consts::LN_2)
}
