use nalgebra::{DVector, DVectorView};
use num_complex::Complex64;

use super::config::SystemConfig;
use super::steering::los_channel;
use crate::error::{Error, Result};

/// Known channels of the link.
///
/// `h_f` and `h_u` are row vectors (1×N_t). A row is stored as the column
/// `v` with row `= vᴴ`, so `h_f w` is `Σ conj(v[k])·w[k]` and a line-of-sight
/// row toward θ is `aᴴ(θ)`, matching the beampattern `aᴴ(θ) R_X a(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// AP → tag.
    pub h_f: DVector<Complex64>,
    /// Tag → AP (column, N_r×1).
    pub h_b: DVector<Complex64>,
    /// AP → UE.
    pub h_u: DVector<Complex64>,
    /// Tag → UE.
    pub h_tu: Complex64,
}

/// Angles and fading coefficients of a line-of-sight geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosGeometry {
    pub tag_angle: f64,
    pub ue_angle: f64,
    pub fading_f: Complex64,
    pub fading_b: Complex64,
    pub fading_u: Complex64,
    pub h_tu: Complex64,
}

impl ChannelSet {
    pub fn los(n_t: usize, n_r: usize, geo: &LosGeometry) -> Result<Self> {
        Ok(Self {
            h_f: los_channel(geo.fading_f, geo.tag_angle, n_t)?,
            h_b: los_channel(geo.fading_b, geo.tag_angle, n_r)?,
            h_u: los_channel(geo.fading_u, geo.ue_angle, n_t)?,
            h_tu: geo.h_tu,
        })
    }

    pub fn check_dims(&self, cfg: &SystemConfig) -> Result<()> {
        if self.h_f.len() != cfg.n_t || self.h_u.len() != cfg.n_t || self.h_b.len() != cfg.n_r {
            return Err(Error::invalid(format!(
                "channel sizes (h_f {}, h_u {}, h_b {}) do not match n_t = {}, n_r = {}",
                self.h_f.len(),
                self.h_u.len(),
                self.h_b.len(),
                cfg.n_t,
                cfg.n_r
            )));
        }
        Ok(())
    }
}

/// Product `h w` of the row stored as `h` (that is, `hᴴ`) with a column.
pub fn row_mul(h: &DVector<Complex64>, w: DVectorView<'_, Complex64>) -> Complex64 {
    h.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum()
}
