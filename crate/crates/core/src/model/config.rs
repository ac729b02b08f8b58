use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and problem parameters of one B-ISAC link.
///
/// Powers are in mW, SINR thresholds are linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Transmit antennas at the AP.
    pub n_t: usize,
    /// Receive antennas at the AP.
    pub n_r: usize,
    pub noise_ap: f64,
    pub noise_tag: f64,
    pub noise_ue: f64,
    /// Backscatter modulation efficiency.
    pub alpha: f64,
    pub gamma_tth: f64,
    pub gamma_apth: f64,
    /// Total transmit power budget.
    pub p_t: f64,
    /// Waveform length in samples.
    pub waveform_len: usize,
    /// Target false-alarm probability of the tag detector.
    pub p_f: f64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if self.n_t == 0 {
            return fail("n_t must be at least 1".into());
        }
        if self.n_t > self.n_r {
            return fail(format!("n_t = {} exceeds n_r = {}", self.n_t, self.n_r));
        }
        for (name, v) in [
            ("noise_ap", self.noise_ap),
            ("noise_tag", self.noise_tag),
            ("noise_ue", self.noise_ue),
            ("gamma_tth", self.gamma_tth),
            ("gamma_apth", self.gamma_apth),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be finite and positive, got {v}"));
            }
        }
        // Zero budget and zero efficiency are representable; the optimizer
        // reports them as infeasible rather than rejecting the configuration.
        if !(self.p_t.is_finite() && self.p_t >= 0.0) {
            return fail(format!("p_t must be finite and non-negative, got {}", self.p_t));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.waveform_len <= self.n_t {
            return fail(format!("waveform length {} must exceed n_t = {}", self.waveform_len, self.n_t));
        }
        if !(self.p_f > 0.0 && self.p_f < 1.0) {
            return fail(format!("p_f must lie in (0, 1), got {}", self.p_f));
        }
        Ok(())
    }

    /// Number of beamforming columns: UE, tag, then `n_t` probing beams.
    pub fn n_cols(&self) -> usize {
        self.n_t + 2
    }
}
