//! Scenario files: flat TOML with explicit units in key names.
//!
//! ```toml
//! n_t = 16
//! p_t_dbm = 0.0
//! gamma_tth_db = 15.0
//! ```
//!
//! Keys left out take the values of [`Scenario::default`]. Unknown keys are
//! rejected.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ChannelSet, LosGeometry, SystemConfig};
use crate::optimizer::{SolverSettingsDef, StoppingRule};
use crate::units::{db_to_linear, dbm_to_mw};

/// Keys whose default values are assumptions rather than part of the
/// reference setup.
pub const ASSUMED_KEYS: [&str; 2] = ["alpha", "waveform_len"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub n_t: usize,
    pub n_r: usize,

    pub tag_angle_deg: f64,
    pub ue_angle_deg: f64,
    pub fading_f_re: f64,
    pub fading_f_im: f64,
    pub fading_b_re: f64,
    pub fading_b_im: f64,
    pub fading_u_re: f64,
    pub fading_u_im: f64,
    pub h_tu_re: f64,
    pub h_tu_im: f64,

    pub alpha: f64,
    pub noise_ap_dbm: f64,
    pub noise_tag_dbm: f64,
    pub noise_ue_dbm: f64,
    pub p_t_dbm: f64,
    pub gamma_tth_db: f64,
    pub gamma_apth_db: f64,
    pub p_f: f64,
    pub waveform_len: usize,
    pub seed: u64,

    pub delta_th: f64,
    pub inner_max: usize,
    pub eps_th: f64,
    pub outer_max: usize,
    pub solver_tol: f64,
    pub solver_max_iter: usize,

    /// Power values for the power sweep when no sweep is given on the
    /// command line.
    pub p_t_sweep_dbm: Vec<f64>,
    pub beampattern_step_deg: f64,
    pub detection_trials: usize,
    /// False-alarm targets of the ROC experiment.
    pub roc_p_f: Vec<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        let rule = StoppingRule::default();
        Self {
            n_t: 16,
            n_r: 16,
            tag_angle_deg: 45.0,
            ue_angle_deg: 126.0,
            fading_f_re: 0.8,
            fading_f_im: 0.0,
            fading_b_re: 0.8,
            fading_b_im: 0.0,
            fading_u_re: 0.8,
            fading_u_im: 0.0,
            h_tu_re: 0.5,
            h_tu_im: 0.0,
            alpha: 0.5,
            noise_ap_dbm: -40.0,
            noise_tag_dbm: -40.0,
            noise_ue_dbm: -40.0,
            p_t_dbm: 0.0,
            gamma_tth_db: 15.0,
            gamma_apth_db: 12.0,
            p_f: 0.01,
            waveform_len: 1024,
            seed: 0,
            delta_th: rule.delta_th,
            inner_max: rule.inner_max,
            eps_th: rule.eps_th,
            outer_max: rule.outer_max,
            solver_tol: rule.solver.tol,
            solver_max_iter: rule.solver.max_iter,
            p_t_sweep_dbm: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            beampattern_step_deg: 1.0,
            detection_trials: 100_000,
            roc_p_f: vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
        }
    }
}

impl Scenario {
    /// Parse and validate.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Canonical serialization: every key, in declaration order.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario fields are all TOML-representable")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn config(&self) -> SystemConfig {
        SystemConfig {
            n_t: self.n_t,
            n_r: self.n_r,
            noise_ap: dbm_to_mw(self.noise_ap_dbm),
            noise_tag: dbm_to_mw(self.noise_tag_dbm),
            noise_ue: dbm_to_mw(self.noise_ue_dbm),
            alpha: self.alpha,
            gamma_tth: db_to_linear(self.gamma_tth_db),
            gamma_apth: db_to_linear(self.gamma_apth_db),
            p_t: dbm_to_mw(self.p_t_dbm),
            waveform_len: self.waveform_len,
            p_f: self.p_f,
        }
    }

    pub fn geometry(&self) -> LosGeometry {
        LosGeometry {
            tag_angle: self.tag_angle_deg.to_radians(),
            ue_angle: self.ue_angle_deg.to_radians(),
            fading_f: Complex64::new(self.fading_f_re, self.fading_f_im),
            fading_b: Complex64::new(self.fading_b_re, self.fading_b_im),
            fading_u: Complex64::new(self.fading_u_re, self.fading_u_im),
            h_tu: Complex64::new(self.h_tu_re, self.h_tu_im),
        }
    }

    pub fn stopping_rule(&self) -> StoppingRule {
        StoppingRule {
            delta_th: self.delta_th,
            inner_max: self.inner_max,
            eps_th: self.eps_th,
            outer_max: self.outer_max,
            solver: SolverSettingsDef { tol: self.solver_tol, max_iter: self.solver_max_iter },
        }
    }

    /// Validated configuration and line-of-sight channels.
    pub fn build(&self) -> Result<(SystemConfig, ChannelSet)> {
        self.validate()?;
        let cfg = self.config();
        let ch = ChannelSet::los(cfg.n_t, cfg.n_r, &self.geometry())?;
        Ok((cfg, ch))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("tag_angle_deg", self.tag_angle_deg),
            ("ue_angle_deg", self.ue_angle_deg),
            ("fading_f_re", self.fading_f_re),
            ("fading_f_im", self.fading_f_im),
            ("fading_b_re", self.fading_b_re),
            ("fading_b_im", self.fading_b_im),
            ("fading_u_re", self.fading_u_re),
            ("fading_u_im", self.fading_u_im),
            ("h_tu_re", self.h_tu_re),
            ("h_tu_im", self.h_tu_im),
            ("noise_ap_dbm", self.noise_ap_dbm),
            ("noise_tag_dbm", self.noise_tag_dbm),
            ("noise_ue_dbm", self.noise_ue_dbm),
            ("p_t_dbm", self.p_t_dbm),
            ("gamma_tth_db", self.gamma_tth_db),
            ("gamma_apth_db", self.gamma_apth_db),
        ];
        if let Some((k, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!("{k} must be finite")));
        }
        if self.p_t_sweep_dbm.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("p_t_sweep_dbm entries must be finite".into()));
        }
        if !(self.beampattern_step_deg > 0.0 && self.beampattern_step_deg <= 180.0) {
            return Err(Error::Validation("beampattern_step_deg must lie in (0, 180]".into()));
        }
        if self.roc_p_f.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::Validation("roc_p_f entries must lie in (0, 1)".into()));
        }
        if self.detection_trials < 10_000 {
            return Err(Error::Validation("detection_trials must be at least 10000".into()));
        }
        self.config().validate()?;
        self.stopping_rule().validate()
    }

    /// Copy with one numeric key replaced. Integer keys accept integral
    /// values only.
    pub fn with_override(&self, key: &str, value: f64) -> Result<Self> {
        let mut table = toml::Table::try_from(self).expect("scenario serializes to a table");
        let slot = table.get_mut(key).ok_or_else(|| Error::Validation(format!("unknown scenario key `{key}`")))?;
        *slot = match slot {
            toml::Value::Integer(_) => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::Validation(format!("`{key}` takes a non-negative integer, got {value}")));
                }
                toml::Value::Integer(value as i64)
            }
            toml::Value::Float(_) => toml::Value::Float(value),
            _ => return Err(Error::Validation(format!("`{key}` is not a numeric key"))),
        };
        let s: Scenario = table.try_into().map_err(|e: toml::de::Error| Error::Validation(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }
}

/// Parsed `key=start:stop:step` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub key: String,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("sweep must look like key=start:stop:step, got `{text}`"));
        let (key, range) = text.split_once('=').ok_or_else(bad)?;
        let parts: Vec<f64> = range
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
            return Err(Error::Parse(format!("sweep range needs start ≤ stop and a positive step, got `{range}`")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 10_000 {
            return Err(Error::Parse(format!("sweep has {count} points; the limit is 10000")));
        }
        let values = (0..count).map(|i| start + step * i as f64).collect();
        Ok(Self { key: key.trim().to_string(), values })
    }
}
