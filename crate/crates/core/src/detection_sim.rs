//! Monte-Carlo simulation of tag detection at the AP.
//!
//! A waveform realization `X = W S` is synthesized once. Each trial picks one
//! sample `x_l` of it (trial index modulo `L`), draws fresh receiver noise,
//! a fresh noise sample at the tag and a fresh unit-modulus tag symbol `c`,
//! combines with `w_r` and correlates against the template
//! `q = w_r h_b·h_f x_l·c`. The tag symbol acts as a pilot known to the
//! detector, and the template leaves out `√α` so that `α = 0` gives the
//! same statistic under both hypotheses. With one sample per trial the
//! deflection of the statistic is the echo SINR, so the empirical detection
//! rate can be compared with the closed-form detection probability.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{equal_gain_combiner, row_mul, BeamformingMatrix, ChannelSet, SystemConfig};

const CHUNK: usize = 4096;

// Sub-stream identifiers; each chunk of trials gets its own stream.
const STREAM_DATA: u64 = 1;
const STREAM_H0: u64 = 2;
const STREAM_H1: u64 = 3;
const STREAM_CAL: u64 = 4;

fn sub_rng(seed: u64, domain: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((chunk << 4) | domain);
    rng
}

fn unit_phase(rng: &mut impl Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

/// Circularly symmetric complex Gaussian with variance `var`.
fn cgauss(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Augmented stream matrix `S` of shape (N_t+2)×L.
///
/// Rows 0 and 1 (UE and tag data) are independent uniform random phases.
/// The probing rows are the first `n_t` rows of the unnormalized DFT,
/// `exp(−j2πkl/L)`, so their Gram matrix is exactly `L·I`.
pub fn synthesize_streams(n_t: usize, l: usize, seed: u64) -> Result<DMatrix<Complex64>> {
    if n_t == 0 || l <= n_t + 2 {
        return Err(Error::invalid(format!("waveform length {l} must exceed n_t + 2 = {}", n_t + 2)));
    }
    let mut rng = sub_rng(seed, STREAM_DATA, 0);
    let mut s = DMatrix::zeros(n_t + 2, l);
    for j in 0..l {
        s[(BeamformingMatrix::UE, j)] = unit_phase(&mut rng);
        s[(BeamformingMatrix::TAG, j)] = unit_phase(&mut rng);
    }
    for k in 0..n_t {
        for j in 0..l {
            // Reduce the exponent mod L first to keep the phase exact.
            let idx = (k * j) % l;
            let phase = -std::f64::consts::TAU * idx as f64 / l as f64;
            s[(BeamformingMatrix::PROBE0 + k, j)] = Complex64::from_polar(1.0, phase);
        }
    }
    Ok(s)
}

/// Stream matrix `S` with the transmitted waveform `X = W S`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformRealization {
    pub streams: DMatrix<Complex64>,
    pub transmit: DMatrix<Complex64>,
    pub seed: u64,
}

impl WaveformRealization {
    pub fn new(w: &BeamformingMatrix, l: usize, seed: u64) -> Result<Self> {
        let streams = synthesize_streams(w.n_t(), l, seed)?;
        let transmit = w.matrix() * &streams;
        Ok(Self { streams, transmit, seed })
    }

    pub fn len(&self) -> usize {
        self.streams.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.ncols() == 0
    }

    /// `(1/L)·X Xᴴ`.
    pub fn sample_covariance(&self) -> DMatrix<Complex64> {
        &self.transmit * self.transmit.adjoint() / Complex64::new(self.len() as f64, 0.0)
    }

    /// `‖(1/L)·S Sᴴ − I‖_F`.
    pub fn stream_gram_error(&self) -> f64 {
        stream_gram_error(&self.streams)
    }
}

pub fn stream_gram_error(s: &DMatrix<Complex64>) -> f64 {
    let l = s.ncols() as f64;
    let gram = s * s.adjoint() / Complex64::new(l, 0.0);
    (gram - DMatrix::identity(s.nrows(), s.nrows())).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    /// Tag absent.
    H0,
    /// Tag present.
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorSample {
    pub statistic: f64,
    pub hypothesis: Hypothesis,
}

struct Link {
    w_r: DVector<Complex64>,
    /// `w_r h_b`
    echo: Complex64,
    /// `h_f x_l` for every sample of the realization.
    forward: Vec<Complex64>,
    sqrt_alpha: f64,
}

impl Link {
    fn new(real: &WaveformRealization, ch: &ChannelSet, cfg: &SystemConfig) -> Result<Self> {
        let w_r = equal_gain_combiner(&ch.h_b)?;
        let sqrt_alpha = cfg.alpha.sqrt();
        let echo = row_mul(&w_r, ch.h_b.as_view());
        let forward = (0..real.len()).map(|j| row_mul(&ch.h_f, real.transmit.column(j))).collect();
        Ok(Self { w_r, echo, forward, sqrt_alpha })
    }

    fn trial(&self, rng: &mut ChaCha8Rng, l: usize, hypothesis: Hypothesis, cfg: &SystemConfig) -> f64 {
        let c = unit_phase(rng);
        let template = self.echo * self.forward[l] * c;
        let noise: Complex64 = self.w_r.iter().map(|wr| wr.conj() * cgauss(rng, cfg.noise_ap)).sum();
        let received = match hypothesis {
            Hypothesis::H0 => noise,
            Hypothesis::H1 => {
                let at_tag = self.forward[l] + cgauss(rng, cfg.noise_tag);
                self.echo * self.sqrt_alpha * at_tag * c + noise
            }
        };
        (received * template.conj()).re
    }
}

fn run_trials(
    link: &Link,
    len: usize,
    cfg: &SystemConfig,
    n_trials: usize,
    hypothesis: Hypothesis,
    seed: u64,
    domain: u64,
) -> Vec<f64> {
    let chunks = n_trials.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = sub_rng(seed, domain, k as u64 + 1);
            let start = k * CHUNK;
            let end = (start + CHUNK).min(n_trials);
            (start..end).map(|t| link.trial(&mut rng, t % len, hypothesis, cfg)).collect()
        })
        .collect();
    parts.concat()
}

/// Detector statistics for `n_trials` independent trials under one
/// hypothesis. The realization is synthesized from `seed` with length
/// `cfg.waveform_len`; identical arguments give identical output.
pub fn simulate_statistics(
    w: &BeamformingMatrix,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    n_trials: usize,
    hypothesis: Hypothesis,
    seed: u64,
) -> Result<Vec<DetectorSample>> {
    if n_trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    ch.check_dims(cfg)?;
    let real = WaveformRealization::new(w, cfg.waveform_len, seed)?;
    let link = Link::new(&real, ch, cfg)?;
    let domain = match hypothesis {
        Hypothesis::H0 => STREAM_H0,
        Hypothesis::H1 => STREAM_H1,
    };
    Ok(run_trials(&link, real.len(), cfg, n_trials, hypothesis, seed, domain)
        .into_iter()
        .map(|statistic| DetectorSample { statistic, hypothesis })
        .collect())
}

/// Threshold exceeded by a fraction `p_f` of the H0 statistics: the
/// empirical (1 − p_f)-quantile.
pub fn calibrate_eta(h0: &[f64], p_f: f64) -> Result<f64> {
    if !(p_f > 0.0 && p_f < 1.0) {
        return Err(Error::invalid(format!("false-alarm target must lie in (0, 1), got {p_f}")));
    }
    let needed = (100.0 / p_f).ceil() as usize;
    if h0.len() < needed {
        return Err(Error::invalid(format!("calibration needs at least {needed} H0 samples, got {}", h0.len())));
    }
    let mut sorted = h0.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let above = ((p_f * n as f64).round() as usize).clamp(1, n - 1);
    Ok(sorted[n - above - 1])
}

/// Fraction of samples strictly above `eta`.
pub fn exceedance(samples: &[f64], eta: f64) -> f64 {
    samples.iter().filter(|&&s| s > eta).count() as f64 / samples.len() as f64
}

/// Binomial 3σ half-width of an estimated rate.
pub fn binomial_half_width(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalDetection {
    pub p_d: f64,
    pub half_width: f64,
    pub eta: f64,
    /// False-alarm rate on H0 samples held out from calibration.
    pub false_alarm: f64,
    pub false_alarm_half_width: f64,
    pub n_trials: usize,
}

/// Empirical detection probability at a threshold calibrated to `p_f`.
///
/// Calibration uses its own H0 run of `max(n_trials, 100/p_f)` trials; a
/// second H0 run of `n_trials` checks the false-alarm rate.
pub fn empirical_pd(
    w: &BeamformingMatrix,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    p_f: f64,
    n_trials: usize,
    seed: u64,
) -> Result<EmpiricalDetection> {
    if n_trials < 10_000 {
        return Err(Error::invalid(format!("need at least 10000 trials, got {n_trials}")));
    }
    ch.check_dims(cfg)?;
    let real = WaveformRealization::new(w, cfg.waveform_len, seed)?;
    let link = Link::new(&real, ch, cfg)?;
    let len = real.len();
    let n_cal = n_trials.max((100.0 / p_f).ceil() as usize);
    let cal = run_trials(&link, len, cfg, n_cal, Hypothesis::H0, seed, STREAM_CAL);
    let eta = calibrate_eta(&cal, p_f)?;
    let h0 = run_trials(&link, len, cfg, n_trials, Hypothesis::H0, seed, STREAM_H0);
    let h1 = run_trials(&link, len, cfg, n_trials, Hypothesis::H1, seed, STREAM_H1);
    let p_d = exceedance(&h1, eta);
    Ok(EmpiricalDetection {
        p_d,
        half_width: binomial_half_width(p_d, n_trials),
        eta,
        false_alarm: exceedance(&h0, eta),
        false_alarm_half_width: binomial_half_width(p_f, n_trials),
        n_trials,
    })
}
