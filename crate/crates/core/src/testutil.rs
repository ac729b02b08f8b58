use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{BeamformingMatrix, ChannelSet, LosGeometry, SystemConfig};

pub fn los_setup(n: usize) -> (ChannelSet, SystemConfig) {
    let geo = LosGeometry {
        tag_angle: PI / 4.0,
        ue_angle: 0.7 * PI,
        fading_f: Complex64::new(0.8, 0.0),
        fading_b: Complex64::new(0.8, 0.0),
        fading_u: Complex64::new(0.8, 0.0),
        h_tu: Complex64::new(0.5, 0.0),
    };
    let cfg = SystemConfig {
        n_t: n,
        n_r: n,
        noise_ap: 1e-4,
        noise_tag: 1e-4,
        noise_ue: 1e-4,
        alpha: 0.5,
        gamma_tth: 10f64.powf(1.5),
        gamma_apth: 10f64.powf(1.2),
        p_t: 1.0,
        waveform_len: 1024,
        p_f: 1e-3,
    };
    (ChannelSet::los(n, n, &geo).unwrap(), cfg)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cvec(n: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_beam(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> BeamformingMatrix {
    BeamformingMatrix::from_matrix(DMatrix::from_fn(n, n + 2, |_, _| {
        Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
    }))
    .unwrap()
}
