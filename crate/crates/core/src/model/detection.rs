//! Analytic tag-detection probability of the correlation detector.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Inverse of [`erfc`] on `(0, 2)`.
///
/// A rational starting point is polished with Halley steps on `erfc` itself,
/// so the round trip is accurate to the precision of `erfc`.
pub fn erfc_inv(y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 2.0) {
        return Err(Error::invalid(format!("erfc_inv domain is (0, 2), got {y}")));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    let mut x = if y < 1e-7 {
        tail_erfc_inv(y)
    } else if y > 2.0 - 1e-7 {
        -tail_erfc_inv(2.0 - y)
    } else {
        initial_erfc_inv(y)
    };
    let c = 2.0 / PI.sqrt();
    for _ in 0..6 {
        let f = erfc(x) - y;
        let df = -c * (-x * x).exp();
        if df == 0.0 {
            break;
        }
        let newton = f / df;
        // f'' = -2x f'
        let step = newton / (1.0 + x * newton);
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1e-300) {
            break;
        }
    }
    Ok(x)
}

// erfc(x) ~ exp(-x²)/(x·√π) for large x, solved by fixed-point iteration.
fn tail_erfc_inv(y: f64) -> f64 {
    let mut x = (-y.ln()).sqrt();
    for _ in 0..4 {
        x = (-(y * PI.sqrt() * x).ln()).sqrt();
    }
    x
}

// Single-precision polynomial fit of erf⁻¹ (Giles), written in terms of y so
// that w = -ln(y(2-y)) keeps full precision in both tails.
fn initial_erfc_inv(y: f64) -> f64 {
    let x = 1.0 - y;
    let mut w = -(y * (2.0 - y)).ln();
    let p = if w < 5.0 {
        w -= 2.5;
        [
            2.810_226_36e-08,
            3.432_739_39e-07,
            -3.523_387_7e-06,
            -4.391_506_54e-06,
            0.000_218_580_87,
            -0.001_253_725_03,
            -0.004_177_681_64,
            0.246_640_727,
            1.501_409_41,
        ]
        .iter()
        .fold(0.0, |acc, c| c + acc * w)
    } else {
        w = w.sqrt() - 3.0;
        [
            -0.000_200_214_257,
            0.000_100_950_558,
            0.001_349_343_22,
            -0.003_673_428_44,
            0.005_739_507_73,
            -0.007_622_461_3,
            0.009_438_870_47,
            1.001_674_06,
            2.832_976_82,
        ]
        .iter()
        .fold(0.0, |acc, c| c + acc * w)
    };
    p * x
}

/// `P_D = ½·erfc(erfc⁻¹(2·P_F) − √γ_ap)`.
pub fn detection_probability(gamma_ap: f64, p_f: f64) -> Result<f64> {
    if !(p_f > 0.0 && p_f < 1.0) {
        return Err(Error::invalid(format!("false-alarm probability must lie in (0, 1), got {p_f}")));
    }
    if gamma_ap.is_nan() || gamma_ap < 0.0 {
        return Err(Error::invalid(format!("SINR must be non-negative, got {gamma_ap}")));
    }
    Ok(0.5 * erfc(erfc_inv(2.0 * p_f)? - gamma_ap.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    // erfc from the positive-term series for erf (small x) or a Lentz
    // continued fraction (large x), independent of libm.
    fn erfc_reference(x: f64) -> f64 {
        if x < 0.0 {
            return 2.0 - erfc_reference(-x);
        }
        if x < 2.5 {
            let mut term = x;
            let mut sum = x;
            let mut n = 0.0;
            while term > 1e-19 * sum {
                n += 1.0;
                term *= 2.0 * x * x / (2.0 * n + 1.0);
                sum += term;
            }
            1.0 - 2.0 / PI.sqrt() * (-x * x).exp() * sum
        } else {
            // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
            let tiny = 1e-300;
            let mut f = x;
            let mut c = x;
            let mut d = 0.0;
            for k in 1..300 {
                let a = k as f64 / 2.0;
                d = x + a * d;
                d = if d.abs() < tiny { tiny } else { d };
                c = x + a / c;
                c = if c.abs() < tiny { tiny } else { c };
                d = 1.0 / d;
                let delta = c * d;
                f *= delta;
                if (delta - 1.0).abs() < 1e-16 {
                    break;
                }
            }
            (-x * x).exp() / PI.sqrt() / f
        }
    }

    #[test]
    fn erfc_reference_values() {
        assert_eq!(erfc(0.0), 1.0);
        assert!((erfc(1.0) - 0.157_299_207_050_285).abs() < 1e-15);
        assert!((erfc_reference(1.0) - 0.157_299_207_050_285).abs() < 1e-14);
    }

    #[test]
    fn erfc_matches_independent_reference() {
        let mut worst: f64 = 0.0;
        let mut x = -6.0;
        while x <= 6.0 {
            worst = worst.max((erfc(x) - erfc_reference(x)).abs());
            x += 0.0125;
        }
        assert!(worst <= 1e-12, "max abs error {worst:e}");
    }

    #[test]
    fn erfc_inv_round_trip() {
        assert_eq!(erfc_inv(1.0).unwrap(), 0.0);
        let mut worst: f64 = 0.0;
        let n = 20_000;
        let (lo, hi) = (1e-6, 2.0 - 1e-6);
        for i in 0..=n {
            let y = lo + (hi - lo) * i as f64 / n as f64;
            worst = worst.max((erfc(erfc_inv(y).unwrap()) - y).abs());
        }
        for e in 1..=300 {
            let y = 10f64.powi(-e);
            let x = erfc_inv(y).unwrap();
            assert!(((erfc(x) - y) / y).abs() < 1e-12, "tail y = {y:e}");
        }
        assert!(worst <= 1e-10, "max round-trip error {worst:e}");
    }

    #[test]
    fn erfc_inv_domain() {
        for y in [0.0, 2.0, -1.0, 3.0, f64::NAN] {
            assert!(erfc_inv(y).is_err(), "{y}");
        }
    }

    #[test]
    fn detection_probability_limits() {
        assert!((detection_probability(0.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        for p_f in [1e-4, 0.01, 0.1, 0.3] {
            assert!((detection_probability(0.0, p_f).unwrap() - p_f).abs() < 1e-14);
        }
        assert_eq!(detection_probability(f64::INFINITY, 0.1).unwrap(), 1.0);
        assert!(detection_probability(1e4, 1e-3).unwrap() > 1.0 - 1e-12);
        assert!(detection_probability(1.0, 0.0).is_err());
        assert!(detection_probability(1.0, 1.0).is_err());
        assert!(detection_probability(-1.0, 0.1).is_err());
    }

    #[test]
    fn detection_probability_is_monotone() {
        let gammas: Vec<f64> = (0..60).map(|i| 0.25 * i as f64).collect();
        let pfs: Vec<f64> = (1..40).map(|i| 0.0125 * i as f64).collect();
        for &p_f in &pfs {
            for pair in gammas.windows(2) {
                let a = detection_probability(pair[0], p_f).unwrap();
                let b = detection_probability(pair[1], p_f).unwrap();
                assert!(b > a || (a > 1.0 - 1e-15 && b >= a), "gamma {pair:?} p_f {p_f}");
            }
        }
        for &g in &gammas[..20] {
            for pair in pfs.windows(2) {
                let a = detection_probability(g, pair[0]).unwrap();
                let b = detection_probability(g, pair[1]).unwrap();
                assert!(b > a, "p_f {pair:?} gamma {g}");
            }
        }
    }
}
