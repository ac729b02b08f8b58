use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Response of a half-wavelength uniform linear array toward `angle`.
///
/// Element `k` is `exp(j·π·k·sin θ)`; element 0 is the phase reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    angle: f64,
    elements: DVector<Complex64>,
}

impl SteeringVector {
    pub fn new(angle: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("steering vector needs at least one element"));
        }
        if !angle.is_finite() {
            return Err(Error::invalid(format!("non-finite steering angle {angle}")));
        }
        let phase = PI * angle.sin();
        let elements = DVector::from_fn(n, |k, _| Complex64::from_polar(1.0, phase * k as f64));
        Ok(Self { angle, elements })
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &DVector<Complex64> {
        &self.elements
    }

    pub fn into_elements(self) -> DVector<Complex64> {
        self.elements
    }
}

pub fn steering_vector(theta: f64, n: usize) -> Result<SteeringVector> {
    SteeringVector::new(theta, n)
}

/// Line-of-sight channel `fading · a(θ)`.
pub fn los_channel(fading: Complex64, theta: f64, n: usize) -> Result<DVector<Complex64>> {
    Ok(steering_vector(theta, n)?.into_elements() * fading)
}
