use nalgebra::{DMatrix, DMatrixView, DVector, DVectorView};
use num_complex::Complex64;

use super::steering::steering_vector;
use crate::error::{Error, Result};

/// Joint beamforming matrix `W = [w_u, w_t, w_1 … w_Nt]` of shape N_t×(N_t+2).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingMatrix {
    w: DMatrix<Complex64>,
}

impl BeamformingMatrix {
    pub const UE: usize = 0;
    pub const TAG: usize = 1;
    pub const PROBE0: usize = 2;

    pub fn zeros(n_t: usize) -> Self {
        Self { w: DMatrix::zeros(n_t, n_t + 2) }
    }

    pub fn from_matrix(w: DMatrix<Complex64>) -> Result<Self> {
        if w.nrows() == 0 || w.ncols() != w.nrows() + 2 {
            return Err(Error::invalid(format!("beamforming matrix must be N×(N+2), got {}×{}", w.nrows(), w.ncols())));
        }
        if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("beamforming matrix has non-finite entries"));
        }
        Ok(Self { w })
    }

    pub fn from_parts(w_u: &DVector<Complex64>, w_t: &DVector<Complex64>, w_s: &DMatrix<Complex64>) -> Result<Self> {
        let n = w_u.len();
        if w_t.len() != n || w_s.nrows() != n || w_s.ncols() != n {
            return Err(Error::invalid("beamformer parts have inconsistent sizes"));
        }
        let mut w = DMatrix::zeros(n, n + 2);
        w.set_column(Self::UE, w_u);
        w.set_column(Self::TAG, w_t);
        w.view_mut((0, Self::PROBE0), (n, n)).copy_from(w_s);
        Self::from_matrix(w)
    }

    pub fn n_t(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.w.ncols()
    }

    /// Assembled view in column order (UE, tag, probing 1..N_t).
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.w
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.w
    }

    pub fn w_u(&self) -> DVectorView<'_, Complex64> {
        self.w.column(Self::UE)
    }

    pub fn w_t(&self) -> DVectorView<'_, Complex64> {
        self.w.column(Self::TAG)
    }

    pub fn w_s(&self) -> DMatrixView<'_, Complex64> {
        self.w.columns(Self::PROBE0, self.n_t())
    }

    pub fn column(&self, c: usize) -> DVectorView<'_, Complex64> {
        self.w.column(c)
    }

    pub(crate) fn column_mut(&mut self, c: usize) -> nalgebra::DVectorViewMut<'_, Complex64> {
        self.w.column_mut(c)
    }

    /// Total transmit power `Tr(W Wᴴ) = ‖W‖²_F`.
    pub fn power(&self) -> f64 {
        self.w.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { w: &self.w * Complex64::new(factor, 0.0) }
    }
}

/// Sample covariance `R_X = W Wᴴ` of the transmit waveform.
pub fn sample_covariance(w: &BeamformingMatrix) -> DMatrix<Complex64> {
    let m = w.matrix();
    m * m.adjoint()
}

/// Transmit beampattern `P(θ) = aᴴ(θ) R_X a(θ)` at each angle.
pub fn beampattern(r_x: &DMatrix<Complex64>, thetas: &[f64]) -> Result<Vec<f64>> {
    let n = r_x.nrows();
    if n == 0 || r_x.ncols() != n {
        return Err(Error::invalid("covariance must be square and non-empty"));
    }
    let scale = r_x.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let asym = (r_x - r_x.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > 1e-10 * scale {
        return Err(Error::invalid(format!("covariance is not Hermitian (deviation {asym:.3e})")));
    }
    thetas
        .iter()
        .map(|&theta| {
            let a = steering_vector(theta, n)?.into_elements();
            let ra = r_x * &a;
            Ok(a.dotc(&ra).re)
        })
        .collect()
}
