use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::model::{BeamformingMatrix, ChannelSet};

/// Real-valued coordinates for a beamforming matrix.
///
/// Every column is written as `w_c = U z_c` for an orthonormal basis `U`
/// (N_t×r). The real vector is `x = [Re vec(Z); Im vec(Z)]` with `vec`
/// stacking columns, so `x[c·r + i]` is `Re z_c[i]` and the imaginary parts
/// follow after the first half. With `U = I` this is the plain lift of
/// `vec(W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnLift {
    n_t: usize,
    n_cols: usize,
    basis: DMatrix<Complex64>,
}

impl ColumnLift {
    /// Identity basis: all `2·N_t·(N_t+2)` real coordinates.
    pub fn full(n_t: usize) -> Self {
        Self { n_t, n_cols: n_t + 2, basis: DMatrix::identity(n_t, n_t) }
    }

    /// Orthonormal basis of `span{h_fᴴ, h_uᴴ}`.
    ///
    /// Every SINR, the power and the rate depend on a column only through
    /// `h_f w`, `h_u w` and `‖w‖`, and a component outside this span only
    /// adds power. Restricting the columns to it loses no optimal point.
    pub fn channel_subspace(ch: &ChannelSet) -> Self {
        let n_t = ch.h_f.len();
        let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(2);
        for h in [&ch.h_f, &ch.h_u] {
            let mut v = h.clone();
            let scale = v.norm();
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
            let norm = v.norm();
            if scale > 0.0 && norm > 1e-10 * scale {
                basis.push(v / Complex64::new(norm, 0.0));
            }
        }
        if basis.is_empty() {
            let mut e = DVector::zeros(n_t);
            e[0] = Complex64::new(1.0, 0.0);
            basis.push(e);
        }
        Self { n_t, n_cols: n_t + 2, basis: DMatrix::from_columns(&basis) }
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Complex coordinates per column.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<Complex64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        2 * self.rank() * self.n_cols
    }

    fn re_index(&self, i: usize, c: usize) -> usize {
        c * self.rank() + i
    }

    fn im_index(&self, i: usize, c: usize) -> usize {
        self.dim() / 2 + c * self.rank() + i
    }

    /// Coordinates of the orthogonal projection of `w` onto the basis.
    pub fn to_real(&self, w: &BeamformingMatrix) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        for c in 0..self.n_cols {
            let z = self.basis.ad_mul(&w.column(c));
            for i in 0..self.rank() {
                x[self.re_index(i, c)] = z[i].re;
                x[self.im_index(i, c)] = z[i].im;
            }
        }
        x
    }

    pub fn to_beam(&self, x: &DVector<f64>) -> BeamformingMatrix {
        let r = self.rank();
        let z = DMatrix::from_fn(r, self.n_cols, |i, c| Complex64::new(x[self.re_index(i, c)], x[self.im_index(i, c)]));
        BeamformingMatrix::from_matrix(&self.basis * z).expect("lift produces a valid shape")
    }

    /// Real row vectors `(p, q)` with `Re(h w_c) = p·x` and `Im(h w_c) = q·x`.
    pub fn functional(&self, h: &DVector<Complex64>, c: usize) -> (DVector<f64>, DVector<f64>) {
        let hu = (self.basis.adjoint() * h).map(|z| z.conj());
        let mut p = DVector::zeros(self.dim());
        let mut q = DVector::zeros(self.dim());
        for i in 0..self.rank() {
            let (a, b) = (hu[i].re, hu[i].im);
            let (ri, ii) = (self.re_index(i, c), self.im_index(i, c));
            p[ri] = a;
            p[ii] = -b;
            q[ri] = b;
            q[ii] = a;
        }
        (p, q)
    }
}
