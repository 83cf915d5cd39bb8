//! Deterministic dense kernels: Householder QR, column-pivoted QR, one-sided
//! Jacobi SVD, the Moore–Penrose pseudoinverse and matrix norms.

mod qr;
mod qrcp;
mod svd;

pub use qr::{householder_qr, QrFactors};
pub use qrcp::{qrcp, QrcpFactors};
pub use svd::{
    frobenius_norm, jacobi_svd, numerical_rank, pseudoinverse, spectral_norm, spectral_norm_power,
    SvdFactors,
};

/// Column-major scratch storage used by the kernels: column `j` occupies
/// `data[j * rows..(j + 1) * rows]`.
pub(crate) struct ColMajor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ColMajor {
    pub fn from_matrix(a: &crate::Matrix) -> Self {
        let (rows, cols) = a.shape();
        let src = a.as_slice();
        let mut data = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                data[j * rows + i] = src[i * cols + j];
            }
        }
        ColMajor { rows, cols, data }
    }

    pub fn identity(rows: usize, cols: usize) -> Self {
        let mut data = vec![0.0; rows * cols];
        for j in 0..cols.min(rows) {
            data[j * rows + j] = 1.0;
        }
        ColMajor { rows, cols, data }
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Mutable views of two distinct columns, `p < q`.
    #[inline]
    pub fn col_pair(&mut self, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(p < q);
        let m = self.rows;
        let (lo, hi) = self.data.split_at_mut(q * m);
        (&mut lo[p * m..(p + 1) * m], &mut hi[..m])
    }

    pub fn swap_cols(&mut self, p: usize, q: usize) {
        if p == q {
            return;
        }
        let (a, b) = self.col_pair(p.min(q), p.max(q));
        a.swap_with_slice(b);
    }

    pub fn to_matrix(&self) -> crate::Matrix {
        crate::Matrix::from_fn(self.rows, self.cols, |i, j| self.data[j * self.rows + i])
    }
}

/// Dot product with four independent accumulators; fixed summation order.
#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = [0.0f64; 4];
    let chunks = x.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += x[i] * y[i];
        acc[1] += x[i + 1] * y[i + 1];
        acc[2] += x[i + 2] * y[i + 2];
        acc[3] += x[i + 3] * y[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..x.len() {
        tail += x[i] * y[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Householder reflector for `x`: returns `(beta, tau)` with `x[0]`
/// overwritten by `1`, the tail holding `v[1..]`, and `(I - tau v vᵀ) x =
/// beta e_1`. A zero vector yields `tau = 0`.
pub(crate) fn make_reflector(x: &mut [f64]) -> (f64, f64) {
    let norm = dot(x, x).sqrt();
    if norm == 0.0 {
        x[0] = 1.0;
        return (0.0, 0.0);
    }
    let x0 = x[0];
    let beta = if x0 >= 0.0 { -norm } else { norm };
    let v0 = x0 - beta;
    for xi in x[1..].iter_mut() {
        *xi /= v0;
    }
    x[0] = 1.0;
    let tau = (beta - x0) / beta;
    (beta, tau)
}

/// `y -= tau * (vᵀ y) v`.
#[inline]
pub(crate) fn apply_reflector(v: &[f64], tau: f64, y: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let w = tau * dot(v, y);
    for (yi, vi) in y.iter_mut().zip(v) {
        *yi -= w * vi;
    }
}
