use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{dot, qrcp, ColMajor};
use crate::error::{Error, Result};
use crate::Matrix;

/// Relative off-diagonal threshold `|a_pᵀ a_q| / (|a_p| |a_q|)`.
const ORTHO_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;
const PINV_RTOL: f64 = 1e-12;
/// Inputs with `min(rows, cols)` above this use power iteration for the
/// spectral norm.
const SPECTRAL_JACOBI_LIMIT: usize = 256;

/// Thin SVD `a = u * diag(sigma) * vᵀ` with `p = min(m, n)` components,
/// `sigma` sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> Matrix {
        self.truncated(self.sigma.len())
    }

    /// `u[:, :k] diag(sigma[:k]) v[:, :k]ᵀ`.
    pub fn truncated(&self, k: usize) -> Matrix {
        let k = k.min(self.sigma.len());
        let mut us = self.u.leading_columns(k);
        for i in 0..us.rows() {
            for j in 0..k {
                us[(i, j)] *= self.sigma[j];
            }
        }
        us.matmul_t(&self.v.leading_columns(k)).expect("factor shapes agree")
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(self, k: usize) -> SvdFactors {
        let k = k.min(self.sigma.len());
        SvdFactors {
            u: self.u.leading_columns(k),
            sigma: self.sigma[..k].to_vec(),
            v: self.v.leading_columns(k),
        }
    }
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Tall and square inputs are first reduced by a column-pivoted QR and the
/// Jacobi sweeps run on `Rᵀ`; wide inputs are handled through the transpose.
pub fn jacobi_svd(a: &Matrix) -> Result<SvdFactors> {
    a.ensure_finite("jacobi_svd")?;
    let (m, n) = a.shape();
    if m < n {
        let t = jacobi_svd(&a.transpose())?;
        return Ok(SvdFactors { u: t.v, sigma: t.sigma, v: t.u });
    }
    if n == 0 {
        return Ok(SvdFactors { u: Matrix::zeros(m, 0), sigma: vec![], v: Matrix::zeros(0, 0) });
    }

    // A P = Q R  and  Rᵀ = X Σ Yᵀ  give  A = (Q Y) Σ (P X)ᵀ.
    let f = qrcp(a)?;
    let rt = f.r.transpose();
    let (x, sigma, y) = one_sided_jacobi(ColMajor::from_matrix(&rt))?;
    let u = f.q.matmul(&y)?;
    let mut v = Matrix::zeros(n, n);
    for (j, &src) in f.perm.iter().enumerate() {
        for c in 0..n {
            v[(src, c)] = x[(j, c)];
        }
    }
    Ok(SvdFactors { u, sigma, v })
}

/// Orthogonalizes the columns of `w` (`m x n`, `m >= n`) by plane rotations.
/// Returns `(u, sigma, v)` sorted by decreasing `sigma`.
fn one_sided_jacobi(mut w: ColMajor) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let (m, n) = (w.rows, w.cols);
    let mut v = ColMajor::identity(n, n);
    let mut norms: Vec<f64> = (0..n).map(|j| dot(w.col(j), w.col(j))).collect();

    let mut converged = false;
    let mut residual = 0.0;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        residual = 0.0f64;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (cp, cq) = w.col_pair(p, q);
                let gamma = dot(cp, cq);
                let off = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                residual = residual.max(off);
                if off <= ORTHO_TOL {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(cp, cq, c, s);
                norms[p] = alpha - t * gamma;
                norms[q] = beta + t * gamma;
                let (vp, vq) = v.col_pair(p, q);
                rotate(vp, vq, c, s);
            }
        }
        for (j, nrm) in norms.iter_mut().enumerate() {
            *nrm = dot(w.col(j), w.col(j));
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence { sweeps: MAX_SWEEPS, residual });
    }

    let sigma_raw: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma_raw[j].total_cmp(&sigma_raw[i]));

    let sigma: Vec<f64> = order.iter().map(|&j| sigma_raw[j]).collect();
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        if sigma[k] > 0.0 {
            ucols.push(w.col(j).iter().map(|x| x / sigma[k]).collect());
        } else {
            ucols.push(vec![0.0; m]);
            missing.push(k);
        }
    }
    if !missing.is_empty() {
        complete_basis(&mut ucols, &missing, m);
    }
    let u = Matrix::from_columns(m, &ucols);
    let vm = Matrix::from_fn(n, n, |i, k| v.col(order[k])[i]);
    Ok((u, sigma, vm))
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi;
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// Fills the columns listed in `missing` with unit vectors orthogonal to all
/// other columns, using twice-iterated Gram–Schmidt on coordinate vectors.
fn complete_basis(cols: &mut [Vec<f64>], missing: &[usize], m: usize) {
    let mut filled: Vec<usize> = (0..cols.len()).filter(|k| !missing.contains(k)).collect();
    let mut candidate = 0usize;
    for &k in missing {
        loop {
            assert!(candidate < m, "cannot complete an orthonormal basis");
            let mut x = vec![0.0; m];
            x[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for &f in &filled {
                    let proj = dot(&cols[f], &x);
                    for (xi, ci) in x.iter_mut().zip(&cols[f]) {
                        *xi -= proj * ci;
                    }
                }
            }
            let nrm = dot(&x, &x).sqrt();
            if nrm > 0.5 {
                cols[k] = x.into_iter().map(|v| v / nrm).collect();
                filled.push(k);
                break;
            }
        }
    }
}

/// Number of singular values above `max(rows, cols) * sigma_max * 1e-12`.
pub fn numerical_rank(sigma: &[f64], rows: usize, cols: usize) -> usize {
    let smax = sigma.iter().fold(0.0f64, |m, &s| m.max(s));
    let tol = rows.max(cols) as f64 * smax * PINV_RTOL;
    sigma.iter().filter(|&&s| s > tol).count()
}

/// Moore–Penrose pseudoinverse through the Jacobi SVD. Singular values at or
/// below `max(rows, cols) * sigma_max * 1e-12` are treated as zero.
pub fn pseudoinverse(a: &Matrix) -> Result<Matrix> {
    let (m, n) = a.shape();
    let f = jacobi_svd(a)?;
    let r = numerical_rank(&f.sigma, m, n);
    // V_r diag(1/sigma_r) U_rᵀ
    let mut vs = f.v.leading_columns(r);
    for i in 0..vs.rows() {
        for j in 0..r {
            vs[(i, j)] /= f.sigma[j];
        }
    }
    vs.matmul_t(&f.u.leading_columns(r))
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    a.frobenius_norm()
}

/// Largest singular value. Small inputs use the Jacobi SVD; larger ones use
/// power iteration on `AᵀA` with relative tolerance `1e-10`.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    a.ensure_finite("spectral_norm")?;
    if a.rows().min(a.cols()) <= SPECTRAL_JACOBI_LIMIT {
        Ok(jacobi_svd(a)?.sigma.first().copied().unwrap_or(0.0))
    } else {
        Ok(spectral_norm_power(a, 1e-10, 10_000))
    }
}

/// Power iteration estimate of `||a||_2`, stopping when successive estimates
/// agree to `rtol` or after `max_iter` steps. The start vector is a fixed
/// seeded Gaussian so the result is reproducible.
pub fn spectral_norm_power(a: &Matrix, rtol: f64, max_iter: usize) -> f64 {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed0f_5bec);
    let x0: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut x = Matrix::new(n, 1, x0).expect("length n");
    let nx = x.frobenius_norm();
    x = x.scale(1.0 / nx);

    let mut est = 0.0;
    for _ in 0..max_iter {
        let y = a.matmul(&x).expect("shapes agree");
        let new_est = y.frobenius_norm();
        if new_est == 0.0 {
            return 0.0;
        }
        let z = a.t_matmul(&y).expect("shapes agree");
        let nz = z.frobenius_norm();
        x = z.scale(1.0 / nz);
        if (new_est - est).abs() <= rtol * new_est {
            return new_est;
        }
        est = new_est;
    }
    est
}
