use super::qr::accumulate_q;
use super::{apply_reflector, dot, make_reflector, ColMajor};
use crate::error::Result;
use crate::Matrix;

/// Column-pivoted QR: `a[:, perm] = q * r`.
///
/// For an `m x n` input with `p = min(m, n)`, `q` is `m x p` and `r` is
/// `p x n` upper trapezoidal with non-increasing `|r[i, i]|`.
#[derive(Debug, Clone)]
pub struct QrcpFactors {
    pub q: Matrix,
    pub r: Matrix,
    /// Column `j` of `q * r` is column `perm[j]` of the input.
    pub perm: Vec<usize>,
}

impl QrcpFactors {
    /// The permutation as an `n x n` matrix `P` with `a * P = q * r`.
    pub fn permutation_matrix(&self) -> Matrix {
        let n = self.perm.len();
        let mut p = Matrix::zeros(n, n);
        for (j, &src) in self.perm.iter().enumerate() {
            p[(src, j)] = 1.0;
        }
        p
    }

    /// `|r[i, i]|`, the rank-revealing diagonal.
    pub fn abs_diagonal(&self) -> Vec<f64> {
        self.r.diagonal().iter().map(|v| v.abs()).collect()
    }
}

/// Businger–Golub QR with column pivoting.
///
/// At step `j` the remaining column with the largest residual 2-norm is moved
/// to position `j`; ties go to the lowest column index. Residual norms are
/// recomputed at every step rather than downdated.
pub fn qrcp(a: &Matrix) -> Result<QrcpFactors> {
    a.ensure_finite("qrcp")?;
    let (m, n) = a.shape();
    let p = m.min(n);

    let mut w = ColMajor::from_matrix(a);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut taus = vec![0.0; p];
    let mut diag = vec![0.0; p];

    for j in 0..p {
        let mut best = j;
        let mut best_norm = -1.0;
        for c in j..n {
            let tail = &w.col(c)[j..];
            let nrm = dot(tail, tail);
            if nrm > best_norm {
                best_norm = nrm;
                best = c;
            }
        }
        w.swap_cols(j, best);
        perm.swap(j, best);

        let (beta, tau) = make_reflector(&mut w.col_mut(j)[j..]);
        taus[j] = tau;
        diag[j] = beta;
        for c in j + 1..n {
            let (vj, yc) = w.col_pair(j, c);
            apply_reflector(&vj[j..], tau, &mut yc[j..]);
        }
    }

    let mut r = Matrix::zeros(p, n);
    for j in 0..n {
        for i in 0..p.min(j) {
            r[(i, j)] = w.col(j)[i];
        }
        if j < p {
            r[(j, j)] = diag[j];
        }
    }
    let q = accumulate_q(&w, &taus, m, p).to_matrix();
    Ok(QrcpFactors { q, r, perm })
}
