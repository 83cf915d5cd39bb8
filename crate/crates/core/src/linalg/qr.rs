use super::{apply_reflector, make_reflector, ColMajor};
use crate::error::{Error, Result};
use crate::Matrix;

/// Thin QR factors: `q` is `m x n` with orthonormal columns, `r` is `n x n`
/// upper triangular. Diagonal signs of `r` are not normalized.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: Matrix,
    pub r: Matrix,
}

/// Thin Householder QR of a tall (`rows >= cols`) matrix.
pub fn householder_qr(a: &Matrix) -> Result<QrFactors> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::invalid(format!(
            "householder_qr requires rows >= cols, got {m}x{n}"
        )));
    }
    a.ensure_finite("householder_qr")?;

    let mut w = ColMajor::from_matrix(a);
    let mut taus = vec![0.0; n];
    let mut r = Matrix::zeros(n, n);

    for j in 0..n {
        let (beta, tau) = make_reflector(&mut w.col_mut(j)[j..]);
        taus[j] = tau;
        r[(j, j)] = beta;
        for c in j + 1..n {
            let (vj, yc) = w.col_pair(j, c);
            apply_reflector(&vj[j..], tau, &mut yc[j..]);
        }
    }
    for j in 0..n {
        for i in 0..j {
            r[(i, j)] = w.col(j)[i];
        }
    }

    let q = accumulate_q(&w, &taus, m, n);
    Ok(QrFactors { q: q.to_matrix(), r })
}

/// Forms the leading `k` columns of `H_0 H_1 ... H_{p-1}` from reflectors
/// stored below the diagonal of `w` (unit leading entry implied).
pub(crate) fn accumulate_q(w: &ColMajor, taus: &[f64], m: usize, k: usize) -> ColMajor {
    let mut q = ColMajor::identity(m, k);
    let mut v = vec![0.0; m];
    for j in (0..taus.len()).rev() {
        let tau = taus[j];
        if tau == 0.0 {
            continue;
        }
        v[j] = 1.0;
        v[j + 1..m].copy_from_slice(&w.col(j)[j + 1..m]);
        for c in j..k {
            apply_reflector(&v[j..m], tau, &mut q.col_mut(c)[j..m]);
        }
    }
    q
}
