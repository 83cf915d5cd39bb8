//! Comparison methods: two-sided single-pass randomized SVD (TSR-SVD),
//! subspace-orbit randomized SVD (SOR-SVD), truncated SVD and truncated QRCP.

use super::corutv::{compressed, sketch, SketchConfig};
use super::source::{gaussian_from_rng, rng_from_seed, DataMatrix};
use crate::error::{Error, Result};
use crate::linalg::{householder_qr, jacobi_svd, QrcpFactors, SvdFactors};
use crate::Matrix;

/// Single-pass two-sided randomized SVD.
///
/// Draws `Ψ` (`n x ℓ`) then `Φ` (`m x ℓ`) from the configured seed, gathers
/// `Y = A Ψ` and `Z = Aᵀ Φ` in one sweep, and recovers `B ≈ Qᵀ A P` from
/// both sketch equations `B (PᵀΨ) = QᵀY` and `Bᵀ (QᵀΦ) = PᵀZ` in the
/// least-squares sense. `q_power` and `variant` are ignored.
pub fn tsr_svd(a: &Matrix, cfg: &SketchConfig) -> Result<SvdFactors> {
    a.ensure_finite("tsr_svd")?;
    tsr_svd_with(a, cfg)
}

pub fn tsr_svd_with<A: DataMatrix + ?Sized>(a: &A, cfg: &SketchConfig) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    cfg.validate(m, n)?;
    let mut rng = rng_from_seed(cfg.seed);
    let psi = gaussian_from_rng(&mut rng, n, cfg.ell);
    let phi = gaussian_from_rng(&mut rng, m, cfg.ell);

    let (y, z) = a.sketch_both(&psi, &phi)?;
    let q = householder_qr(&y)?.q;
    let p = householder_qr(&z)?.q;

    let x1 = p.t_matmul(&psi)?;
    let y1 = q.t_matmul(&y)?;
    let x2 = q.t_matmul(&phi)?;
    let y2 = p.t_matmul(&z)?;
    let b = two_sided_least_squares(&x1, &y1, &x2, &y2)?;

    let f = jacobi_svd(&b)?;
    Ok(SvdFactors { u: q.matmul(&f.u)?, sigma: f.sigma, v: p.matmul(&f.v)? })
}

/// Minimizes `||B X1 - Y1||_F² + ||Bᵀ X2 - Y2||_F²` over square `B`.
///
/// The normal equations are the Sylvester equation
/// `(X2 X2ᵀ) B + B (X1 X1ᵀ) = Y1 X1ᵀ + X2 Y2ᵀ`, which decouples in the left
/// singular bases of `X1` and `X2`.
fn two_sided_least_squares(x1: &Matrix, y1: &Matrix, x2: &Matrix, y2: &Matrix) -> Result<Matrix> {
    let rhs = y1.matmul_t(x1)?.add(&x2.matmul_t(y2)?)?;
    let s1 = jacobi_svd(x1)?;
    let s2 = jacobi_svd(x2)?;
    let l = rhs.rows();
    let mut c = s2.u.t_matmul(&rhs)?.matmul(&s1.u)?;
    let scale = s1.sigma.first().copied().unwrap_or(0.0).powi(2) + s2.sigma.first().copied().unwrap_or(0.0).powi(2);
    for i in 0..l {
        for j in 0..l {
            let lam2 = s2.sigma.get(i).copied().unwrap_or(0.0).powi(2);
            let lam1 = s1.sigma.get(j).copied().unwrap_or(0.0).powi(2);
            let den = lam2 + lam1;
            c[(i, j)] = if den > scale * 1e-24 { c[(i, j)] / den } else { 0.0 };
        }
    }
    s2.u.matmul(&c)?.matmul_t(&s1.u)
}

/// Same sketch and compression as CoR-UTV, followed by an SVD of the
/// compressed matrix instead of a pivoted QR.
pub fn sor_svd(a: &Matrix, cfg: &SketchConfig) -> Result<SvdFactors> {
    a.ensure_finite("sor_svd")?;
    sor_svd_with(a, cfg)
}

pub fn sor_svd_with<A: DataMatrix + ?Sized>(a: &A, cfg: &SketchConfig) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::invalid(format!("sor_svd requires rows >= cols, got {m}x{n}")));
    }
    cfg.validate(m, n)?;
    let s = sketch(a, cfg)?;
    let d = compressed(a, &s, cfg.variant)?;
    d.ensure_finite("sor_svd compressed matrix")?;
    let f = jacobi_svd(&d)?;
    Ok(SvdFactors { u: s.q1.matmul(&f.u)?, sigma: f.sigma, v: s.q2.matmul(&f.v)? })
}

/// Leading `k` triplets of the full Jacobi SVD.
pub fn truncated_svd(a: &Matrix, k: usize) -> Result<SvdFactors> {
    Ok(jacobi_svd(a)?.truncate(k))
}

/// Rank-`k` approximation `Q[:, :k] R[:k, :] Pᵀ` from a full QRCP.
pub fn qrcp_lowrank(f: &QrcpFactors, k: usize) -> Result<Matrix> {
    let k = k.min(f.r.rows());
    let qr = f.q.leading_columns(k).matmul(&f.r.leading_rows(k))?;
    let mut out = Matrix::zeros(qr.rows(), qr.cols());
    for i in 0..qr.rows() {
        for (j, &src) in f.perm.iter().enumerate() {
            out[(i, src)] = qr[(i, j)];
        }
    }
    Ok(out)
}
