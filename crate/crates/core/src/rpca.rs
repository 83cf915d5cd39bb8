//! Robust PCA by augmented Lagrange multipliers: `M = L + S` with low-rank
//! `L` and sparse `S`, minimizing `||L||_* + λ ||S||_1`.
//!
//! Both solvers share one loop and differ only in the low-rank step:
//! CoR-UTV rank truncation for [`alm_corutv`], singular value thresholding
//! on a full SVD for [`inexact_alm`].

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, numerical_rank, spectral_norm};
use crate::randla::{corutv, SketchConfig};
use crate::Matrix;

/// Entries with magnitude at most this are treated as zero in `S`.
pub const SPARSE_ZERO_TOL: f64 = 1e-12;

/// Entrywise soft thresholding `sgn(x) max(|x| - δ, 0)`. `delta` must be
/// non-negative.
pub fn shrink(x: &Matrix, delta: f64) -> Matrix {
    debug_assert!(delta >= 0.0);
    x.map(|v| shrink_scalar(v, delta))
}

#[inline]
fn shrink_scalar(v: f64, delta: f64) -> f64 {
    if v > delta {
        v - delta
    } else if v < -delta {
        v + delta
    } else {
        0.0
    }
}

/// A thresholded matrix together with its singular values (descending), so
/// the rank can be read without another SVD.
struct LowRankStep {
    l: Matrix,
    sigma: Vec<f64>,
    kept: usize,
}

/// CoR-UTV rank truncation: keeps `U[:, :r] T[:r, :] Vᵀ` where `r` counts
/// `|diag(T)| > delta`. Wide inputs are factored through the transpose.
pub fn corutv_threshold(b: &Matrix, delta: f64, cfg: &SketchConfig) -> Result<(Matrix, usize)> {
    let step = corutv_step(b, delta, cfg)?;
    Ok((step.l, step.kept))
}

fn corutv_step(b: &Matrix, delta: f64, cfg: &SketchConfig) -> Result<LowRankStep> {
    if b.rows() < b.cols() {
        let mut step = corutv_step(&b.transpose(), delta, cfg)?;
        step.l = step.l.transpose();
        return Ok(step);
    }
    let f = corutv(b, cfg)?;
    let r = f.singular_value_estimates().iter().filter(|&&d| d > delta).count();
    if r == 0 {
        return Ok(LowRankStep { l: Matrix::zeros(b.rows(), b.cols()), sigma: Vec::new(), kept: 0 });
    }
    // U and V are orthonormal, so L shares its singular values with T[:r, :].
    let sigma = jacobi_svd(&f.t.leading_rows(r))?.sigma;
    Ok(LowRankStep { l: f.truncated(r), sigma, kept: r })
}

/// Singular value thresholding `U_B S_δ(Σ_B) V_Bᵀ` through a full SVD.
pub fn svt(b: &Matrix, delta: f64) -> Result<(Matrix, usize)> {
    let step = svt_step(b, delta)?;
    Ok((step.l, step.kept))
}

fn svt_step(b: &Matrix, delta: f64) -> Result<LowRankStep> {
    let f = jacobi_svd(b)?;
    let sigma: Vec<f64> = f.sigma.iter().map(|&s| s - delta).take_while(|&s| s > 0.0).collect();
    let r = sigma.len();
    if r == 0 {
        return Ok(LowRankStep { l: Matrix::zeros(b.rows(), b.cols()), sigma, kept: 0 });
    }
    let mut us = f.u.leading_columns(r);
    for i in 0..us.rows() {
        for (j, s) in sigma.iter().enumerate() {
            us[(i, j)] *= s;
        }
    }
    let l = us.matmul_t(&f.v.leading_columns(r))?;
    Ok(LowRankStep { l, sigma, kept: r })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlmConfig {
    /// Weight of `||S||_1`.
    pub lambda: f64,
    /// Initial penalty.
    pub mu0: f64,
    /// Penalty growth factor.
    pub rho: f64,
    /// Penalty cap.
    pub mu_bar: f64,
    /// Stop once `||M - L - S||_F <= tol ||M||_F`.
    pub tol: f64,
    pub max_iter: usize,
    /// CoR-UTV sample size, ignored by [`inexact_alm`].
    pub ell: usize,
    /// CoR-UTV power iterations, ignored by [`inexact_alm`].
    pub q_power: usize,
    /// Iteration `j` (from 0) draws its sketch from `seed + j`.
    pub seed: u64,
}

impl AlmConfig {
    /// Defaults for `m` with target rank `k`: `λ = 1/√max(m, n)`,
    /// `μ0 = 1.25/||M||_2`, `ρ = 1.5`, `μ̄ = 1e7 μ0`, `tol = 1e-5`,
    /// `max_iter = 1000`, `ℓ = 2k`, `q = 1`.
    pub fn for_matrix(m: &Matrix, rank: usize) -> Result<AlmConfig> {
        let (rows, cols) = m.shape();
        let norm = spectral_norm(m)?;
        // A zero input converges immediately; any finite penalty will do.
        let mu0 = if norm > 0.0 { 1.25 / norm } else { 1.0 };
        Ok(AlmConfig {
            lambda: 1.0 / (rows.max(cols) as f64).sqrt(),
            mu0,
            rho: 1.5,
            mu_bar: 1e7 * mu0,
            tol: 1e-5,
            max_iter: 1000,
            ell: 2 * rank,
            q_power: 1,
            seed: 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.lambda) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !positive(self.mu0) {
            return Err(Error::invalid(format!("mu0 must be positive, got {}", self.mu0)));
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("rho must exceed 1, got {}", self.rho)));
        }
        if !(self.mu_bar >= self.mu0 && self.mu_bar.is_finite()) {
            return Err(Error::invalid(format!("mu_bar {} is below mu0 {}", self.mu_bar, self.mu0)));
        }
        if !positive(self.tol) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Which low-rank step the ALM loop uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    AlmCorutv,
    InexactAlm,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::AlmCorutv => "alm-corutv",
            Solver::InexactAlm => "inexact-alm",
        }
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alm-corutv" => Ok(Solver::AlmCorutv),
            "inexact-alm" => Ok(Solver::InexactAlm),
            other => Err(Error::Parse(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iter: usize,
    pub zeta: f64,
    /// Number of singular values kept by the low-rank step.
    pub rank_l: usize,
    pub nnz_s: usize,
    /// Penalty used during this iteration.
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct RpcaSolution {
    pub l: Matrix,
    pub s: Matrix,
    pub iterations: usize,
    /// `ζ_j = ||M - L_j - S_j||_F / ||M||_F` per iteration.
    pub residuals: Vec<f64>,
    /// Singular values of `L` above `max(m, n) σ_max 1e-12`.
    pub rank_of_l: usize,
    /// Entries of `S` with magnitude above [`SPARSE_ZERO_TOL`].
    pub nnz_of_s: usize,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

impl RpcaSolution {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    /// Per-iteration telemetry as CSV with header `iter,zeta,rank_l,nnz_s,mu`.
    pub fn write_telemetry<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,zeta,rank_l,nnz_s,mu")?;
        for r in &self.history {
            writeln!(w, "{},{:e},{},{},{:e}", r.iter, r.zeta, r.rank_l, r.nnz_s, r.mu)?;
        }
        Ok(())
    }
}

/// ALM with CoR-UTV thresholding. Fails with [`Error::NotConverged`] if the
/// residual is still above `tol` after `max_iter` iterations.
pub fn alm_corutv(m: &Matrix, cfg: &AlmConfig) -> Result<RpcaSolution> {
    require_converged(solve(m, cfg, Solver::AlmCorutv)?)
}

/// ALM with full-SVD singular value thresholding.
pub fn inexact_alm(m: &Matrix, cfg: &AlmConfig) -> Result<RpcaSolution> {
    require_converged(solve(m, cfg, Solver::InexactAlm)?)
}

fn require_converged(sol: RpcaSolution) -> Result<RpcaSolution> {
    if sol.converged {
        Ok(sol)
    } else {
        Err(Error::NotConverged { iterations: sol.iterations, residuals: sol.residuals })
    }
}

/// Runs the ALM loop and returns the last iterate whether or not it met the
/// tolerance; check [`RpcaSolution::converged`].
pub fn solve(m: &Matrix, cfg: &AlmConfig, solver: Solver) -> Result<RpcaSolution> {
    m.ensure_finite("rpca input")?;
    cfg.validate()?;
    if solver == Solver::AlmCorutv {
        SketchConfig::new(cfg.ell, cfg.q_power, cfg.seed).validate(m.rows(), m.cols())?;
    }
    let norm_m = m.frobenius_norm();
    let mut state = AlmState::new(m.rows(), m.cols(), cfg.mu0);
    let mut history = Vec::new();
    let mut sigma_l = Vec::new();
    let mut converged = false;

    for j in 0..cfg.max_iter {
        let mu = state.mu;
        let (step, residual) = state.step(m, cfg, solver, j)?;
        let zeta = if norm_m > 0.0 { residual / norm_m } else { residual };
        if !zeta.is_finite() {
            return Err(Error::NonFinite { op: "rpca residual" });
        }
        sigma_l = step.sigma;
        history.push(IterationRecord {
            iter: j + 1,
            zeta,
            rank_l: step.kept,
            nnz_s: state.s.count_nonzero(SPARSE_ZERO_TOL),
            mu,
        });
        if zeta <= cfg.tol {
            converged = true;
            break;
        }
        state.mu = (cfg.rho * state.mu).min(cfg.mu_bar);
    }

    let (rows, cols) = m.shape();
    Ok(RpcaSolution {
        rank_of_l: numerical_rank(&sigma_l, rows, cols),
        nnz_of_s: state.s.count_nonzero(SPARSE_ZERO_TOL),
        iterations: history.len(),
        residuals: history.iter().map(|r| r.zeta).collect(),
        l: state.l,
        s: state.s,
        history,
        converged,
    })
}

struct AlmState {
    l: Matrix,
    s: Matrix,
    y: Matrix,
    mu: f64,
}

impl AlmState {
    fn new(rows: usize, cols: usize, mu0: f64) -> Self {
        AlmState {
            l: Matrix::zeros(rows, cols),
            s: Matrix::zeros(rows, cols),
            y: Matrix::zeros(rows, cols),
            mu: mu0,
        }
    }

    /// One sweep of L, S and Y updates at the current `mu`; returns the
    /// low-rank step and `||M - L - S||_F`.
    fn step(&mut self, m: &Matrix, cfg: &AlmConfig, solver: Solver, j: usize) -> Result<(LowRankStep, f64)> {
        let inv_mu = 1.0 / self.mu;

        // L = C_{1/μ}(M - S + Y/μ)
        let mut target = m.sub(&self.s)?;
        target.axpy(inv_mu, &self.y)?;
        let step = match solver {
            Solver::AlmCorutv => {
                let sk = SketchConfig::new(cfg.ell, cfg.q_power, cfg.seed.wrapping_add(j as u64));
                corutv_step(&target, inv_mu, &sk)?
            }
            Solver::InexactAlm => svt_step(&target, inv_mu)?,
        };
        self.l = step.l.clone();

        // S = shrink(M - L + Y/μ, λ/μ)
        let mut target = m.sub(&self.l)?;
        target.axpy(inv_mu, &self.y)?;
        self.s = shrink(&target, cfg.lambda * inv_mu);

        // Y += μ (M - L - S)
        let z = m.sub(&self.l)?.sub(&self.s)?;
        self.y.axpy(self.mu, &z)?;
        Ok((step, z.frobenius_norm()))
    }
}
