use std::fmt;
use std::str::FromStr;

use super::source::{gaussian_matrix, DataMatrix};
use crate::error::{Error, Result};
use crate::linalg::{householder_qr, pseudoinverse, qrcp};
use crate::Matrix;

/// How the `ℓ x ℓ` compressed matrix is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `D = Q1ᵀ A Q2`, one extra sweep over `A`.
    ExactD,
    /// `D ≈ Q1ᵀ C1 (Q2ᵀ Ψ)†`, where `Ψ` is the block that produced the final
    /// `C1 = A Ψ`. No extra sweep.
    ApproxD,
    /// `D ≈ Q1ᵀ C1 (Q2ᵀ C2)†` using the final row-space sketch `C2`, kept for
    /// comparison; it is not scale-consistent with `D` when `C2 = Aᵀ C1`.
    ApproxDFinalSketch,
}

impl Variant {
    pub fn is_approx(self) -> bool {
        !matches!(self, Variant::ExactD)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::ExactD => "exact-d",
            Variant::ApproxD => "approx-d",
            Variant::ApproxDFinalSketch => "approx-d-final",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-d" | "exact" => Ok(Variant::ExactD),
            "approx-d" | "approx" => Ok(Variant::ApproxD),
            "approx-d-final" => Ok(Variant::ApproxDFinalSketch),
            other => Err(Error::Parse(format!("unknown variant {other:?}"))),
        }
    }
}

/// Arithmetic used for the alternating products `C1 = A C2`, `C2 = Aᵀ C1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PowerScheme {
    /// Products taken on the raw blocks. Spans are formed only at the end, so
    /// directions with `σ_i^(2q+2) < eps * σ_1^(2q+2)` are lost to rounding.
    Plain,
    /// Each block is replaced by its Q factor before the next product. The
    /// column spaces are those of `Plain` in exact arithmetic.
    Orthonormalized,
}

impl FromStr for PowerScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(PowerScheme::Plain),
            "orthonormalized" | "ortho" => Ok(PowerScheme::Orthonormalized),
            other => Err(Error::Parse(format!("unknown power scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SketchConfig {
    /// Sample size `ℓ`.
    pub ell: usize,
    /// Number of power iterations `q`.
    pub q_power: usize,
    pub seed: u64,
    pub variant: Variant,
    pub scheme: PowerScheme,
}

impl SketchConfig {
    pub fn new(ell: usize, q_power: usize, seed: u64) -> Self {
        SketchConfig {
            ell,
            q_power,
            seed,
            variant: Variant::ExactD,
            scheme: PowerScheme::Orthonormalized,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_scheme(mut self, scheme: PowerScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub(crate) fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.ell == 0 || self.ell >= m.min(n) {
            return Err(Error::invalid(format!(
                "sample size ell = {} must satisfy 1 <= ell < min(m, n) = {}",
                self.ell,
                m.min(n)
            )));
        }
        Ok(())
    }
}

/// `A ≈ U T Vᵀ` with orthonormal `U` (`m x ℓ`), `V` (`n x ℓ`) and upper
/// triangular `T` (`ℓ x ℓ`).
#[derive(Debug, Clone)]
pub struct CorUtvFactors {
    pub u: Matrix,
    pub t: Matrix,
    pub v: Matrix,
    pub ell: usize,
    pub q_power: usize,
    pub variant: Variant,
}

impl CorUtvFactors {
    /// `|diag(T)|`, the singular value estimates.
    pub fn singular_value_estimates(&self) -> Vec<f64> {
        self.t.diagonal().iter().map(|d| d.abs()).collect()
    }

    pub fn reconstruct(&self) -> Matrix {
        self.u.matmul(&self.t).and_then(|ut| ut.matmul_t(&self.v)).expect("factor shapes agree")
    }

    /// `U[:, :r] T[:r, :] Vᵀ`.
    pub fn truncated(&self, r: usize) -> Matrix {
        let r = r.min(self.ell);
        let ut = self.u.leading_columns(r).matmul(&self.t.leading_rows(r)).expect("shapes agree");
        ut.matmul_t(&self.v).expect("shapes agree")
    }
}

/// Orthonormal bases for the sketched column and row spaces plus the pieces
/// the approximate compression needs.
pub(crate) struct TwoSidedSketch {
    pub q1: Matrix,
    pub r1: Matrix,
    pub q2: Matrix,
    pub r2: Matrix,
    /// The block `Ψ` with `C1 = A Ψ` for the final `C1`.
    pub psi: Matrix,
}

pub(crate) fn sketch<A: DataMatrix + ?Sized>(a: &A, cfg: &SketchConfig) -> Result<TwoSidedSketch> {
    let (_, n) = a.shape();
    let mut c2 = gaussian_matrix(n, cfg.ell, cfg.seed);
    match cfg.scheme {
        PowerScheme::Plain => {
            let mut psi = c2.clone();
            let mut c1 = Matrix::zeros(0, 0);
            for _ in 0..=cfg.q_power {
                psi = c2;
                c1 = a.apply(&psi)?;
                c2 = a.apply_transpose(&c1)?;
            }
            let f1 = householder_qr(&c1)?;
            let f2 = householder_qr(&c2)?;
            Ok(TwoSidedSketch { q1: f1.q, r1: f1.r, q2: f2.q, r2: f2.r, psi })
        }
        PowerScheme::Orthonormalized => {
            let mut psi = c2;
            let mut out = None;
            for i in 0..=cfg.q_power {
                let f1 = householder_qr(&a.apply(&psi)?)?;
                let f2 = householder_qr(&a.apply_transpose(&f1.q)?)?;
                if i == cfg.q_power {
                    out = Some((f1, f2));
                } else {
                    psi = f2.q;
                }
            }
            let (f1, f2) = out.expect("loop runs at least once");
            Ok(TwoSidedSketch { q1: f1.q, r1: f1.r, q2: f2.q, r2: f2.r, psi })
        }
    }
}

/// The `ℓ x ℓ` compressed matrix for the configured variant.
pub(crate) fn compressed<A: DataMatrix + ?Sized>(
    a: &A,
    s: &TwoSidedSketch,
    variant: Variant,
) -> Result<Matrix> {
    match variant {
        Variant::ExactD => a.compress(&s.q1, &s.q2),
        // Q1ᵀ C1 = R1 since C1 = Q1 R1.
        Variant::ApproxD => s.r1.matmul(&pseudoinverse(&s.q2.t_matmul(&s.psi)?)?),
        Variant::ApproxDFinalSketch => s.r1.matmul(&pseudoinverse(&s.r2)?),
    }
}

/// Compressed randomized UTV with `q` power iterations.
pub fn corutv(a: &Matrix, cfg: &SketchConfig) -> Result<CorUtvFactors> {
    a.ensure_finite("corutv")?;
    corutv_with(a, cfg)
}

/// `corutv` against any [`DataMatrix`], e.g. a pass counter.
pub fn corutv_with<A: DataMatrix + ?Sized>(a: &A, cfg: &SketchConfig) -> Result<CorUtvFactors> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::invalid(format!("corutv requires rows >= cols, got {m}x{n}")));
    }
    cfg.validate(m, n)?;
    corutv_unchecked(a, cfg)
}

pub(crate) fn corutv_unchecked<A: DataMatrix + ?Sized>(
    a: &A,
    cfg: &SketchConfig,
) -> Result<CorUtvFactors> {
    let s = sketch(a, cfg)?;
    let d = compressed(a, &s, cfg.variant)?;
    d.ensure_finite("corutv compressed matrix")?;
    let f = qrcp(&d)?;
    // D P = Q̃ R̃  =>  A ≈ Q1 D Q2ᵀ = (Q1 Q̃) R̃ (Q2 P)ᵀ
    let u = s.q1.matmul(&f.q)?;
    let v = s.q2.select_columns(&f.perm);
    Ok(CorUtvFactors { u, t: f.r, v, ell: cfg.ell, q_power: cfg.q_power, variant: cfg.variant })
}

/// `||A - U T Vᵀ||_F` for the rank-ℓ CoR-UTV approximation.
pub fn corutv_lowrank_error(a: &Matrix, cfg: &SketchConfig) -> Result<f64> {
    let f = corutv(a, cfg)?;
    Ok(a.sub(&f.reconstruct())?.frobenius_norm())
}

/// Rank-`min(m, n)` UTV stand-in: CoR-UTV with the sample size equal to the
/// smaller dimension, exact compression and no power iterations.
pub fn utv_full(a: &Matrix, seed: u64) -> Result<CorUtvFactors> {
    a.ensure_finite("utv_full")?;
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::invalid(format!("utv_full requires rows >= cols, got {m}x{n}")));
    }
    let cfg = SketchConfig::new(n, 0, seed);
    corutv_unchecked(a, &cfg)
}
