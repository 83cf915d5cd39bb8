//! Closed-form flop models.

use super::corutv::Variant;

/// Sweeps over `A` made by CoR-UTV: `2q + 3` with the exact compressed
/// matrix, `2q + 2` with the approximated one.
pub fn corutv_passes(q_power: usize, variant: Variant) -> usize {
    if variant.is_approx() {
        2 * q_power + 2
    } else {
        2 * q_power + 3
    }
}

/// Flop count of CoR-UTV on an `m x n` input.
///
/// Itemized cost of the basic scheme:
///
/// | step | work | flops |
/// |------|------|-------|
/// | 1 | draw `Ψ` | `nℓ` |
/// | 2 | `C1 = AΨ` | `2mnℓ` |
/// | 3 | `C2 = AᵀC1` | `2mnℓ` |
/// | 4 | QR of `C1`, `C2` | `2mℓ² + 2nℓ²` |
/// | 5 | `D = Q1ᵀAQ2` | `mℓ² + 2mnℓ` |
/// | 5' | `D_approx` | `2mℓ² + 2nℓ² + 3ℓ³` |
/// | 6 | QRCP of `D` | `8ℓ³/3` (rounded down) |
/// | 7 | `U = Q1Q̃`, `V = Q2P̃` | `2mℓ² + 2nℓ` |
///
/// Power iterations add `2mnℓ` per extra sweep, so the `2mnℓ` products are
/// counted `2q + 3` (exact) or `2q + 2` (approximated) times.
pub fn flop_estimate(m: usize, n: usize, ell: usize, q_power: usize, variant: Variant) -> u64 {
    let (m, n, l) = (m as u128, n as u128, ell as u128);
    let sweeps = corutv_passes(q_power, variant) as u128;
    let products = sweeps * 2 * m * n * l;
    let draw = n * l;
    let qr = 2 * m * l * l + 2 * n * l * l;
    let compress_extra = if variant.is_approx() {
        2 * m * l * l + 2 * n * l * l + 3 * l * l * l
    } else {
        m * l * l
    };
    let pivoted_qr = 8 * l * l * l / 3;
    let assemble = 2 * m * l * l + 2 * n * l;
    saturate(products + draw + qr + compress_extra + pivoted_qr + assemble)
}

/// Thin SVD with both singular factors (Golub–Reinsch, `m >= n`):
/// `14mn² + 8n³`.
pub fn svd_flops(m: usize, n: usize) -> u64 {
    let (m, n) = if m >= n { (m as u128, n as u128) } else { (n as u128, m as u128) };
    saturate(14 * m * n * n + 8 * n * n * n)
}

/// Householder QR with column pivoting plus the thin `Q`, `m >= n`:
/// `4mn² - 4n³/3`.
pub fn qrcp_flops(m: usize, n: usize) -> u64 {
    let (m, n) = if m >= n { (m as u128, n as u128) } else { (n as u128, m as u128) };
    saturate(4 * m * n * n - 4 * n * n * n / 3)
}

/// Single-pass TSR-SVD: the two sketches, two thin QRs, the small
/// least-squares solve and SVD, and lifting both factors.
pub fn tsr_svd_flops(m: usize, n: usize, ell: usize) -> u64 {
    let (m, n, l) = (m as u128, n as u128, ell as u128);
    let draw = m * l + n * l;
    let sketch = 4 * m * n * l;
    let qr = 2 * m * l * l + 2 * n * l * l;
    let small = 4 * m * l * l + 4 * n * l * l + 3 * svd_flops(ell, ell) as u128;
    let lift = 2 * m * l * l + 2 * n * l * l;
    saturate(draw + sketch + qr + small + lift)
}

/// SOR-SVD: the CoR-UTV pipeline with an `ℓ x ℓ` SVD in place of the
/// pivoted QR.
pub fn sor_svd_flops(m: usize, n: usize, ell: usize, q_power: usize, variant: Variant) -> u64 {
    let l = ell as u128;
    let base = flop_estimate(m, n, ell, q_power, variant) as u128 - 8 * l * l * l / 3;
    saturate(base + svd_flops(ell, ell) as u128 + 2 * (n as u128) * l * l)
}

/// One ALM iteration built on CoR-UTV thresholding: the decomposition, the
/// rank-`r` product `U[:, :r] T[:r, :] Vᵀ` and about ten entrywise passes.
pub fn alm_corutv_iteration_flops(m: usize, n: usize, ell: usize, q_power: usize, rank: usize) -> u64 {
    let (mm, nn, l, r) = (m as u128, n as u128, ell as u128, rank as u128);
    let product = 2 * mm * r * l + 2 * mm * nn * l;
    saturate(flop_estimate(m, n, ell, q_power, Variant::ExactD) as u128 + product + 10 * mm * nn)
}

/// One ALM iteration built on full-SVD thresholding.
pub fn inexact_alm_iteration_flops(m: usize, n: usize, rank: usize) -> u64 {
    let (mm, nn, r) = (m as u128, n as u128, rank as u128);
    let product = 2 * mm * nn * r;
    saturate(svd_flops(m, n) as u128 + product + 10 * mm * nn)
}

fn saturate(x: u128) -> u64 {
    u64::try_from(x).unwrap_or(u64::MAX)
}
