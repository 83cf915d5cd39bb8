//! Randomized low-rank decompositions.
//!
//! [`corutv`] computes the compressed randomized UTV factorization
//! `A ≈ U T Vᵀ` from two-sided Gaussian sketches refined by `q` power
//! iterations. The baselines share the same sketching front end where the
//! methods coincide, so comparisons isolate the small-matrix factorization.

mod baselines;
mod corutv;
mod flops;
mod source;

pub use baselines::{qrcp_lowrank, sor_svd, sor_svd_with, truncated_svd, tsr_svd, tsr_svd_with};
pub use corutv::{
    corutv, corutv_lowrank_error, corutv_with, utv_full, CorUtvFactors, PowerScheme, SketchConfig,
    Variant,
};
pub use flops::{
    alm_corutv_iteration_flops, corutv_passes, flop_estimate, inexact_alm_iteration_flops,
    qrcp_flops, sor_svd_flops, svd_flops, tsr_svd_flops,
};
pub use source::{
    count_passes, gaussian_from_rng, gaussian_matrix, rng_from_seed, DataMatrix, PassCounter,
    SketchRng,
};
