//! Seeded synthetic inputs: noisy matrices with a planted rank-`k` spectrum,
//! and low-rank plus sparse robust-PCA instances.

use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, spectral_norm_power};
use crate::randla::{gaussian_from_rng, rng_from_seed};
use crate::Matrix;

/// How the Gaussian noise matrix `E` is scaled before use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseNormalization {
    /// `||E||_2 = 1`.
    Spectral,
    /// `||E||_F = 1`.
    Frobenius,
    /// Entries `N(0, 1/n)`.
    EntryScaled,
}

impl FromStr for NoiseNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Self::Spectral),
            "frobenius" => Ok(Self::Frobenius),
            "entry" | "entry-scaled" => Ok(Self::EntryScaled),
            other => Err(Error::Parse(format!("unknown noise normalization {other:?}"))),
        }
    }
}

/// `A = U Σ Vᵀ + c σ_k E` with `σ_1..σ_k` spaced linearly from `sigma_max`
/// down to `sigma_min` and `σ_{k+1} = ... = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyLowRankSpec {
    pub n: usize,
    pub k: usize,
    pub noise_coeff: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub normalization: NoiseNormalization,
    pub seed: u64,
}

impl NoisyLowRankSpec {
    /// Order `n`, rank `k`, noise `0.1 σ_k ||E||`, spectrum from `1` to `1e-9`.
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        NoisyLowRankSpec {
            n,
            k,
            noise_coeff: 0.1,
            sigma_max: 1.0,
            sigma_min: 1e-9,
            normalization: NoiseNormalization::Spectral,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k >= self.n {
            return Err(Error::invalid(format!("need 0 < k < n, got k={} n={}", self.k, self.n)));
        }
        if !(self.sigma_min > 0.0 && self.sigma_max > self.sigma_min) {
            return Err(Error::invalid("need 0 < sigma_min < sigma_max"));
        }
        if self.noise_coeff.is_nan() || self.noise_coeff < 0.0 {
            return Err(Error::invalid("noise coefficient must be non-negative"));
        }
        Ok(())
    }

    /// The planted singular values, length `n`.
    pub fn planted_spectrum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        if self.k == 1 {
            s[0] = self.sigma_max;
            return s;
        }
        let step = (self.sigma_max - self.sigma_min) / (self.k - 1) as f64;
        for (i, si) in s.iter_mut().take(self.k).enumerate() {
            *si = self.sigma_max - step * i as f64;
        }
        s[self.k - 1] = self.sigma_min;
        s
    }
}

/// Draws `(A, planted spectrum)` for `spec`.
///
/// `U` and `V` are the Q factors of `n x k` Gaussian blocks (equivalently the
/// leading `k` columns of the Q factor of an `n x n` Gaussian).
pub fn gen_noisy_lowrank(spec: &NoisyLowRankSpec) -> Result<(Matrix, Vec<f64>)> {
    spec.validate()?;
    let (n, k) = (spec.n, spec.k);
    let sigma = spec.planted_spectrum();
    let mut rng = rng_from_seed(spec.seed);

    let u = householder_qr(&gaussian_from_rng(&mut rng, n, k))?.q;
    let v = householder_qr(&gaussian_from_rng(&mut rng, n, k))?.q;
    let mut us = u;
    for i in 0..n {
        for j in 0..k {
            us[(i, j)] *= sigma[j];
        }
    }
    let mut a = us.matmul_t(&v)?;

    if spec.noise_coeff > 0.0 {
        let e = gaussian_from_rng(&mut rng, n, n);
        let scale = match spec.normalization {
            NoiseNormalization::Spectral => spectral_norm_power(&e, 1e-10, 10_000),
            NoiseNormalization::Frobenius => e.frobenius_norm(),
            NoiseNormalization::EntryScaled => (n as f64).sqrt(),
        };
        a.axpy(spec.noise_coeff * sigma[k - 1] / scale, &e)?;
    }
    Ok((a, sigma))
}

/// `M = L + S` with `L = U Vᵀ` (`U`, `V` standard Gaussian `n x k`) and `S`
/// holding exactly `s` entries of value `±amplitude` at distinct uniformly
/// drawn positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpcaInstanceSpec {
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub amplitude: f64,
    pub seed: u64,
}

impl RpcaInstanceSpec {
    /// Rank `0.05 n`, `0.05 n²` corruptions of magnitude 80.
    pub fn standard(n: usize, seed: u64) -> Self {
        RpcaInstanceSpec {
            n,
            k: ((n as f64) * 0.05).round() as usize,
            s: ((n * n) as f64 * 0.05).round() as usize,
            amplitude: 80.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > self.n {
            return Err(Error::invalid(format!("rank {} exceeds n = {}", self.k, self.n)));
        }
        if self.s > self.n * self.n {
            return Err(Error::invalid(format!("sparsity {} exceeds n² = {}", self.s, self.n * self.n)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RpcaInstance {
    pub m: Matrix,
    pub l: Matrix,
    pub s: Matrix,
}

pub fn gen_rpca_instance(spec: &RpcaInstanceSpec) -> Result<RpcaInstance> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = rng_from_seed(spec.seed);
    let u = gaussian_from_rng(&mut rng, n, spec.k);
    let v = gaussian_from_rng(&mut rng, n, spec.k);
    let l = u.matmul_t(&v)?;

    let mut s = Matrix::zeros(n, n);
    let positions = index::sample(&mut rng, n * n, spec.s);
    for pos in positions.iter() {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        s.as_mut_slice()[pos] = sign * spec.amplitude;
    }
    let m = l.add(&s)?;
    Ok(RpcaInstance { m, l, s })
}
