//! Experiment harnesses producing the CSV reports: singular value comparison,
//! low-rank error sweeps and robust PCA recovery, plus single-matrix
//! decomposition with pass and flop accounting.
//!
//! Trial `t` of a randomized method uses seed `base_seed + t`. Trials may run
//! on a rayon pool capped by `CORUTV_THREADS`; results are gathered in trial
//! order, so reports do not depend on scheduling.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, qrcp, QrcpFactors};
use crate::randla::{
    alm_corutv_iteration_flops, corutv, corutv_passes, corutv_with, count_passes, flop_estimate,
    inexact_alm_iteration_flops, qrcp_flops, qrcp_lowrank, sor_svd, sor_svd_flops, sor_svd_with,
    svd_flops, tsr_svd, tsr_svd_flops, tsr_svd_with, utv_full, PowerScheme, SketchConfig, Variant,
};
use crate::rpca::{self, AlmConfig, RpcaSolution, Solver};
use crate::testgen::{gen_noisy_lowrank, gen_rpca_instance, NoiseNormalization, NoisyLowRankSpec, RpcaInstanceSpec};
use crate::Matrix;

/// Environment variable capping the number of worker threads for trials.
pub const THREADS_ENV: &str = "CORUTV_THREADS";

pub const SV_COMPARE_HEADER: &str = "index,method,value,trial_mean,trial_std";
pub const LOWRANK_ERROR_HEADER: &str = "ell,method,ek_mean,ek_std,svd_optimal";
pub const RPCA_HEADER: &str = "n,solver,rank_l,nnz_s,iters,zeta,flops_est";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SvCompare,
    LowrankError,
    RpcaRecovery,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::SvCompare => "sv-compare",
            Experiment::LowrankError => "lowrank-error",
            Experiment::RpcaRecovery => "rpca-recovery",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sv-compare" => Ok(Experiment::SvCompare),
            "lowrank-error" => Ok(Experiment::LowrankError),
            "rpca-recovery" | "rpca" => Ok(Experiment::RpcaRecovery),
            other => Err(Error::Parse(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Full Jacobi SVD, the oracle.
    Svd,
    /// Full column-pivoted QR.
    Qrcp,
    /// CoR-UTV with exact compression at `ℓ = n` and `q = 0`.
    UtvApprox,
    Corutv,
    TsrSvd,
    SorSvd,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Svd, Method::Qrcp, Method::UtvApprox, Method::Corutv, Method::TsrSvd, Method::SorSvd];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Svd => "svd",
            Method::Qrcp => "qrcp",
            Method::UtvApprox => "utv-approx",
            Method::Corutv => "corutv",
            Method::TsrSvd => "tsr-svd",
            Method::SorSvd => "sor-svd",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, Method::Corutv | Method::TsrSvd | Method::SorSvd)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?}")))
    }
}

/// Rank of the approximation scored by the low-rank error sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxRank {
    /// Rank `ℓ`: the full `U T Vᵀ`, scored against `√(Σ_{i>ℓ} σ_i²)`.
    Ell,
    /// Rank `k` truncation at every `ℓ`, scored against `√(Σ_{i>k} σ_i²)`.
    K,
}

impl FromStr for ApproxRank {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ell" => Ok(ApproxRank::Ell),
            "k" => Ok(ApproxRank::K),
            other => Err(Error::Parse(format!("approx_rank must be ell or k, got {other:?}"))),
        }
    }
}

/// Optional replacements for the matrix-dependent ALM defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AlmOverrides {
    pub lambda: Option<f64>,
    pub mu0: Option<f64>,
    pub rho: Option<f64>,
    pub mu_bar: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub ell: Option<usize>,
    pub q_power: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Order of the square test matrix.
    pub n: usize,
    /// Planted numerical rank.
    pub k: usize,
    pub noise_coeff: f64,
    pub normalization: NoiseNormalization,
    /// Seed of the test matrix, shared by all trials.
    pub matrix_seed: u64,
    pub methods: Vec<Method>,
    /// Sample size for the singular value comparison.
    pub ell: usize,
    /// Sample sizes swept by the low-rank error experiment.
    pub ells: Vec<usize>,
    pub approx_rank: ApproxRank,
    pub q_power: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub variant: Variant,
    pub scheme: PowerScheme,
    /// Worker cap; falls back to `CORUTV_THREADS`, then to rayon's default.
    pub threads: Option<usize>,
    /// Matrix orders for the robust PCA table.
    pub sizes: Vec<usize>,
    pub solvers: Vec<Solver>,
    /// Rank of `L` as a fraction of `n`.
    pub rank_fraction: f64,
    /// Corrupted entries as a fraction of `n²`.
    pub sparsity_fraction: f64,
    pub amplitude: f64,
    pub alm: AlmOverrides,
}

impl ExperimentConfig {
    /// Desk-scale defaults: `n = 400`, `k = 20`, `ℓ = 2k`, `q = 2`, 20 trials.
    pub fn new(experiment: Experiment) -> Self {
        let methods = match experiment {
            Experiment::SvCompare => {
                vec![Method::Svd, Method::Qrcp, Method::UtvApprox, Method::Corutv, Method::TsrSvd]
            }
            Experiment::LowrankError => {
                vec![Method::Svd, Method::Qrcp, Method::Corutv, Method::TsrSvd, Method::SorSvd]
            }
            Experiment::RpcaRecovery => Vec::new(),
        };
        ExperimentConfig {
            experiment,
            n: 400,
            k: 20,
            noise_coeff: 0.1,
            normalization: NoiseNormalization::Spectral,
            matrix_seed: 1,
            methods,
            ell: 40,
            ells: vec![20, 30, 40, 60],
            approx_rank: ApproxRank::Ell,
            q_power: 2,
            trials: 20,
            base_seed: 0,
            variant: Variant::ExactD,
            scheme: PowerScheme::Orthonormalized,
            threads: None,
            sizes: vec![400],
            solvers: vec![Solver::AlmCorutv, Solver::InexactAlm],
            rank_fraction: 0.05,
            sparsity_fraction: 0.05,
            amplitude: 80.0,
            alm: AlmOverrides::default(),
        }
    }

    /// Full-size inputs: `n = 1000`.
    pub fn full(mut self) -> Self {
        self.n = 1000;
        self.sizes = vec![1000];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be at least 1"));
        }
        match self.experiment {
            Experiment::SvCompare | Experiment::LowrankError => {
                if self.k == 0 || self.k >= self.n {
                    return Err(Error::invalid(format!("need 0 < k < n, got k={} n={}", self.k, self.n)));
                }
                if self.methods.is_empty() {
                    return Err(Error::invalid("method list is empty"));
                }
            }
            Experiment::RpcaRecovery => {
                if self.sizes.is_empty() || self.solvers.is_empty() {
                    return Err(Error::invalid("rpca needs at least one size and one solver"));
                }
            }
        }
        match self.experiment {
            Experiment::SvCompare if self.ell == 0 || self.ell >= self.n => Err(Error::invalid(format!(
                "ell = {} must satisfy 1 <= ell < n = {}",
                self.ell, self.n
            ))),
            Experiment::LowrankError => {
                if self.ells.is_empty() {
                    return Err(Error::invalid("ell sweep is empty"));
                }
                match self.ells.iter().find(|&&l| l < self.k || l >= self.n) {
                    Some(l) => Err(Error::invalid(format!(
                        "sweep value ell = {l} outside [k, n) = [{}, {})",
                        self.k, self.n
                    ))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", lineno + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Parse(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Sets one configuration key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => {
                let e: Experiment = value.parse()?;
                if e != self.experiment {
                    return Err(Error::invalid(format!(
                        "config is for {}, running {}",
                        e.as_str(),
                        self.experiment.as_str()
                    )));
                }
            }
            "n" => self.n = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "noise_coeff" => self.noise_coeff = num(key, value)?,
            "noise" => self.normalization = value.parse()?,
            "matrix_seed" => self.matrix_seed = num(key, value)?,
            "methods" => self.methods = list(value)?,
            "ell" => self.ell = num(key, value)?,
            "ells" => self.ells = list(value)?,
            "approx_rank" => self.approx_rank = value.parse()?,
            "q" | "q_power" => self.q_power = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "seed" | "base_seed" => self.base_seed = num(key, value)?,
            "variant" => self.variant = value.parse()?,
            "scheme" => self.scheme = value.parse()?,
            "threads" => self.threads = Some(num(key, value)?),
            "sizes" => self.sizes = list(value)?,
            "solvers" => self.solvers = list(value)?,
            "rank_fraction" => self.rank_fraction = num(key, value)?,
            "sparsity_fraction" => self.sparsity_fraction = num(key, value)?,
            "amplitude" => self.amplitude = num(key, value)?,
            "lambda" => self.alm.lambda = Some(num(key, value)?),
            "mu0" => self.alm.mu0 = Some(num(key, value)?),
            "rho" => self.alm.rho = Some(num(key, value)?),
            "mu_bar" => self.alm.mu_bar = Some(num(key, value)?),
            "tol" => self.alm.tol = Some(num(key, value)?),
            "max_iter" => self.alm.max_iter = Some(num(key, value)?),
            "rpca_ell" => self.alm.ell = Some(num(key, value)?),
            "rpca_q" => self.alm.q_power = Some(num(key, value)?),
            other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    fn noisy_spec(&self) -> NoisyLowRankSpec {
        NoisyLowRankSpec {
            noise_coeff: self.noise_coeff,
            normalization: self.normalization,
            ..NoisyLowRankSpec::new(self.n, self.k, self.matrix_seed)
        }
    }

    fn sketch(&self, ell: usize, seed: u64) -> SketchConfig {
        SketchConfig::new(ell, self.q_power, seed).with_variant(self.variant).with_scheme(self.scheme)
    }

    /// Robust PCA instance of order `n` under this configuration.
    pub fn rpca_spec(&self, n: usize) -> RpcaInstanceSpec {
        RpcaInstanceSpec {
            n,
            k: (self.rank_fraction * n as f64).round() as usize,
            s: (self.sparsity_fraction * (n * n) as f64).round() as usize,
            amplitude: self.amplitude,
            seed: self.base_seed,
        }
    }

    /// ALM settings for `m`: matrix-dependent defaults, then overrides.
    pub fn alm_config(&self, m: &Matrix, rank: usize) -> Result<AlmConfig> {
        let mut c = AlmConfig::for_matrix(m, rank)?;
        let o = &self.alm;
        if let Some(mu0) = o.mu0 {
            c.mu_bar = c.mu_bar / c.mu0 * mu0;
            c.mu0 = mu0;
        }
        c.lambda = o.lambda.unwrap_or(c.lambda);
        c.rho = o.rho.unwrap_or(c.rho);
        c.mu_bar = o.mu_bar.unwrap_or(c.mu_bar);
        c.tol = o.tol.unwrap_or(c.tol);
        c.max_iter = o.max_iter.unwrap_or(c.max_iter);
        c.ell = o.ell.unwrap_or(c.ell);
        c.q_power = o.q_power.unwrap_or(c.q_power);
        c.seed = self.base_seed;
        c.validate()?;
        Ok(c)
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse(format!("{key}: cannot parse {value:?}")))
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
        .collect()
}

/// Reads `CORUTV_THREADS`; unset means no cap.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(Error::invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
            Ok(t) => Ok(Some(t)),
        },
        Err(_) => Ok(None),
    }
}

/// A CSV report: fixed header, preformatted rows, and per-trial failures
/// that were recorded instead of aborting the run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub header: &'static str,
    pub rows: Vec<String>,
    pub failures: Vec<String>,
}

impl Report {
    fn new(header: &'static str) -> Self {
        Report { header, rows: Vec::new(), failures: Vec::new() }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header)?;
        for row in &self.rows {
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("reports are ASCII")
    }

    /// Rows split into fields.
    pub fn records(&self) -> Vec<Vec<&str>> {
        self.rows.iter().map(|r| r.split(',').collect()).collect()
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:e}")
}

/// Mean and sample standard deviation; `NaN` for an empty slice.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn resolve_threads(cfg: &ExperimentConfig) -> Result<Option<usize>> {
    match cfg.threads {
        Some(t) => Ok(Some(t)),
        None => threads_from_env(),
    }
}

/// Runs `f(0..trials)` on a pool of `threads` workers, returning results in
/// trial order.
fn run_trials<T, F>(threads: Option<usize>, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..trials).into_par_iter().map(&f).collect()))
}

/// Per-index singular value estimates for each configured method against
/// the SVD oracle of one noisy low-rank matrix.
///
/// `value` is the mean over successful trials, repeated in `trial_mean`
/// next to the sample standard deviation. Deterministic methods run once
/// (`utv-approx` at `base_seed`) and report a zero spread. Indices run from
/// 1 to `ℓ`.
pub fn run_sv_compare(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let threads = resolve_threads(cfg)?;
    let (a, _) = gen_noisy_lowrank(&cfg.noisy_spec())?;
    let oracle = jacobi_svd(&a)?.sigma;
    let ell = cfg.ell;
    let mut report = Report::new(SV_COMPARE_HEADER);

    for &method in &cfg.methods {
        let per_trial: Vec<Result<Vec<f64>>> = if method.is_randomized() {
            run_trials(threads, cfg.trials, |t| sv_estimates(&a, method, cfg, cfg.base_seed + t as u64))?
        } else {
            vec![match method {
                Method::Svd => Ok(oracle.clone()),
                _ => sv_estimates(&a, method, cfg, cfg.base_seed),
            }]
        };
        let mut ok = Vec::new();
        for (t, r) in per_trial.into_iter().enumerate() {
            match r {
                Ok(v) => ok.push(v),
                Err(e) => report.failures.push(format!("{method} trial {t}: {e}")),
            }
        }
        for i in 0..ell {
            let xs: Vec<f64> = ok.iter().filter_map(|v| v.get(i).copied()).collect();
            let (mean, std) = mean_std(&xs);
            let (mean, std) = (fmt_f(mean), fmt_f(std));
            report.rows.push(format!("{},{method},{mean},{mean},{std}", i + 1));
        }
    }
    Ok(report)
}

fn sv_estimates(a: &Matrix, method: Method, cfg: &ExperimentConfig, seed: u64) -> Result<Vec<f64>> {
    let sk = cfg.sketch(cfg.ell, seed);
    match method {
        Method::Svd => Ok(jacobi_svd(a)?.sigma),
        Method::Qrcp => Ok(qrcp(a)?.abs_diagonal()),
        Method::UtvApprox => Ok(utv_full(a, seed)?.singular_value_estimates()),
        Method::Corutv => Ok(corutv(a, &sk)?.singular_value_estimates()),
        Method::TsrSvd => Ok(tsr_svd(a, &sk)?.sigma),
        Method::SorSvd => Ok(sor_svd(a, &sk)?.sigma),
    }
}

/// `e_k = ||A - Â||_F` per sample size and method, averaged over trials,
/// with the optimal error `√(Σ_{i>r} σ_i²)` for the scored rank `r`.
pub fn run_lowrank_error(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let threads = resolve_threads(cfg)?;
    let (a, _) = gen_noisy_lowrank(&cfg.noisy_spec())?;
    let oracle = jacobi_svd(&a)?.sigma;
    let mut report = Report::new(LOWRANK_ERROR_HEADER);

    let qrcp_f = if cfg.methods.contains(&Method::Qrcp) { Some(qrcp(&a)?) } else { None };
    let utv = if cfg.methods.contains(&Method::UtvApprox) {
        match utv_full(&a, cfg.base_seed) {
            Ok(f) => Some(f),
            Err(e) => {
                report.failures.push(format!("utv-approx: {e}"));
                None
            }
        }
    } else {
        None
    };

    for &ell in &cfg.ells {
        let rank = match cfg.approx_rank {
            ApproxRank::Ell => ell,
            ApproxRank::K => cfg.k,
        };
        let optimal = tail_norm(&oracle, rank);
        for &method in &cfg.methods {
            let errors: Vec<Result<f64>> = match method {
                Method::Svd => vec![Ok(optimal)],
                Method::Qrcp => vec![residual(&a, &qrcp_lowrank(qrcp_f.as_ref().expect("computed"), rank)?)],
                Method::UtvApprox => match &utv {
                    Some(f) => vec![residual(&a, &f.truncated(rank))],
                    None => Vec::new(),
                },
                _ => run_trials(threads, cfg.trials, |t| {
                    lowrank_trial(&a, method, &cfg.sketch(ell, cfg.base_seed + t as u64), rank)
                })?,
            };
            let mut xs = Vec::new();
            for (t, r) in errors.into_iter().enumerate() {
                match r {
                    Ok(e) => xs.push(e),
                    Err(e) => report.failures.push(format!("{method} ell={ell} trial {t}: {e}")),
                }
            }
            let (mean, std) = mean_std(&xs);
            report.rows.push(format!("{ell},{method},{},{},{}", fmt_f(mean), fmt_f(std), fmt_f(optimal)));
        }
    }
    Ok(report)
}

fn tail_norm(sigma: &[f64], r: usize) -> f64 {
    sigma.iter().skip(r).map(|s| s * s).sum::<f64>().sqrt()
}

fn residual(a: &Matrix, approx: &Matrix) -> Result<f64> {
    Ok(a.sub(approx)?.frobenius_norm())
}

fn lowrank_trial(a: &Matrix, method: Method, sk: &SketchConfig, rank: usize) -> Result<f64> {
    let approx = match method {
        Method::Corutv => corutv(a, sk)?.truncated(rank),
        Method::TsrSvd => tsr_svd(a, sk)?.truncated(rank),
        Method::SorSvd => sor_svd(a, sk)?.truncated(rank),
        _ => unreachable!("deterministic methods are evaluated once"),
    };
    residual(a, &approx)
}

/// One solver run inside [`run_rpca_recovery`].
#[derive(Debug, Clone)]
pub struct RpcaRun {
    pub n: usize,
    pub solver: Solver,
    pub solution: Option<RpcaSolution>,
    pub flops_est: u64,
}

#[derive(Debug, Clone)]
pub struct RpcaReport {
    pub report: Report,
    pub runs: Vec<RpcaRun>,
}

/// Robust PCA recovery table: one row per `(n, solver)`.
///
/// The instance for size `n` has rank `rank_fraction n`, `sparsity_fraction
/// n²` corruptions of magnitude `amplitude`, and seed `base_seed`. A solver
/// that stops at `max_iter` still gets a row with its last residual; hard
/// failures leave the numeric fields empty. `flops_est` sums the per-iteration
/// model over the ranks actually kept.
pub fn run_rpca_recovery(cfg: &ExperimentConfig) -> Result<RpcaReport> {
    cfg.validate()?;
    let mut report = Report::new(RPCA_HEADER);
    let mut runs = Vec::new();
    for &n in &cfg.sizes {
        let spec = cfg.rpca_spec(n);
        let inst = gen_rpca_instance(&spec)?;
        let alm = cfg.alm_config(&inst.m, spec.k)?;
        for &solver in &cfg.solvers {
            match rpca::solve(&inst.m, &alm, solver) {
                Ok(sol) => {
                    let flops_est = rpca_flops(n, n, &alm, solver, &sol);
                    if !sol.converged {
                        report.failures.push(format!(
                            "{solver} n={n}: no convergence after {} iterations",
                            sol.iterations
                        ));
                    }
                    report.rows.push(format!(
                        "{n},{solver},{},{},{},{},{flops_est}",
                        sol.rank_of_l,
                        sol.nnz_of_s,
                        sol.iterations,
                        fmt_f(sol.final_residual())
                    ));
                    runs.push(RpcaRun { n, solver, solution: Some(sol), flops_est });
                }
                Err(e) => {
                    report.failures.push(format!("{solver} n={n}: {e}"));
                    report.rows.push(format!("{n},{solver},,,,,"));
                    runs.push(RpcaRun { n, solver, solution: None, flops_est: 0 });
                }
            }
        }
    }
    Ok(RpcaReport { report, runs })
}

/// Sum of the per-iteration flop model over the ranks a solve actually kept.
pub fn rpca_flops(m: usize, n: usize, alm: &AlmConfig, solver: Solver, sol: &RpcaSolution) -> u64 {
    sol.history
        .iter()
        .map(|r| match solver {
            Solver::AlmCorutv => alm_corutv_iteration_flops(m, n, alm.ell, alm.q_power, r.rank_l),
            Solver::InexactAlm => inexact_alm_iteration_flops(m, n, r.rank_l),
        })
        .fold(0u64, u64::saturating_add)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    pub method: Method,
    pub ell: usize,
    pub q_power: usize,
    pub seed: u64,
    pub variant: Variant,
    pub scheme: PowerScheme,
    /// Keep only the leading `rank` components.
    pub rank: Option<usize>,
}

impl DecomposeOptions {
    pub fn new(method: Method, ell: usize, q_power: usize, seed: u64) -> Self {
        DecomposeOptions {
            method,
            ell,
            q_power,
            seed,
            variant: Variant::ExactD,
            scheme: PowerScheme::Orthonormalized,
            rank: None,
        }
    }
}

/// `A ≈ U M Vᵀ` where `M` is triangular (UTV, QRCP) or diagonal (SVD).
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub u: Matrix,
    pub middle: Matrix,
    pub v: Matrix,
    /// `true` when `middle` is the diagonal `Σ`.
    pub diagonal_middle: bool,
    /// Sweeps over `A`; `None` for the deterministic full factorizations.
    pub passes: Option<usize>,
    pub flops: u64,
}

impl Decomposition {
    pub fn reconstruct(&self) -> Result<Matrix> {
        self.u.matmul(&self.middle)?.matmul_t(&self.v)
    }
}

/// Factors `a` with one method. QRCP returns `V = P`, the column
/// permutation, so the product form is uniform.
pub fn decompose(a: &Matrix, opts: &DecomposeOptions) -> Result<Decomposition> {
    a.ensure_finite("decompose")?;
    let (m, n) = a.shape();
    let sk = SketchConfig::new(opts.ell, opts.q_power, opts.seed)
        .with_variant(opts.variant)
        .with_scheme(opts.scheme);
    match opts.method {
        Method::Svd => {
            let mut f = jacobi_svd(a)?;
            if let Some(r) = opts.rank {
                f = f.truncate(r);
            }
            Ok(Decomposition {
                middle: Matrix::diag(&f.sigma),
                u: f.u,
                v: f.v,
                diagonal_middle: true,
                passes: None,
                flops: svd_flops(m, n),
            })
        }
        Method::Qrcp => {
            let f = qrcp(a)?;
            let r = opts.rank.unwrap_or(f.r.rows()).min(f.r.rows());
            Ok(Decomposition {
                u: f.q.leading_columns(r),
                middle: f.r.leading_rows(r),
                v: permutation(&f),
                diagonal_middle: false,
                passes: None,
                flops: qrcp_flops(m, n),
            })
        }
        Method::UtvApprox => {
            let f = utv_full(a, opts.seed)?;
            let (u, t) = truncate_utv(&f.u, &f.t, opts.rank);
            Ok(Decomposition {
                u,
                middle: t,
                v: f.v,
                diagonal_middle: false,
                passes: Some(corutv_passes(0, Variant::ExactD)),
                flops: flop_estimate(m, n, n, 0, Variant::ExactD),
            })
        }
        Method::Corutv => {
            let (f, passes) = count_passes(a, |c| corutv_with(c, &sk))?;
            let (u, t) = truncate_utv(&f.u, &f.t, opts.rank);
            Ok(Decomposition {
                u,
                middle: t,
                v: f.v,
                diagonal_middle: false,
                passes: Some(passes),
                flops: flop_estimate(m, n, opts.ell, opts.q_power, opts.variant),
            })
        }
        Method::TsrSvd | Method::SorSvd => {
            let (mut f, passes) = if opts.method == Method::TsrSvd {
                count_passes(a, |c| tsr_svd_with(c, &sk))?
            } else {
                count_passes(a, |c| sor_svd_with(c, &sk))?
            };
            if let Some(r) = opts.rank {
                f = f.truncate(r);
            }
            let flops = if opts.method == Method::TsrSvd {
                tsr_svd_flops(m, n, opts.ell)
            } else {
                sor_svd_flops(m, n, opts.ell, opts.q_power, opts.variant)
            };
            Ok(Decomposition {
                middle: Matrix::diag(&f.sigma),
                u: f.u,
                v: f.v,
                diagonal_middle: true,
                passes: Some(passes),
                flops,
            })
        }
    }
}

fn truncate_utv(u: &Matrix, t: &Matrix, rank: Option<usize>) -> (Matrix, Matrix) {
    match rank {
        Some(r) => {
            let r = r.min(t.rows());
            (u.leading_columns(r), t.leading_rows(r))
        }
        None => (u.clone(), t.clone()),
    }
}

fn permutation(f: &QrcpFactors) -> Matrix {
    f.permutation_matrix()
}
