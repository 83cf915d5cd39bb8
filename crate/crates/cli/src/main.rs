use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use corutv::bench::{
    decompose, run_lowrank_error, run_rpca_recovery, run_sv_compare, DecomposeOptions, Experiment, ExperimentConfig,
    Method, Report,
};
use corutv::io::{read_matrix, write_matrix, Format};
use corutv::randla::{PowerScheme, Variant};
use corutv::testgen::{gen_noisy_lowrank, gen_rpca_instance, NoiseNormalization, NoisyLowRankSpec, RpcaInstanceSpec};
use corutv::{Error, Matrix};

/// CoR-UTV decompositions, robust PCA and the benchmark experiments.
///
/// Exit status: 0 on success, 1 for usage, parse or I/O errors, 2 for
/// numerical failures (reports are still written before exiting).
#[derive(Parser)]
#[command(name = "corutv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic test matrix.
    Gen(GenArgs),
    /// Factor a matrix file and write U, T (or Σ), V and meta.json.
    Decompose(DecomposeArgs),
    /// Singular value estimates per method against the SVD oracle.
    SvCompare(ExperimentArgs),
    /// Low-rank approximation error over a sweep of sample sizes.
    LowrankError(ExperimentArgs),
    /// Robust PCA recovery table for both ALM solvers.
    Rpca(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Bin,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Bin => Format::Binary,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// Planted rank-k spectrum plus Gaussian noise.
    NoisyLowrank,
    /// Low-rank plus sparse corruption.
    Rpca,
}

#[derive(Args)]
struct Common {
    /// Base seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (a directory for `decompose`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Matrix order [default: 400].
    #[arg(long)]
    n: Option<usize>,
    /// Planted rank [default: 20, or 0.05n for rpca].
    #[arg(long)]
    k: Option<usize>,
    /// [default: 0.1]
    #[arg(long)]
    noise_coeff: Option<f64>,
    /// spectral, frobenius or entry [default: spectral].
    #[arg(long)]
    noise: Option<String>,
    /// Number of corrupted entries [default: 0.05n²].
    #[arg(long)]
    s: Option<usize>,
    /// [default: 80]
    #[arg(long)]
    amplitude: Option<f64>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    common: Common,
    /// Input matrix; `.bin` files are read as binary, anything else as CSV.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// svd, qrcp, utv-approx, corutv, tsr-svd or sor-svd [default: corutv].
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    /// exact-d, approx-d or approx-d-final.
    #[arg(long)]
    variant: Option<String>,
    /// orthonormalized or plain.
    #[arg(long)]
    scheme: Option<String>,
    /// Keep only the leading components.
    #[arg(long)]
    rank: Option<usize>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    /// Full-size inputs (n = 1000).
    #[arg(long)]
    full: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    /// Comma-separated ℓ sweep.
    #[arg(long)]
    ells: Option<String>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated method list.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    matrix_seed: Option<u64>,
    #[arg(long)]
    variant: Option<String>,
    /// ell or k.
    #[arg(long)]
    approx_rank: Option<String>,
    /// Comma-separated matrix orders for rpca.
    #[arg(long)]
    sizes: Option<String>,
    /// Comma-separated solvers for rpca.
    #[arg(long)]
    solvers: Option<String>,
    /// Worker cap; overrides CORUTV_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write the generated test matrix here, in --format.
    #[arg(long)]
    save_matrix: Option<PathBuf>,
    /// rpca: write per-iteration telemetry CSVs into this directory.
    #[arg(long)]
    telemetry: Option<PathBuf>,
    /// rpca: write recovered L and S into this directory, in --format.
    #[arg(long)]
    save_factors: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Parse(_) | Error::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::SvCompare(a) => cmd_experiment(Experiment::SvCompare, a),
        Command::LowrankError(a) => cmd_experiment(Experiment::LowrankError, a),
        Command::Rpca(a) => cmd_experiment(Experiment::RpcaRecovery, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn require_out(common: &Common) -> Result<&Path, Failure> {
    common.out.as_deref().ok_or_else(|| Failure::Usage("--out is required".into()))
}

/// `dir/stem_suffix.ext` next to `path`.
fn sibling(path: &Path, suffix: &str, format: Format) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("matrix");
    path.with_file_name(format!("{stem}_{suffix}.{}", format.extension()))
}

/// Iterates `key=value` lines, skipping blanks and `#` comments.
fn config_pairs(text: &str) -> impl Iterator<Item = Result<(&str, &str), Failure>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Failure::Usage(format!("config: expected key=value, got {l:?}")))
        })
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Failure> {
    value.parse().map_err(|_| Failure::Usage(format!("config: cannot parse {key} = {value:?}")))
}

fn cmd_gen(mut a: GenArgs) -> Result<(), Failure> {
    if let Some(path) = &a.common.config {
        let text = fs::read_to_string(path)?;
        for pair in config_pairs(&text) {
            let (k, v) = pair?;
            match k {
                "kind" => {
                    let kind = Kind::from_str(v, false).map_err(Failure::Usage)?;
                    a.kind = a.kind.or(Some(kind));
                }
                "n" => a.n = a.n.or(Some(parse_value(k, v)?)),
                "k" => a.k = a.k.or(Some(parse_value(k, v)?)),
                "noise_coeff" => a.noise_coeff = a.noise_coeff.or(Some(parse_value(k, v)?)),
                "noise" => a.noise = a.noise.or(Some(v.to_string())),
                "s" => a.s = a.s.or(Some(parse_value(k, v)?)),
                "amplitude" => a.amplitude = a.amplitude.or(Some(parse_value(k, v)?)),
                "seed" => a.common.seed = a.common.seed.or(Some(parse_value(k, v)?)),
                other => return Err(Failure::Usage(format!("config: unknown key {other:?}"))),
            }
        }
    }
    let out = require_out(&a.common)?;
    let format = Format::from(a.common.format);
    let n = a.n.unwrap_or(400);
    let seed = a.common.seed.unwrap_or(0);
    match a.kind.unwrap_or(Kind::NoisyLowrank) {
        Kind::NoisyLowrank => {
            let normalization = match &a.noise {
                Some(s) => s.parse::<NoiseNormalization>()?,
                None => NoiseNormalization::Spectral,
            };
            let spec = NoisyLowRankSpec {
                noise_coeff: a.noise_coeff.unwrap_or(0.1),
                normalization,
                ..NoisyLowRankSpec::new(n, a.k.unwrap_or(20), seed)
            };
            let (m, sigma) = gen_noisy_lowrank(&spec)?;
            write_matrix(&m, out, format)?;
            let sigma = Matrix::new(sigma.len(), 1, sigma)?;
            write_matrix(&sigma, &sibling(out, "sigma", format), format)?;
        }
        Kind::Rpca => {
            let std = RpcaInstanceSpec::standard(n, seed);
            let spec = RpcaInstanceSpec {
                k: a.k.unwrap_or(std.k),
                s: a.s.unwrap_or(std.s),
                amplitude: a.amplitude.unwrap_or(std.amplitude),
                ..std
            };
            let inst = gen_rpca_instance(&spec)?;
            write_matrix(&inst.m, out, format)?;
            write_matrix(&inst.l, &sibling(out, "l", format), format)?;
            write_matrix(&inst.s, &sibling(out, "s", format), format)?;
        }
    }
    Ok(())
}

fn cmd_decompose(a: DecomposeArgs) -> Result<(), Failure> {
    let dir = require_out(&a.common)?;
    let format = Format::from(a.common.format);
    let mut opts = DecomposeOptions::new(Method::Corutv, 40, 1, 0);
    if let Some(path) = &a.common.config {
        apply_decompose_config(&mut opts, &fs::read_to_string(path)?)?;
    }
    if let Some(m) = &a.method {
        opts.method = m.parse()?;
    }
    if let Some(seed) = a.common.seed {
        opts.seed = seed;
    }
    if let Some(ell) = a.ell {
        opts.ell = ell;
    }
    if let Some(q) = a.q {
        opts.q_power = q;
    }
    if let Some(v) = &a.variant {
        opts.variant = v.parse::<Variant>()?;
    }
    if let Some(s) = &a.scheme {
        opts.scheme = s.parse::<PowerScheme>()?;
    }
    opts.rank = a.rank.or(opts.rank);

    let input = read_matrix(&a.input, Format::from_path(&a.input))?;
    let d = decompose(&input, &opts)?;

    fs::create_dir_all(dir)?;
    let middle = if d.diagonal_middle { "sigma" } else { "t" };
    let ext = format.extension();
    write_matrix(&d.u, &dir.join(format!("u.{ext}")), format)?;
    write_matrix(&d.middle, &dir.join(format!("{middle}.{ext}")), format)?;
    write_matrix(&d.v, &dir.join(format!("v.{ext}")), format)?;

    let (m, n) = input.shape();
    let meta = json!({
        "method": opts.method.as_str(),
        "ell": opts.ell,
        "q": opts.q_power,
        "seed": opts.seed,
        "variant": opts.variant.as_str(),
        "rank": opts.rank,
        "shape": [m, n],
        "passes": d.passes,
        "flops": d.flops,
        "format": ext,
        "middle": middle,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Failure::Usage(e.to_string()))?;
    fs::write(dir.join("meta.json"), text + "\n")?;
    Ok(())
}

fn apply_decompose_config(opts: &mut DecomposeOptions, text: &str) -> Result<(), Failure> {
    for pair in config_pairs(text) {
        let (k, v) = pair?;
        match k {
            "method" => opts.method = v.parse()?,
            "ell" => opts.ell = parse_value(k, v)?,
            "q" | "q_power" => opts.q_power = parse_value(k, v)?,
            "seed" => opts.seed = parse_value(k, v)?,
            "variant" => opts.variant = v.parse()?,
            "scheme" => opts.scheme = v.parse()?,
            "rank" => opts.rank = Some(parse_value(k, v)?),
            other => return Err(Failure::Usage(format!("config: unknown key {other:?}"))),
        }
    }
    Ok(())
}

fn experiment_config(experiment: Experiment, a: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::new(experiment);
    if a.full {
        cfg = cfg.full();
    }
    if let Some(path) = &a.common.config {
        cfg.apply_config_text(&fs::read_to_string(path)?)?;
    }
    let flags: [(&str, Option<String>); 14] = [
        ("seed", a.common.seed.map(|v| v.to_string())),
        ("n", a.n.map(|v| v.to_string())),
        ("k", a.k.map(|v| v.to_string())),
        ("ell", a.ell.map(|v| v.to_string())),
        ("ells", a.ells.clone()),
        ("q", a.q.map(|v| v.to_string())),
        ("trials", a.trials.map(|v| v.to_string())),
        ("methods", a.methods.clone()),
        ("matrix_seed", a.matrix_seed.map(|v| v.to_string())),
        ("variant", a.variant.clone()),
        ("approx_rank", a.approx_rank.clone()),
        ("sizes", a.sizes.clone()),
        ("solvers", a.solvers.clone()),
        ("threads", a.threads.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => report.write_csv(fs::File::create(path)?)?,
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_experiment(experiment: Experiment, a: ExperimentArgs) -> Result<(), Failure> {
    let cfg = experiment_config(experiment, &a)?;
    let format = Format::from(a.common.format);
    let out = a.common.out.as_deref();

    let report = match experiment {
        Experiment::SvCompare | Experiment::LowrankError => {
            if let Some(path) = &a.save_matrix {
                let spec = NoisyLowRankSpec {
                    noise_coeff: cfg.noise_coeff,
                    normalization: cfg.normalization,
                    ..NoisyLowRankSpec::new(cfg.n, cfg.k, cfg.matrix_seed)
                };
                write_matrix(&gen_noisy_lowrank(&spec)?.0, path, format)?;
            }
            if experiment == Experiment::SvCompare {
                run_sv_compare(&cfg)?
            } else {
                run_lowrank_error(&cfg)?
            }
        }
        Experiment::RpcaRecovery => {
            let out_runs = run_rpca_recovery(&cfg)?;
            for run in &out_runs.runs {
                let Some(sol) = &run.solution else { continue };
                let tag = format!("n{}_{}", run.n, run.solver.as_str());
                if let Some(dir) = &a.telemetry {
                    fs::create_dir_all(dir)?;
                    sol.write_telemetry(fs::File::create(dir.join(format!("telemetry_{tag}.csv")))?)?;
                }
                if let Some(dir) = &a.save_factors {
                    fs::create_dir_all(dir)?;
                    let ext = format.extension();
                    write_matrix(&sol.l, &dir.join(format!("l_{tag}.{ext}")), format)?;
                    write_matrix(&sol.s, &dir.join(format!("s_{tag}.{ext}")), format)?;
                }
            }
            if a.save_matrix.is_some() {
                for &n in &cfg.sizes {
                    let path = a.save_matrix.as_deref().expect("checked");
                    let target = if cfg.sizes.len() == 1 { path.to_path_buf() } else { sibling(path, &format!("n{n}"), format) };
                    let inst = gen_rpca_instance(&cfg.rpca_spec(n))?;
                    write_matrix(&inst.m, &target, format)?;
                }
            }
            out_runs.report
        }
    };
    emit(&report, out)?;
    if report.failures.is_empty() {
        return Ok(());
    }
    let mut err = io::stderr().lock();
    for f in &report.failures {
        let _ = writeln!(err, "warning: {f}");
    }
    Err(Failure::Numerical(format!("{} failure(s) recorded in the report", report.failures.len())))
}
