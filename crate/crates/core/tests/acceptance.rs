//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Runs both the desk size (n = 400) and the
//! full size (n = 1000); expect a few minutes on one core.

use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use corutv::bench::{
    run_lowrank_error, run_rpca_recovery, run_sv_compare, Experiment, ExperimentConfig, Method, RpcaRun,
};
use corutv::linalg::{householder_qr, jacobi_svd, pseudoinverse, qrcp};
use corutv::randla::{
    corutv, corutv_passes, corutv_with, count_passes, sor_svd, tsr_svd, CorUtvFactors, SketchConfig, Variant,
};
use corutv::rpca::Solver;
use corutv::testgen::{gen_noisy_lowrank, gen_rpca_instance, NoisyLowRankSpec};
use corutv::Matrix;

const K: usize = 20;
const TRIALS: u64 = 20;
const MATRIX_SEED: u64 = 1;

struct Fixture {
    n: usize,
    a: Matrix,
    sigma: Vec<f64>,
    /// CoR-UTV at ℓ = 2k, q = 2, one per trial seed.
    q2: Vec<CorUtvFactors>,
}

impl Fixture {
    fn new(n: usize) -> Fixture {
        let (a, _) = gen_noisy_lowrank(&NoisyLowRankSpec::new(n, K, MATRIX_SEED)).unwrap();
        let sigma = jacobi_svd(&a).unwrap().sigma;
        let q2 = (0..TRIALS).map(|t| corutv(&a, &SketchConfig::new(2 * K, 2, t)).unwrap()).collect();
        Fixture { n, a, sigma, q2 }
    }

    fn err(&self, approx: &Matrix) -> f64 {
        self.a.sub(approx).unwrap().frobenius_norm()
    }
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, o: &Outcome, secs: f64) -> bool {
    println!("criterion {id} ({name}): {} [{:.1} s] {}", if o.pass { "PASS" } else { "FAIL" }, secs, o.detail);
    o.pass
}

/// Leading-k |diag T| against the oracle: mean relative error over indices
/// and trials must be at most 1%.
fn singular_value_accuracy(fx: &[Fixture]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for f in fx {
        let mut per_trial = Vec::new();
        let mut curve = [0.0; K];
        for t in &f.q2 {
            let est = t.singular_value_estimates();
            let rel: Vec<f64> = (0..K).map(|i| (est[i] - f.sigma[i]).abs() / f.sigma[i]).collect();
            per_trial.push(rel.iter().sum::<f64>() / K as f64);
            for i in 0..K {
                curve[i] += est[i] / f.q2.len() as f64;
            }
        }
        let mean = per_trial.iter().sum::<f64>() / per_trial.len() as f64;
        let curve_err = (0..K).map(|i| (curve[i] - f.sigma[i]).abs() / f.sigma[i]).sum::<f64>() / K as f64;
        pass &= mean <= 0.01;
        detail.push(format!(
            "n={}: mean rel err {:.2}% (tol 1%), error of trial-mean curve {:.2}%",
            f.n,
            100.0 * mean,
            100.0 * curve_err
        ));
    }
    Outcome { pass, detail: detail.join("; ") }
}

/// |T[k-1,k-1]| / |T[k,k]| >= 5 for q = 1, 2, 3 on every trial seed.
fn rank_revelation(fx: &[Fixture]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for f in fx {
        for q in 1..=3 {
            let mut min_ratio = f64::INFINITY;
            for t in 0..TRIALS {
                let d = if q == 2 {
                    f.q2[t as usize].singular_value_estimates()
                } else {
                    corutv(&f.a, &SketchConfig::new(2 * K, q, t)).unwrap().singular_value_estimates()
                };
                min_ratio = min_ratio.min(d[K - 1] / d[K]);
            }
            pass &= min_ratio >= 5.0;
            detail.push(format!("n={} q={q}: min gap {:.2}", f.n, min_ratio));
        }
    }
    Outcome { pass, detail: format!("{} (tol >= 5)", detail.join(", ")) }
}

fn sweep() -> [usize; 4] {
    [K, 3 * K / 2, 2 * K, 3 * K]
}

/// Mean rank-ℓ error at q = 2 within 2% of the optimal rank-ℓ error, using
/// the lowrank-error harness.
fn lowrank_optimality(fx: &[Fixture]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for f in fx {
        let mut cfg = ExperimentConfig::new(Experiment::LowrankError);
        cfg.n = f.n;
        cfg.k = K;
        cfg.matrix_seed = MATRIX_SEED;
        cfg.q_power = 2;
        cfg.ells = sweep().to_vec();
        cfg.methods = vec![Method::Corutv];
        cfg.trials = TRIALS as usize;
        let r = run_lowrank_error(&cfg).unwrap();
        let mut ratios = Vec::new();
        for rec in r.records() {
            let ratio = rec[2].parse::<f64>().unwrap() / rec[4].parse::<f64>().unwrap();
            pass &= ratio <= 1.02;
            ratios.push(format!("ℓ={} {:.4}", rec[0], ratio));
        }
        detail.push(format!("n={}: {}", f.n, ratios.join(" ")));
    }
    Outcome { pass, detail: format!("ek/opt {} (tol 1.02)", detail.join("; ")) }
}

/// At q = 0, per seed and every ℓ: corutv and sor-svd within 5% of each
/// other and both no worse than tsr-svd; at least 18 of 20 seeds.
fn method_ordering(fx: &[Fixture]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for f in fx {
        let mut good = 0;
        let mut worst_gap: f64 = 0.0;
        for t in 0..TRIALS {
            let mut ok = true;
            for ell in sweep() {
                let sk = SketchConfig::new(ell, 0, t);
                let c = f.err(&corutv(&f.a, &sk).unwrap().reconstruct());
                let s = f.err(&sor_svd(&f.a, &sk).unwrap().reconstruct());
                let ts = f.err(&tsr_svd(&f.a, &sk).unwrap().reconstruct());
                let gap = (c - s).abs() / c.min(s);
                worst_gap = worst_gap.max(gap);
                ok &= gap <= 0.05 && c <= ts && s <= ts;
            }
            good += ok as usize;
        }
        pass &= good >= 18;
        detail.push(format!("n={}: {good}/20 seeds, max corutv/sor gap {:.2e}", f.n, worst_gap));
    }
    Outcome { pass, detail: format!("{} (need >= 18)", detail.join("; ")) }
}

fn pass_counts() -> Outcome {
    let (a, _) = gen_noisy_lowrank(&NoisyLowRankSpec::new(60, 5, 2)).unwrap();
    let mut pass = true;
    let mut seen = Vec::new();
    for variant in [Variant::ExactD, Variant::ApproxD, Variant::ApproxDFinalSketch] {
        for q in 0..=3 {
            let cfg = SketchConfig::new(10, q, 3).with_variant(variant);
            let (_, passes) = count_passes(&a, |c| corutv_with(c, &cfg)).unwrap();
            let expected = if variant.is_approx() { 2 * q + 2 } else { 2 * q + 3 };
            pass &= passes == expected && passes == corutv_passes(q, variant);
            seen.push(format!("{}/q{q}={passes}", variant.as_str()));
        }
    }
    Outcome { pass, detail: seen.join(" ") }
}

fn is_exact(run: &RpcaRun, k: usize, s: usize) -> bool {
    run.solution.as_ref().is_some_and(|sol| sol.converged && sol.rank_of_l == k && sol.nnz_of_s == s)
}

fn rpca_cfg(n: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Experiment::RpcaRecovery);
    cfg.sizes = vec![n];
    cfg.base_seed = seed;
    cfg
}

/// Table row at n = 1000, desk recovery at n = 400 over 20 seeds, and flop
/// dominance at every size.
fn rpca_recovery() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();

    let cfg = rpca_cfg(1000, 1);
    let spec = cfg.rpca_spec(1000);
    let out = run_rpca_recovery(&cfg).unwrap();
    for run in &out.runs {
        let sol = run.solution.as_ref().unwrap();
        let ok = is_exact(run, spec.k, spec.s)
            && sol.final_residual() <= 1e-5
            && (10..=14).contains(&sol.iterations);
        pass &= ok;
        detail.push(format!(
            "n=1000 {}: r={} nnz={} iters={} zeta={:.2e} {}",
            run.solver,
            sol.rank_of_l,
            sol.nnz_of_s,
            sol.iterations,
            sol.final_residual(),
            if ok { "ok" } else { "off" }
        ));
    }
    let dominance_1000 = out.runs[0].flops_est < out.runs[1].flops_est;

    let mut recovered = [0usize; 2];
    let mut slowest = [0.0f64; 2];
    let mut worst_l_err: f64 = 0.0;
    let mut flops_400 = [0u64; 2];
    for seed in 0..TRIALS {
        let cfg = rpca_cfg(400, seed);
        let spec = cfg.rpca_spec(400);
        let truth = gen_rpca_instance(&spec).unwrap();
        for (i, solver) in [Solver::AlmCorutv, Solver::InexactAlm].into_iter().enumerate() {
            let mut c = cfg.clone();
            c.solvers = vec![solver];
            let start = Instant::now();
            let out = run_rpca_recovery(&c).unwrap();
            slowest[i] = slowest[i].max(start.elapsed().as_secs_f64());
            let run = &out.runs[0];
            if seed == 0 {
                flops_400[i] = run.flops_est;
            }
            if is_exact(run, spec.k, spec.s) {
                recovered[i] += 1;
                let l = &run.solution.as_ref().unwrap().l;
                worst_l_err = worst_l_err.max(l.sub(&truth.l).unwrap().frobenius_norm() / truth.l.frobenius_norm());
            }
        }
    }
    for (i, solver) in [Solver::AlmCorutv, Solver::InexactAlm].into_iter().enumerate() {
        let ok = recovered[i] >= 19 && slowest[i] <= 60.0;
        pass &= ok;
        detail.push(format!(
            "n=400 {solver}: exact on {}/20 (need 19), slowest {:.2} s (limit 60)",
            recovered[i], slowest[i]
        ));
    }
    detail.push(format!("max rel L error among exact recoveries {worst_l_err:.1e}"));
    let dominance_400 = flops_400[0] < flops_400[1];
    pass &= dominance_1000 && dominance_400;
    detail.push(format!("flop dominance n=400 {dominance_400}, n=1000 {dominance_1000}"));
    Outcome { pass, detail: detail.join("; ") }
}

fn matrix_30x20() -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, 600).prop_map(|v| Matrix::new(30, 20, v).unwrap())
}

fn gram_defect(q: &Matrix) -> f64 {
    q.t_matmul(q).unwrap().max_abs_diff(&Matrix::identity(q.cols()))
}

/// Kernel identities on 100 random 30 x 20 instances each.
fn kernel_properties() -> Outcome {
    let config = Config { cases: 100, failure_persistence: None, ..Config::default() };
    let mut results = Vec::new();
    let mut run = |name: &str, test: &dyn Fn(Matrix) -> Result<(), TestCaseError>| {
        let mut runner =
            TestRunner::new_with_rng(config.clone(), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
        let r = runner.run(&matrix_30x20(), test);
        results.push((name.to_string(), r.map_err(|e| e.to_string())));
    };

    run("qr", &|a| {
        let f = householder_qr(&a).unwrap();
        prop_assert!(gram_defect(&f.q) <= 1e-10);
        prop_assert!(f.q.matmul(&f.r).unwrap().max_abs_diff(&a) <= 1e-10);
        Ok(())
    });
    run("qrcp", &|a| {
        let f = qrcp(&a).unwrap();
        prop_assert!(gram_defect(&f.q) <= 1e-10);
        let ap = a.select_columns(&f.perm);
        prop_assert!(f.q.matmul(&f.r).unwrap().max_abs_diff(&ap) <= 1e-10);
        let d = f.abs_diagonal();
        prop_assert!(d.windows(2).all(|w| w[0] >= w[1]));
        Ok(())
    });
    run("penrose", &|a| {
        let x = pseudoinverse(&a).unwrap();
        let ax = a.matmul(&x).unwrap();
        let xa = x.matmul(&a).unwrap();
        prop_assert!(ax.matmul(&a).unwrap().max_abs_diff(&a) <= 1e-9);
        prop_assert!(xa.matmul(&x).unwrap().max_abs_diff(&x) <= 1e-9);
        prop_assert!(ax.transpose().max_abs_diff(&ax) <= 1e-9);
        prop_assert!(xa.transpose().max_abs_diff(&xa) <= 1e-9);
        Ok(())
    });
    run("svd-optimality", &|a| {
        let f = jacobi_svd(&a).unwrap();
        for k in 0..=20 {
            let err = a.sub(&f.truncated(k)).unwrap().frobenius_norm();
            let tail = f.sigma[k..].iter().map(|s| s * s).sum::<f64>().sqrt();
            prop_assert!((err - tail).abs() <= 1e-9);
        }
        Ok(())
    });

    let pass = results.iter().all(|(_, r)| r.is_ok());
    let detail = results
        .iter()
        .map(|(n, r)| match r {
            Ok(()) => format!("{n} 100/100"),
            Err(e) => format!("{n} failed: {e}"),
        })
        .collect::<Vec<_>>()
        .join(", ");
    Outcome { pass, detail }
}

/// Every experiment, run twice and with different thread caps, gives the
/// same CSV bytes.
fn determinism() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for e in [Experiment::SvCompare, Experiment::LowrankError, Experiment::RpcaRecovery] {
        let mut cfg = ExperimentConfig::new(e);
        cfg.n = 80;
        cfg.k = 6;
        cfg.ell = 12;
        cfg.ells = vec![6, 9, 12];
        cfg.trials = 5;
        cfg.sizes = vec![60];
        cfg.base_seed = 11;
        let csv = |threads: usize| {
            let mut c = cfg.clone();
            c.threads = Some(threads);
            match e {
                Experiment::SvCompare => run_sv_compare(&c).unwrap().to_csv(),
                Experiment::LowrankError => run_lowrank_error(&c).unwrap().to_csv(),
                Experiment::RpcaRecovery => run_rpca_recovery(&c).unwrap().report.to_csv(),
            }
        };
        let first = csv(1);
        let same = first == csv(1) && first == csv(4);
        pass &= same;
        detail.push(format!("{} {}", e.as_str(), if same { "identical" } else { "differs" }));
    }
    Outcome { pass, detail: detail.join(", ") }
}

fn main() -> ExitCode {
    let mut all = true;
    let start = Instant::now();
    let fx = [Fixture::new(400), Fixture::new(1000)];
    println!("fixtures ready [{:.1} s]", start.elapsed().as_secs_f64());

    let criteria: [(&str, Check); 8] = [
        ("singular-value accuracy", Box::new(|| singular_value_accuracy(&fx))),
        ("rank revelation", Box::new(|| rank_revelation(&fx))),
        ("low-rank error optimality", Box::new(|| lowrank_optimality(&fx))),
        ("method ordering", Box::new(|| method_ordering(&fx))),
        ("pass counts", Box::new(pass_counts)),
        ("robust PCA recovery", Box::new(rpca_recovery)),
        ("kernel properties", Box::new(kernel_properties)),
        ("determinism", Box::new(determinism)),
    ];
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = check();
        all &= report(i + 1, name, &outcome, t.elapsed().as_secs_f64());
    }
    if all {
        println!("acceptance: all criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: at least one criterion FAILS");
        ExitCode::FAILURE
    }
}
