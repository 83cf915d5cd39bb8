use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use corutv::bench::{decompose, DecomposeOptions, Method};
use corutv::io::{read_matrix, Format};
use corutv::Matrix;

fn corutv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corutv"))
        .args(args)
        .env_remove("CORUTV_THREADS")
        .output()
        .expect("spawn corutv")
}

fn ok(args: &[&str]) -> Output {
    let out = corutv(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, n: &str, k: &str, seed: &str, format: &str) -> std::path::PathBuf {
    let path = dir.join(format!("a.{format}"));
    ok(&["gen", "--n", n, "--k", k, "--seed", seed, "--format", format, "--out", s(&path)]);
    path
}

fn reconstruct(dir: &Path, middle: &str, format: Format) -> Matrix {
    let ext = format.extension();
    let u = read_matrix(&dir.join(format!("u.{ext}")), format).unwrap();
    let t = read_matrix(&dir.join(format!("{middle}.{ext}")), format).unwrap();
    let v = read_matrix(&dir.join(format!("v.{ext}")), format).unwrap();
    u.matmul(&t).unwrap().matmul_t(&v).unwrap()
}

#[test]
fn decompose_round_trip_matches_library_error() {
    let tmp = tempfile::tempdir().unwrap();
    for (format, fmt) in [("csv", Format::Csv), ("bin", Format::Binary)] {
        let input = gen(tmp.path(), "80", "6", "5", format);
        let a = read_matrix(&input, fmt).unwrap();
        for (method, middle) in [("corutv", "t"), ("sor-svd", "sigma"), ("qrcp", "t"), ("svd", "sigma")] {
            let out = tmp.path().join(format!("{method}-{format}"));
            ok(&[
                "decompose", "--in", s(&input), "--method", method, "--ell", "12", "--q", "1", "--seed", "9",
                "--format", format, "--out", s(&out),
            ]);
            let cli_err = a.sub(&reconstruct(&out, middle, fmt)).unwrap().frobenius_norm();
            let lib = decompose(&a, &DecomposeOptions::new(method.parse::<Method>().unwrap(), 12, 1, 9)).unwrap();
            let lib_err = a.sub(&lib.reconstruct().unwrap()).unwrap().frobenius_norm();
            assert!((cli_err - lib_err).abs() <= 1e-12, "{method}/{format}: {cli_err} vs {lib_err}");
        }
    }
}

#[test]
fn decompose_metadata_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let input = gen(tmp.path(), "50", "4", "1", "csv");
    let out = tmp.path().join("d");
    ok(&["decompose", "--in", s(&input), "--ell", "8", "--q", "2", "--variant", "approx-d", "--out", s(&out)]);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["method"], "corutv");
    assert_eq!(meta["ell"], 8);
    assert_eq!(meta["q"], 2);
    assert_eq!(meta["seed"], 0);
    assert_eq!(meta["passes"], 6);
    assert!(meta["flops"].as_u64().unwrap() > 0);
}

#[test]
fn unknown_method_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let input = gen(tmp.path(), "30", "3", "1", "csv");
    let out = corutv(&["decompose", "--in", s(&input), "--method", "lanczos", "--out", s(&tmp.path().join("x"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lanczos"));

    let out = corutv(&["sv-compare", "--methods", "svd,nope"]);
    assert_eq!(out.status.code(), Some(1));
    let out = corutv(&["decompose", "--in", s(&tmp.path().join("missing.csv")), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    let out = corutv(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = corutv(&["lowrank-error", "--n", "40", "--k", "5", "--ells", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repeated_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let input = gen(tmp.path(), "60", "5", "2", "bin");
    let run = |name: &str| {
        let out = tmp.path().join(name);
        ok(&[
            "decompose", "--in", s(&input), "--method", "tsr-svd", "--ell", "10", "--seed", "17", "--format", "bin",
            "--out", s(&out),
        ]);
        ["u.bin", "sigma.bin", "v.bin", "meta.json"].map(|f| fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run("first"), run("second"));

    let sub = tmp.path().join("again");
    fs::create_dir(&sub).unwrap();
    let again = gen(&sub, "60", "5", "2", "bin");
    assert_eq!(fs::read(&input).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn experiment_csv_is_byte_identical_across_runs_and_thread_caps() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sweep.cfg");
    fs::write(&cfg, "# small sweep\nn = 60\nk = 5\nells = 5,8,10\ntrials = 4\nq = 1\n").unwrap();
    let run = |name: &str, threads: &str| {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_corutv"))
            .args(["lowrank-error", "--config", s(&cfg), "--seed", "3", "--out", s(&out)])
            .env("CORUTV_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        fs::read(out).unwrap()
    };
    let first = run("a.csv", "1");
    assert_eq!(first, run("b.csv", "1"));
    assert_eq!(first, run("c.csv", "4"));
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("ell,method,ek_mean,ek_std,svd_optimal\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 5);
}

#[test]
fn invalid_thread_cap_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_corutv"))
        .args(["sv-compare", "--n", "40", "--k", "4", "--ell", "8", "--trials", "2"])
        .env("CORUTV_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_then_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sv.cfg");
    fs::write(&cfg, "n=50\nk=4\nell=9\ntrials=2\nmethods=svd,corutv\n").unwrap();
    let out = ok(&["sv-compare", "--config", s(&cfg), "--ell", "7"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 7);

    fs::write(&cfg, "n=50\nwidth=3\n").unwrap();
    assert_eq!(corutv(&["sv-compare", "--config", s(&cfg)]).status.code(), Some(1));
}

#[test]
fn rpca_report_telemetry_and_nonconvergence_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("rpca.csv");
    let tel = tmp.path().join("tel");
    ok(&["rpca", "--sizes", "60", "--seed", "2", "--out", s(&out), "--telemetry", s(&tel)]);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "n,solver,rank_l,nnz_s,iters,zeta,flops_est");
    assert!(lines[1].starts_with("60,alm-corutv,"));
    assert!(lines[2].starts_with("60,inexact-alm,"));
    let telemetry = fs::read_to_string(tel.join("telemetry_n60_inexact-alm.csv")).unwrap();
    assert!(telemetry.starts_with("iter,zeta,rank_l,nnz_s,mu\n"));

    let cfg = tmp.path().join("short.cfg");
    fs::write(&cfg, "max_iter = 2\n").unwrap();
    let short = tmp.path().join("short.csv");
    let res = corutv(&["rpca", "--sizes", "60", "--config", s(&cfg), "--out", s(&short)]);
    assert_eq!(res.status.code(), Some(2));
    let text = fs::read_to_string(&short).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().contains(",2,"));
}

#[test]
fn gen_rpca_writes_parts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m.bin");
    ok(&["gen", "--kind", "rpca", "--n", "40", "--format", "bin", "--seed", "4", "--out", s(&out)]);
    let m = read_matrix(&out, Format::Binary).unwrap();
    let l = read_matrix(&tmp.path().join("m_l.bin"), Format::Binary).unwrap();
    let sp = read_matrix(&tmp.path().join("m_s.bin"), Format::Binary).unwrap();
    assert_eq!(m, l.add(&sp).unwrap());
    assert_eq!(sp.count_nonzero(0.0), 80);
}
