//! Randomized invariants over the public API.

use proptest::prelude::*;

use corutv::io::{read_binary, read_csv, write_binary, write_csv};
use corutv::linalg::{householder_qr, jacobi_svd, pseudoinverse, qrcp};
use corutv::randla::{corutv, flop_estimate, gaussian_matrix, SketchConfig, Variant};
use corutv::rpca::{shrink, svt};
use corutv::testgen::{gen_noisy_lowrank, gen_rpca_instance, NoisyLowRankSpec, RpcaInstanceSpec};
use corutv::Matrix;

fn tall() -> impl Strategy<Value = Matrix> {
    (1usize..25, 0usize..15, any::<u64>()).prop_map(|(n, extra, seed)| gaussian_matrix(n + extra, n, seed))
}

fn any_shape() -> impl Strategy<Value = Matrix> {
    (1usize..20, 1usize..20, any::<u64>()).prop_map(|(m, n, seed)| gaussian_matrix(m, n, seed))
}

fn gram_defect(q: &Matrix) -> f64 {
    q.t_matmul(q).unwrap().max_abs_diff(&Matrix::identity(q.cols()))
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

/// `n x n` matrix of exact rank `k` with singular values in `[1, 10]`.
fn low_rank(n: usize, k: usize, seed: u64) -> Matrix {
    let u = householder_qr(&gaussian_matrix(n, k, seed)).unwrap().q;
    let v = householder_qr(&gaussian_matrix(n, k, seed ^ 0x5555)).unwrap().q;
    let s: Vec<f64> = (0..k).map(|i| 10.0 - 9.0 * i as f64 / k.max(2) as f64).collect();
    u.matmul(&Matrix::diag(&s)).unwrap().matmul_t(&v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn qr_is_orthonormal_and_exact(a in tall()) {
        let f = householder_qr(&a).unwrap();
        prop_assert!(gram_defect(&f.q) <= 1e-10);
        prop_assert!(rel(&f.q.matmul(&f.r).unwrap(), &a) <= 1e-10);
    }

    #[test]
    fn qrcp_is_orthonormal_exact_and_monotone(a in any_shape()) {
        let f = qrcp(&a).unwrap();
        prop_assert!(gram_defect(&f.q) <= 1e-10);
        prop_assert!(rel(&f.q.matmul(&f.r).unwrap(), &a.select_columns(&f.perm)) <= 1e-10);
        let d = f.abs_diagonal();
        prop_assert!(d.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn pseudoinverse_satisfies_penrose(a in any_shape()) {
        let x = pseudoinverse(&a).unwrap();
        let ax = a.matmul(&x).unwrap();
        let xa = x.matmul(&a).unwrap();
        prop_assert!(ax.matmul(&a).unwrap().max_abs_diff(&a) <= 1e-9);
        prop_assert!(xa.matmul(&x).unwrap().max_abs_diff(&x) <= 1e-9);
        prop_assert!(ax.transpose().max_abs_diff(&ax) <= 1e-9);
        prop_assert!(xa.transpose().max_abs_diff(&xa) <= 1e-9);
    }

    #[test]
    fn corutv_factors_are_orthonormal_and_replayable(
        (m, n) in (8usize..40).prop_flat_map(|n| (n..n + 20, Just(n))),
        ell_frac in 0.2f64..0.9,
        q in 0usize..3,
        seed in any::<u64>(),
    ) {
        let a = gaussian_matrix(m, n, seed);
        let ell = ((n as f64 * ell_frac) as usize).max(1);
        let cfg = SketchConfig::new(ell, q, seed.wrapping_add(1));
        let f = corutv(&a, &cfg).unwrap();
        prop_assert!(gram_defect(&f.u) <= 1e-10);
        prop_assert!(gram_defect(&f.v) <= 1e-10);
        let g = corutv(&a, &cfg).unwrap();
        prop_assert_eq!(&f.u, &g.u);
        prop_assert_eq!(&f.t, &g.t);
        prop_assert_eq!(&f.v, &g.v);
    }

    #[test]
    fn lowrank_error_respects_optimum(n in 15usize..40, ell in 2usize..10, q in 0usize..3, seed in any::<u64>()) {
        let a = gaussian_matrix(n, n, seed);
        let sigma = jacobi_svd(&a).unwrap().sigma;
        let f = corutv(&a, &SketchConfig::new(ell, q, seed)).unwrap();
        let err = a.sub(&f.reconstruct()).unwrap().frobenius_norm();
        let opt = sigma[ell..].iter().map(|s| s * s).sum::<f64>().sqrt();
        prop_assert!(err >= opt - 1e-9, "{} < {}", err, opt);
    }

    #[test]
    fn exact_and_approx_compression_agree_on_low_rank(n in 20usize..45, k in 1usize..6, q in 0usize..3, seed in any::<u64>()) {
        let a = low_rank(n, k, seed);
        let errs: Vec<f64> = [Variant::ExactD, Variant::ApproxD]
            .into_iter()
            .map(|v| {
                let f = corutv(&a, &SketchConfig::new(2 * k, q, seed).with_variant(v)).unwrap();
                a.sub(&f.reconstruct()).unwrap().frobenius_norm()
            })
            .collect();
        prop_assert!((errs[0] - errs[1]).abs() <= 1e-6 * a.frobenius_norm(), "{:?}", errs);
    }

    #[test]
    fn shrink_minimizes_the_scalar_objective(x in -50.0f64..50.0, delta in 0.0f64..10.0, z in -60.0f64..60.0) {
        let s = shrink(&Matrix::new(1, 1, vec![x]).unwrap(), delta)[(0, 0)];
        let obj = |z: f64| delta * z.abs() + 0.5 * (z - x) * (z - x);
        prop_assert!(obj(s) <= obj(z) + 1e-12);
        prop_assert!(s == 0.0 || s.signum() == x.signum());
    }

    #[test]
    fn svt_shrinks_the_spectrum(a in any_shape(), delta in 0.0f64..3.0) {
        let sigma = jacobi_svd(&a).unwrap().sigma;
        let (d, rank) = svt(&a, delta).unwrap();
        let got = jacobi_svd(&d).unwrap().sigma;
        let want: Vec<f64> = sigma.iter().map(|s| (s - delta).max(0.0)).collect();
        prop_assert_eq!(rank, want.iter().filter(|&&s| s > 0.0).count());
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-10 * (1.0 + sigma[0]));
        }
    }

    #[test]
    fn matrix_files_round_trip_bitwise(m in 1usize..12, n in 1usize..12, exps in prop::collection::vec(-300i32..300, 144), seed in any::<u64>()) {
        let g = gaussian_matrix(m, n, seed);
        let a = Matrix::from_fn(m, n, |i, j| g[(i, j)] * 10f64.powi(exps[i * 12 + j]));
        let mut csv = Vec::new();
        write_csv(&a, &mut csv).unwrap();
        prop_assert_eq!(&read_csv(csv.as_slice()).unwrap(), &a);
        let mut bin = Vec::new();
        write_binary(&a, &mut bin).unwrap();
        prop_assert_eq!(&read_binary(bin.as_slice()).unwrap(), &a);
    }

    #[test]
    fn rpca_instances_have_exact_support(n in 5usize..40, k in 0usize..5, frac in 0.0f64..0.5, amp in 1.0f64..100.0, seed in any::<u64>()) {
        let spec = RpcaInstanceSpec { n, k: k.min(n), s: (frac * (n * n) as f64) as usize, amplitude: amp, seed };
        let inst = gen_rpca_instance(&spec).unwrap();
        prop_assert_eq!(inst.s.count_nonzero(0.0), spec.s);
        prop_assert!(inst.s.as_slice().iter().all(|&x| x == 0.0 || x.abs() == amp));
        prop_assert_eq!(&gen_rpca_instance(&spec).unwrap().m, &inst.m);
    }

    #[test]
    fn noisy_generator_is_reproducible(n in 4usize..30, k in 1usize..4, seed in any::<u64>()) {
        let spec = NoisyLowRankSpec::new(n, k.min(n - 1), seed);
        prop_assert_eq!(gen_noisy_lowrank(&spec).unwrap(), gen_noisy_lowrank(&spec).unwrap());
    }

    #[test]
    fn flop_estimate_grows_with_work(m in 50usize..5000, n in 50usize..5000, ell in 1usize..50, q in 0usize..4) {
        for v in [Variant::ExactD, Variant::ApproxD] {
            let base = flop_estimate(m, n, ell, q, v);
            prop_assert!(flop_estimate(m, n, ell + 1, q, v) > base);
            prop_assert!(flop_estimate(m, n, ell, q + 1, v) > base);
            prop_assert!(flop_estimate(m + 1, n, ell, q, v) > base);
        }
    }
}
