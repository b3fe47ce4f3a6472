mod common;

use matchlift::eigen::{
    eig_sym, eig_sym_with, proj_nonneg, proj_nsd, proj_psd, EigenMethod, SymmetricMatrix,
};
use matchlift::mapcore::factorize_consistent;
use matchlift::synth::{generate, ModelParams};
use proptest::prelude::*;

fn symmetric(max_order: usize) -> impl Strategy<Value = SymmetricMatrix> {
    (1..=max_order, any::<u64>(), 0.1f64..10.0).prop_map(|(order, seed, scale)| {
        let mut rng = common::rng(seed);
        SymmetricMatrix::from_dense(order, common::random_symmetric(&mut rng, order, scale)).unwrap()
    })
}

fn orthonormality_error(a: &matchlift::eigen::EigenDecomposition) -> f64 {
    let n = a.order();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let d: f64 = a.vector(i).iter().zip(a.vector(j)).map(|(x, y)| x * y).sum();
            worst = worst.max((d - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_tolerances(a in symmetric(40)) {
        for method in [EigenMethod::Jacobi, EigenMethod::Tridiagonal] {
            let e = eig_sym_with(&a, method).unwrap();
            prop_assert!(orthonormality_error(&e) <= 1e-9);
            prop_assert!(e.reconstruct().max_abs_diff(&a) <= 1e-8 * a.max_abs().max(f64::MIN_POSITIVE));
            prop_assert!(e.values().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn jacobi_and_tridiagonal_agree(a in symmetric(30)) {
        let j = eig_sym_with(&a, EigenMethod::Jacobi).unwrap();
        let t = eig_sym_with(&a, EigenMethod::Tridiagonal).unwrap();
        for (x, y) in j.values().iter().zip(t.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + a.max_abs()));
        }
    }

    #[test]
    fn cone_split(a in symmetric(30)) {
        let p = proj_psd(&a).unwrap();
        let n = proj_nsd(&a).unwrap();
        prop_assert!(p.axpy(1.0, &n).max_abs_diff(&a) < 1e-8 * (1.0 + a.max_abs()));
        prop_assert!(p.dot(&n).abs() < 1e-8 * (1.0 + a.frobenius().powi(2)));
        let pe = eig_sym(&p).unwrap();
        prop_assert!(*pe.values().last().unwrap() >= -1e-8 * (1.0 + a.max_abs()));
        // idempotence
        prop_assert!(proj_psd(&p).unwrap().max_abs_diff(&p) < 1e-8 * (1.0 + a.max_abs()));
    }

    #[test]
    fn nonneg_projection_is_idempotent(a in symmetric(12)) {
        let z = proj_nonneg(&a);
        prop_assert!(z.min_entry() >= 0.0);
        prop_assert_eq!(proj_nonneg(&z), z);
    }
}

#[test]
fn rank_of_ground_truth_matches_universe() {
    for seed in 0..5 {
        let inst = generate(&ModelParams {
            m: 3,
            n: 5,
            p_set: 0.8,
            p_obs: 1.0,
            p_true: 1.0,
            seed,
        })
        .unwrap();
        let x = &inst.x_gt;
        let e = eig_sym(&SymmetricMatrix::from_dense(x.order(), x.to_dense()).unwrap()).unwrap();
        let rank = e.values().iter().filter(|&&w| w.abs() > 1e-9).count();
        // independent count: number of clusters in the factorization
        let clusters = factorize_consistent(x).unwrap().universe().m;
        assert_eq!(rank, clusters);
    }
}

#[test]
fn large_order_uses_fast_path_within_tolerance() {
    let mut rng = common::rng(99);
    let a = SymmetricMatrix::from_dense(150, common::random_symmetric(&mut rng, 150, 1.0)).unwrap();
    let e = eig_sym(&a).unwrap();
    assert!(orthonormality_error(&e) <= 1e-9);
    assert!(e.reconstruct().max_abs_diff(&a) <= 1e-8 * a.max_abs());
}
