mod common;

use matchlift::admm::{
    admm_solve, coefficient_matrix, default_lambda, kkt_report, lift, objective, AdmmOptions, ConstraintSystem,
};
use matchlift::eigen::{eig_sym, SymmetricMatrix};
use matchlift::mapcore::{BlockLayout, MapGraph};
use matchlift::synth::{generate, ModelParams};
use matchlift::Error;
use proptest::prelude::*;
use rand::Rng;

fn system() -> impl Strategy<Value = (ConstraintSystem, u64)> {
    (proptest::collection::vec(0usize..4, 1..5), 1usize..6, any::<u64>())
        .prop_map(|(sizes, m, seed)| (ConstraintSystem::new(&BlockLayout::new(sizes), m), seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn adjoint_identity((a, seed) in system()) {
        let mut rng = common::rng(seed);
        let order = a.order();
        let x = SymmetricMatrix::from_dense(order, common::random_symmetric(&mut rng, order, 1.0)).unwrap();
        let y: Vec<f64> = (0..a.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs: f64 = a.apply(&x).unwrap().iter().zip(&y).map(|(u, v)| u * v).sum();
        let rhs = x.dot(&a.apply_adjoint(&y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn aat_inverse((a, seed) in system()) {
        let mut rng = common::rng(seed);
        let y: Vec<f64> = (0..a.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = a.solve_aat(&a.apply(&a.apply_adjoint(&y).unwrap()).unwrap()).unwrap();
        for (u, v) in back.iter().zip(&y) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }
}

#[test]
fn constraint_layout_counts_and_rhs() {
    // sizes [2, 1], m = 3: border corner, 3 border entries, diagonal blocks
    // contribute 3 upper-triangle entries (2x2 block) + 1 (1x1 block)
    let a = ConstraintSystem::new(&BlockLayout::new(vec![2, 1]), 3);
    assert_eq!(a.order(), 4);
    assert_eq!(a.len(), 1 + 3 + 3 + 1);
    let lifted = lift(&matchlift::mapcore::BlockMapMatrix::diagonal(vec![2, 1]), 3);
    assert_eq!(a.residual(&lifted).unwrap(), 0.0);
    let b = a.b();
    assert_eq!(b[0], 3.0);
    assert_eq!(b.iter().filter(|&&v| v == 2.0).count(), 3, "border entries are counted from both sides");
}

#[test]
fn objective_matches_coefficient_form() {
    // obj(X) = -<W, lift(X)> - λN for consistent binary X
    for seed in 0..6 {
        let inst = generate(&ModelParams {
            m: 4,
            n: 5,
            p_set: 0.7,
            p_obs: 0.6,
            p_true: 0.5,
            seed,
        })
        .unwrap();
        let lambda = 0.37;
        let w = coefficient_matrix(&inst.x_in, &inst.graph, lambda).unwrap();
        for x in [&inst.x_gt, &inst.x_in] {
            let direct = objective(x, &inst.x_in, &inst.graph, lambda);
            let via_w = -w.dot(&lift(x, 4)) - lambda * x.order() as f64;
            assert!((direct - via_w).abs() < 1e-9, "{direct} vs {via_w}");
            let oracle = common::matrix_objective(x, &inst.x_in, &inst.graph, lambda);
            assert!((direct - oracle).abs() < 1e-9, "{direct} vs {oracle}");
        }
    }
}

#[test]
fn noiseless_solve_recovers_truth_and_satisfies_kkt() {
    let inst = generate(&ModelParams {
        m: 4,
        n: 6,
        p_set: 0.8,
        p_obs: 1.0,
        p_true: 1.0,
        seed: 12,
    })
    .unwrap();
    let lambda = default_lambda(&inst.graph);
    let report = admm_solve(&inst.x_in, &inst.graph, 4, lambda, &AdmmOptions::default()).unwrap();
    assert!(report.converged);
    let gap = report
        .x_hat
        .to_dense()
        .iter()
        .zip(inst.x_gt.to_dense())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(gap < 1e-3, "max deviation from truth {gap}");
    for rec in &report.trace {
        assert!(rec.identity_gap < 1e-8);
    }
    let s = &report.state;
    assert!(s.z.min_entry() >= 0.0);
    assert!(*eig_sym(&s.s).unwrap().values().last().unwrap() >= -1e-8);
    let kkt = kkt_report(&report, &inst.x_in, &inst.graph, lambda).unwrap();
    assert!(kkt.worst_violation < 1e-3, "{kkt:?}");
}

#[test]
fn invalid_parameters_are_rejected_before_iterating() {
    let inst = generate(&ModelParams {
        m: 2,
        n: 3,
        p_set: 1.0,
        p_obs: 1.0,
        p_true: 1.0,
        seed: 0,
    })
    .unwrap();
    let zero_mu = AdmmOptions {
        mu: 0.0,
        ..AdmmOptions::default()
    };
    assert!(matches!(
        admm_solve(&inst.x_in, &inst.graph, 2, 0.1, &zero_mu),
        Err(Error::InvalidParams(_))
    ));
    assert!(admm_solve(&inst.x_in, &inst.graph, 0, 0.1, &AdmmOptions::default()).is_err());
    assert!(admm_solve(&inst.x_in, &inst.graph, 2, -1.0, &AdmmOptions::default()).is_err());
    assert!(admm_solve(&inst.x_in, &MapGraph::complete(4), 2, 0.1, &AdmmOptions::default()).is_err());
}

#[test]
fn time_limit_is_reported() {
    let inst = generate(&ModelParams {
        m: 4,
        n: 8,
        p_set: 1.0,
        p_obs: 1.0,
        p_true: 0.3,
        seed: 1,
    })
    .unwrap();
    let opts = AdmmOptions {
        time_limit: Some(std::time::Duration::ZERO),
        ..AdmmOptions::default()
    };
    assert!(matches!(
        admm_solve(&inst.x_in, &inst.graph, 4, 0.1, &opts),
        Err(Error::Timeout { iterations: 1 })
    ));
}
