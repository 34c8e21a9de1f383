use krylov_core::fem::{
    assemble_1d, compare_traces, load_vector, operator_cg_solve, pcg_riesz_solve, refinement_study, Load,
};
use krylov_core::linalg::vector::{norm, sub};
use krylov_core::SolveOptions;
use proptest::prelude::*;

#[test]
fn riesz_pcg_and_operator_cg_produce_the_same_trace() {
    let opts = SolveOptions::default();
    for n in [3, 15, 31] {
        for c in [0.0, 1.0, 5.0] {
            for load in [Load::Const1, Load::SinBenchmark] {
                let sys = assemble_1d(n, c).unwrap();
                let f = load_vector(load.source(c), &sys);
                let pcg = pcg_riesz_solve(&sys, &f, &vec![0.0; n], &opts).unwrap();
                let op = operator_cg_solve(&sys, &f, &vec![0.0; n], &opts).unwrap();
                let dev = compare_traces(&pcg, &op).unwrap();
                assert!(dev.max() <= 1e-10, "n={n} c={c} {load:?}: {dev:?}");
                assert!(pcg.converged && op.converged);
            }
        }
    }
}

#[test]
fn smooth_benchmark_converges_at_second_order() {
    let opts = SolveOptions { rel_tol: 1e-12, max_iter: None };
    for c in [0.0, 1.0, 5.0] {
        let rows = refinement_study(15, c, Load::SinBenchmark, 4, &opts).unwrap();
        for row in &rows[1..] {
            let ratio = row.ratio.unwrap();
            assert!((3.5..=4.5).contains(&ratio), "c={c} n={}: ratio {ratio}", row.n_interior);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn assembly_matches_hat_function_integrals(n in 1usize..200, c in 0.0f64..10.0) {
        let sys = assemble_1d(n, c).unwrap();
        let h = 1.0 / (n + 1) as f64;
        prop_assert_eq!(sys.h(), h);
        for i in 0..n {
            prop_assert_eq!(sys.stiffness().diag()[i], 2.0 / h);
            prop_assert_eq!(sys.mass().diag()[i], 4.0 * h / 6.0);
            prop_assert!((sys.system().diag()[i] - (2.0 / h + c * 4.0 * h / 6.0)).abs() <= 1e-14 * (2.0 / h));
        }
        for i in 0..n - 1 {
            prop_assert_eq!(sys.stiffness().off()[i], -1.0 / h);
            prop_assert_eq!(sys.mass().off()[i], h / 6.0);
        }
    }

    #[test]
    fn pcg_residuals_are_true_and_preconditioned_orthogonal(n in 1usize..64, c in 0.0f64..10.0, sin_load in any::<bool>()) {
        let load = if sin_load { Load::SinBenchmark } else { Load::Const1 };
        let sys = assemble_1d(n, c).unwrap();
        let f = load_vector(load.source(c), &sys);
        let t = pcg_riesz_solve(&sys, &f, &vec![0.0; n], &SolveOptions::default()).unwrap();
        prop_assert!(t.converged);
        for s in &t.steps {
            let true_r = sub(&f, &sys.system().matvec(&s.u));
            prop_assert!(norm(&sub(&true_r, &s.r)) <= 1e-10 * norm(&f));
        }
        prop_assert!(t.preconditioned_orthogonality() <= 1e-8);
    }
}
