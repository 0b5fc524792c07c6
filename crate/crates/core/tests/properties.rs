//! Invariants over seeded random instances.

use cvrobust::discrimination::{advantage_ratio, optimal_binary_task, p_success, random_task};
use cvrobust::free_sets::free_value;
use cvrobust::linalg::{self, C64};
use cvrobust::measures::{l1_norm, schmidt_robustness};
use cvrobust::random;
use cvrobust::solver::sandwich;
use cvrobust::{CoherentGrid, DensityOperator, Error, FockVector, FreeSetModel, SolverConfig, Witness};
use proptest::prelude::*;

fn state(seed: u64, dim: usize) -> DensityOperator {
    let mut rng = random::rng(seed, 0);
    let rank = 1 + (seed as usize % dim);
    DensityOperator::new(vec![dim], random::density_matrix(&mut rng, dim, rank), 0.0).unwrap()
}

/// Classical free value, or `None` when the grid guard rejects the witness.
fn classical(w: &linalg::CMatrix) -> Option<f64> {
    let model = FreeSetModel::classical(CoherentGrid::new(3.0, 0.1, 64).unwrap());
    match free_value(w, &model) {
        Ok(r) => Some(r.value),
        Err(Error::GridTooCoarse { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_value_is_homogeneous(seed in any::<u64>(), dim in 2usize..7, c in 0.1f64..10.0) {
        let w = state(seed, dim).into_matrix().scale(dim as f64);
        let model = FreeSetModel::incoherent();
        let a = free_value(&w, &model).unwrap().value;
        let b = free_value(&w.scale(c), &model).unwrap().value;
        prop_assert!((b - c * a).abs() <= 1e-12 * c * a, "{a} {b} {c}");
        // the guard threshold is relative, but rounding can still tip an
        // instance sitting exactly on it
        if let (Some(a), Some(b)) = (classical(&w), classical(&w.scale(c))) {
            prop_assert!((b - c * a).abs() <= 1e-8 * c * a, "{a} {b} {c}");
        }
    }

    #[test]
    fn incoherent_bracket_is_ordered_and_below_l1(seed in any::<u64>(), dim in 2usize..7) {
        let rho = state(seed, dim);
        let b = sandwich(&rho, &FreeSetModel::incoherent(), &SolverConfig::default()).unwrap().bounds;
        let off_diagonal = l1_norm(rho.matrix()) - 1.0;
        prop_assert!(b.lower >= 1.0);
        prop_assert!(b.lower <= b.upper + 1e-9, "{b:?}");
        // generalized robustness of coherence never exceeds 1 + the l1 coherence
        prop_assert!(b.lower <= 1.0 + off_diagonal + 1e-9, "{b:?} {off_diagonal}");
        prop_assert!(b.gap <= 1e-3 * b.lower + 1e-9);
    }

    #[test]
    fn pure_bipartite_bounds_coincide(seed in any::<u64>(), da in 2usize..5, db in 2usize..5) {
        let v = random::unit_vector(&mut random::rng(seed, 1), da * db);
        let b = schmidt_robustness(&FockVector::new(vec![da, db], v, 0.0).unwrap()).unwrap();
        prop_assert!((b.upper - b.lower).abs() <= 1e-9 * b.upper, "{b:?}");
        prop_assert!(b.upper <= da.min(db) as f64 + 1e-9);
    }

    #[test]
    fn optimal_task_ratio_is_scale_free(seed in any::<u64>(), dim in 2usize..6, c in 0.01f64..100.0) {
        let model = FreeSetModel::incoherent();
        let rho = state(seed, dim);
        let w = state(seed ^ 0x9e37, dim).into_matrix();
        let ratio = |m: &cvrobust::linalg::CMatrix| {
            let wit = Witness::evaluate(m.clone(), &model).unwrap();
            advantage_ratio(&rho, &optimal_binary_task(&wit).unwrap(), &model).unwrap().ratio
        };
        let base = ratio(&w);
        prop_assert!((ratio(&w.scale(c)) - base).abs() <= 1e-9 * base);
        let wit = Witness::evaluate(w.clone(), &model).unwrap();
        prop_assert!((base - wit.lower_bound(rho.matrix())).abs() <= 1e-9 * base);
    }

    #[test]
    fn success_probabilities_are_probabilities(seed in any::<u64>(), dim in 2usize..6, branches in 1usize..4) {
        let task = random_task(dim, branches, seed, 0);
        let p = p_success(&state(seed, dim), &task).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p), "{p}");
    }

    #[test]
    fn phase_rotation_preserves_classical_free_value(seed in any::<u64>(), theta in 0.0f64..6.3) {
        let dim = 6;
        let w = state(seed, dim).into_matrix();
        let u = linalg::CMatrix::from_fn(dim, dim, |i, j| {
            if i == j { C64::from_polar(1.0, theta * i as f64) } else { C64::new(0.0, 0.0) }
        });
        // rotated witnesses sample the landscape at other grid points, so the
        // guard may fire on only one of them
        if let (Some(a), Some(b)) = (classical(&w), classical(&(&u * &w * u.adjoint()))) {
            prop_assert!((a - b).abs() <= 1e-6 * a, "{a} {b}");
        }
    }
}
