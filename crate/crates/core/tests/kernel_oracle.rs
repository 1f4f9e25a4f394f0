use approx::assert_relative_eq;
use maximin::kernel::{kernel_eval, kernel_matrix};
use maximin::pool_cache::KernelPoolState;
use maximin::scoring::{score_data_norm, score_function_norm, select_next};
use maximin::{KernelConfig, KernelInterpolator, Label, LabeledSet, ScoreKind, UnlabeledPool};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> LabeledSet {
    let mut set = LabeledSet::new();
    while set.len() < n {
        let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let y = if rng.gen::<bool>() { Label::Pos } else { Label::Neg };
        set.push(x, y).unwrap();
    }
    set
}

/// Dense inverse, no factorization reuse.
fn dense_norm(set: &LabeledSet, cfg: &KernelConfig) -> f64 {
    let k = kernel_matrix(set.points(), cfg);
    let y = DVector::from_vec(set.label_values());
    let inv = k.try_inverse().unwrap();
    y.dot(&(&inv * &y))
}

#[test]
fn fit_matches_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..40 {
        let d = 1 + trial % 3;
        let cfg = KernelConfig::new(rng.gen_range(0.2..1.0), [1.0, 1.5, 2.0][trial % 3]).unwrap();
        let n = rng.gen_range(1..25);
        let set = random_set(&mut rng, n, d);
        let m = KernelInterpolator::fit(&set, cfg).unwrap();
        assert_relative_eq!(m.norm_sq(), dense_norm(&set, &cfg), max_relative = 1e-9);
        for (x, y) in set.iter() {
            assert_relative_eq!(m.evaluate(x).unwrap(), y.value(), epsilon = 1e-9);
        }
    }
}

#[test]
fn data_norm_matches_pool_average_of_refit_change() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let cfg = KernelConfig::new(0.4, 2.0).unwrap();
        let set = random_set(&mut rng, 6, 2);
        let pool = UnlabeledPool::new((0..30).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect()).unwrap();
        let m = KernelInterpolator::fit(&set, cfg).unwrap();
        let u = pool.point(0).to_vec();
        let s = score_data_norm(&m, &u, &pool).unwrap();
        let refit = m.augmented_fit(&u, s.label).unwrap();
        let direct: f64 = pool
            .points()
            .iter()
            .map(|x| (refit.evaluate(x).unwrap() - m.evaluate(x).unwrap()).powi(2))
            .sum::<f64>()
            / pool.len() as f64;
        assert_relative_eq!(s.score, direct, max_relative = 1e-8, epsilon = 1e-14);
    }
}

#[test]
fn pool_state_tracks_direct_scores_through_a_run() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = KernelConfig::new(0.3, 1.0).unwrap();
    let pts: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    let pool = UnlabeledPool::new(pts.clone()).unwrap();
    for dense in [true, false] {
        let mut state = KernelPoolState::with_backend(&pool, cfg, dense);
        let mut set = LabeledSet::new();
        for step in 0..8 {
            let i = step * 7;
            let y = if rng.gen::<bool>() { Label::Pos } else { Label::Neg };
            state.condition_on(i, y).unwrap();
            set.push(pts[i].clone(), y).unwrap();
            let m = KernelInterpolator::fit(&set, cfg).unwrap();
            assert_relative_eq!(state.norm_sq(), m.norm_sq(), max_relative = 1e-9);
            for j in (0..60).filter(|j| !state.is_labeled(*j)) {
                assert_relative_eq!(state.values()[j], m.evaluate(&pts[j]).unwrap(), epsilon = 1e-9);
                let direct = score_function_norm(&m, &pts[j]).unwrap();
                let cached = state.score_function_norm(j).unwrap();
                assert_eq!(cached.label, direct.label);
                assert_relative_eq!(cached.score, direct.score, max_relative = 1e-8);
            }
        }
    }
}

#[test]
fn selection_does_not_depend_on_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = KernelConfig::laplace(0.2).unwrap();
    let set = random_set(&mut rng, 5, 1);
    let pool = UnlabeledPool::new((0..400).map(|_| vec![rng.gen::<f64>()]).collect()).unwrap();
    let m = KernelInterpolator::fit(&set, cfg).unwrap();
    let pick = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| select_next(&m, &pool, ScoreKind::DataNorm, 3).unwrap())
    };
    assert_eq!(pick(1), pick(4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric_and_bounded(
        x in prop::collection::vec(-5.0f64..5.0, 3),
        y in prop::collection::vec(-5.0f64..5.0, 3),
        h in 0.05f64..3.0,
        p in 1.0f64..3.0,
    ) {
        let cfg = KernelConfig::new(h, p).unwrap();
        let a = kernel_eval(&x, &y, &cfg).unwrap();
        prop_assert_eq!(a, kernel_eval(&y, &x, &cfg).unwrap());
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert_eq!(kernel_eval(&x, &x, &cfg).unwrap(), 1.0);
    }

    #[test]
    fn adding_a_point_never_lowers_the_norm(seed in 0u64..1000, n in 1usize..15, d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = KernelConfig::new(rng.gen_range(0.2..1.0), 2.0).unwrap();
        let set = random_set(&mut rng, n, d);
        let m = KernelInterpolator::fit(&set, cfg).unwrap();
        let u: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        for t in [Label::Pos, Label::Neg] {
            prop_assert!(m.norm_increment(&u, t).unwrap() >= 0.0);
            prop_assert!(m.augmented_fit(&u, t).unwrap().norm_sq() >= m.norm_sq() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn augmented_fit_equals_refit(seed in 0u64..1000, n in 1usize..20, d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = KernelConfig::new(rng.gen_range(0.2..1.0), 1.0).unwrap();
        let set = random_set(&mut rng, n, d);
        let m = KernelInterpolator::fit(&set, cfg).unwrap();
        let u: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let t = if rng.gen::<bool>() { Label::Pos } else { Label::Neg };
        let aug = m.augmented_fit(&u, t).unwrap();
        let mut bigger = set.clone();
        bigger.push(u.clone(), t).unwrap();
        let refit = KernelInterpolator::fit(&bigger, cfg).unwrap();
        prop_assert!((aug.norm_sq() - refit.norm_sq()).abs() <= 1e-8 * refit.norm_sq());
        let probe: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        prop_assert!((aug.evaluate(&probe).unwrap() - refit.evaluate(&probe).unwrap()).abs() <= 1e-8);
    }
}
