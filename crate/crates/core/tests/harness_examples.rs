use maximin::harness::{replay, run_experiment, run_on_task, Bootstrap, ExperimentConfig, Task, TaskSpec};
use maximin::strategy::{ModelSpec, SelectionRule, StrategyRegistry};
use maximin::summary::summarize;
use maximin::synthetic::ClusterSpec;
use maximin::Error;

fn cfg(task: TaskSpec, model: ModelSpec, score: SelectionRule, budget: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig { task, model, score, budget, seed, bootstrap: Bootstrap::None, stop_at_zero: false, output_dir: None }
}

const LAPLACE: ModelSpec = ModelSpec::Kernel { h: 0.1, p: 1.0 };

#[test]
fn constant_task_first_pick_is_near_the_middle() {
    for model in [LAPLACE, ModelSpec::Spline] {
        for seed in 0..5 {
            let mut c = cfg(TaskSpec::Threshold { n: 256, k: 1 }, model, SelectionRule::Function, 3, seed);
            c.bootstrap = Bootstrap::Endpoints;
            let task = Task::materialize(&c.task, seed).unwrap();
            let r = run_on_task(&c, &task, &StrategyRegistry::with_defaults(), None).unwrap();
            let xs: Vec<f64> = task.pool.points().iter().map(|p| p[0]).collect();
            let (lo, hi) = (r.steps[0].point[0], r.steps[1].point[0]);
            assert_eq!(lo, xs.iter().copied().fold(f64::INFINITY, f64::min));
            assert_eq!(hi, xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            assert_eq!(r.steps[0].score, None);
            let mid = 0.5 * (lo + hi);
            let pick = r.steps[2].point[0];
            if model == LAPLACE {
                let nearest = xs.iter().copied().filter(|&x| x != lo && x != hi).min_by(|a, b| {
                    (a - mid).abs().total_cmp(&(b - mid).abs())
                });
                assert_eq!(Some(pick), nearest, "seed {seed}");
            } else {
                // between identical labels every spline candidate ties
                assert!(pick > lo && pick < hi);
            }
        }
    }
}

#[test]
fn data_norm_explores_a_new_cluster_each_step() {
    let h = 0.5;
    let spec = ClusterSpec::grid_layout(6, h / 4.0, 6.0 * h * 12f64.ln(), 15, 2.0);
    for seed in 0..5 {
        let r = run_experiment(&cfg(TaskSpec::Clusters(spec.clone()), ModelSpec::Kernel { h, p: 2.0 }, SelectionRule::Data, 6, seed))
            .unwrap();
        assert!(r.steps.iter().all(|s| s.explore_hypothesis == Some(true)));
        assert_eq!(r.cluster_counts, Some(vec![1; 6]));
    }
}

#[test]
fn replay_reproduces_the_run() {
    for (model, score) in [(LAPLACE, SelectionRule::Data), (ModelSpec::Spline, SelectionRule::Function), (LAPLACE, SelectionRule::Random)]
    {
        let c = cfg(TaskSpec::Threshold { n: 200, k: 3 }, model, score, 20, 13);
        let first = run_experiment(&c).unwrap();
        assert_eq!(replay(&c, &first).unwrap(), first);
        let mut indices = first.selected();
        indices.sort_unstable();
        indices.dedup();
        assert_eq!(indices.len(), 20);
        for (i, s) in first.steps.iter().enumerate() {
            assert_eq!(s.step, i + 1);
        }
    }
}

#[test]
fn replay_detects_a_different_record() {
    let c = cfg(TaskSpec::Threshold { n: 200, k: 3 }, LAPLACE, SelectionRule::Function, 10, 1);
    let mut other = c.clone();
    other.seed = 2;
    let r = run_experiment(&other).unwrap();
    assert!(matches!(replay(&c, &r), Err(Error::InvalidArgument(_))));
}

#[test]
fn stop_at_zero_ends_early() {
    let mut c = cfg(TaskSpec::Threshold { n: 300, k: 3 }, LAPLACE, SelectionRule::Function, 300, 4);
    c.stop_at_zero = true;
    let r = run_experiment(&c).unwrap();
    let q = r.queries_to_zero.expect("reaches zero");
    assert_eq!(r.steps.len(), q);
    assert_eq!(r.final_error(), Some(0.0));
}

#[test]
fn summary_over_seeds() {
    let records: Vec<_> = (0..5)
        .map(|seed| {
            let mut c = cfg(TaskSpec::Threshold { n: 256, k: 2 }, LAPLACE, SelectionRule::Function, 40, seed);
            c.bootstrap = Bootstrap::Endpoints;
            run_experiment(&c).unwrap()
        })
        .collect();
    let s = summarize(&records).unwrap();
    assert_eq!(s.runs, 5);
    assert_eq!(s.per_step.len(), 40);
    for st in &s.per_step {
        assert!(st.q10 <= st.median && st.median <= st.q90);
    }
    assert!(s.median_queries_to_zero.unwrap() <= 40.0);

    let single = summarize(&records[..1]).unwrap();
    for (st, step) in single.per_step.iter().zip(&records[0].steps) {
        assert_eq!(st.median, step.train_error);
    }
    assert_eq!(single.queries_to_zero, vec![records[0].queries_to_zero]);

    let clusters = run_experiment(&cfg(
        TaskSpec::Clusters(ClusterSpec::thirteen_clusters(1.0, 5)),
        ModelSpec::Kernel { h: 1.0, p: 2.0 },
        SelectionRule::Data,
        3,
        0,
    ))
    .unwrap();
    assert!(summarize(&[records[0].clone(), clusters]).is_err());
}

#[test]
fn data_norm_spreads_selections_more_evenly_than_function_norm() {
    // mixed-label clusters; selections-per-cluster spread after 39 picks
    let h = 1.0;
    let spec = ClusterSpec::thirteen_clusters(h, 20);
    let spread = |score| {
        let records: Vec<_> = (0..3)
            .map(|seed| run_experiment(&cfg(TaskSpec::Clusters(spec.clone()), ModelSpec::Kernel { h, p: 2.0 }, score, 39, seed)).unwrap())
            .collect();
        summarize(&records).unwrap().cluster_count_std.unwrap()
    };
    let (data, function) = (spread(SelectionRule::Data), spread(SelectionRule::Function));
    assert!(data <= function, "data {data} vs function {function}");
}

#[test]
fn csv_task_with_holdout_reports_test_error() {
    let dir = tempfile::tempdir().unwrap();
    let (_, pool) = maximin::synthetic::gen_threshold_task(200, 3, 5).unwrap();
    let path = dir.path().join("d.csv");
    maximin::dataset::write_csv(&pool, &path).unwrap();
    let c = cfg(TaskSpec::Csv { path, holdout: Some(0.25) }, LAPLACE, SelectionRule::Function, 20, 0);
    let r = run_experiment(&c).unwrap();
    assert_eq!(r.pool_size, 150);
    assert_eq!(r.steps.len(), 20);
    assert!(r.steps.iter().all(|s| s.test_error.is_some()));
}
