//! Pool-based active-learning loop, experiment configs and result files.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::read_csv;
use crate::error::{Error, Result};
use crate::labels::Label;
use crate::scoring::UnlabeledPool;
use crate::strategy::{strategy_name, ActiveLearner, ModelSpec, SelectionRule, StrategyRegistry};
use crate::synthetic::{gen_clusters, gen_threshold_task, ClusterSpec};

/// Where the pool comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TaskSpec {
    Threshold { n: usize, k: usize },
    Clusters(ClusterSpec),
    Csv {
        path: PathBuf,
        /// Fraction of rows held out for test error.
        #[serde(default)]
        holdout: Option<f64>,
    },
}

impl TaskSpec {
    pub fn family(&self) -> &'static str {
        match self {
            TaskSpec::Threshold { .. } => "threshold",
            TaskSpec::Clusters(_) => "clusters",
            TaskSpec::Csv { .. } => "csv",
        }
    }
}

/// Labels acquired before MaxiMin selection starts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bootstrap {
    #[default]
    None,
    /// Label the leftmost and rightmost pool points first (1D pools).
    Endpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: TaskSpec,
    pub model: ModelSpec,
    pub score: SelectionRule,
    pub budget: usize,
    pub seed: u64,
    #[serde(default)]
    pub bootstrap: Bootstrap,
    /// End the run as soon as training error reaches zero.
    #[serde(default)]
    pub stop_at_zero: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        // relative csv paths resolve against the config's directory
        if let TaskSpec::Csv { path: data, .. } = &mut cfg.task {
            if data.is_relative() {
                if let Some(dir) = path.as_ref().parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    pub fn strategy(&self) -> String {
        strategy_name(&self.model, self.score)
    }
}

/// A materialized task: the pool with its hidden labels and optional
/// cluster membership and held-out split.
#[derive(Debug, Clone)]
pub struct Task {
    pub family: &'static str,
    pub pool: UnlabeledPool,
    pub membership: Option<Vec<usize>>,
    pub num_clusters: Option<usize>,
    pub test: Option<UnlabeledPool>,
}

impl Task {
    pub fn materialize(spec: &TaskSpec, seed: u64) -> Result<Self> {
        match spec {
            TaskSpec::Threshold { n, k } => {
                let (_, pool) = gen_threshold_task(*n, *k, seed)?;
                Ok(Self { family: "threshold", pool, membership: None, num_clusters: None, test: None })
            }
            TaskSpec::Clusters(c) => {
                let s = gen_clusters(c, seed)?;
                Ok(Self {
                    family: "clusters",
                    pool: s.pool,
                    membership: Some(s.membership),
                    num_clusters: Some(c.num_balls()),
                    test: None,
                })
            }
            TaskSpec::Csv { path, holdout } => {
                let data = read_csv(path)?;
                let (pool, test) = match holdout {
                    None => (data, None),
                    Some(frac) => {
                        if !(0.0..1.0).contains(frac) {
                            return Err(Error::Config(format!("holdout fraction must be in [0, 1), got {frac}")));
                        }
                        let mut idx: Vec<usize> = (0..data.len()).collect();
                        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                        let n_test = (frac * data.len() as f64).round() as usize;
                        let (test_idx, train_idx) = idx.split_at(n_test);
                        (data.subset(train_idx), Some(data.subset(test_idx)))
                    }
                };
                Ok(Self { family: "csv", pool, membership: None, num_clusters: None, test })
            }
        }
    }
}

/// One labeling round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Number of labels held after this step (1-based).
    pub step: usize,
    pub index: usize,
    pub point: Vec<f64>,
    pub estimated_label: Label,
    pub true_label: Label,
    /// `None` for bootstrap labels.
    pub score: Option<f64>,
    pub train_error: f64,
    pub test_error: Option<f64>,
    /// Whether every ball still holds at most one labeled point.
    pub explore_hypothesis: Option<bool>,
}

/// Full trace of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: String,
    pub task_family: String,
    pub seed: u64,
    pub pool_size: usize,
    pub steps: Vec<StepRecord>,
    pub queries_to_zero: Option<usize>,
    pub cluster_counts: Option<Vec<usize>>,
}

impl RunRecord {
    pub fn final_error(&self) -> Option<f64> {
        self.steps.last().map(|s| s.train_error)
    }

    pub fn selected(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.index).collect()
    }
}

/// Fraction of pool points whose sign under `values` disagrees with the
/// hidden label.
pub fn training_error(values: &[f64], oracle: &[Label]) -> f64 {
    if oracle.is_empty() {
        return 0.0;
    }
    let wrong = values.iter().zip(oracle).filter(|(v, l)| Label::from_sign(**v) != **l).count();
    wrong as f64 / oracle.len() as f64
}

fn round_seeds(seed: u64, rounds: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a11c_e5e1_ec70);
    (0..rounds).map(|_| rng.next_u64()).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    run_with_registry(cfg, &StrategyRegistry::with_defaults(), None)
}

/// Re-runs `cfg` and checks each selection against `record`, failing on
/// the first divergence.
pub fn replay(cfg: &ExperimentConfig, record: &RunRecord) -> Result<RunRecord> {
    run_with_registry(cfg, &StrategyRegistry::with_defaults(), Some(&record.selected()))
}

pub fn run_with_registry(
    cfg: &ExperimentConfig,
    registry: &StrategyRegistry,
    forced: Option<&[usize]>,
) -> Result<RunRecord> {
    let task = Task::materialize(&cfg.task, cfg.seed)?;
    run_on_task(cfg, &task, registry, forced)
}

/// Runs the loop on an already materialized task.
pub fn run_on_task(
    cfg: &ExperimentConfig,
    task: &Task,
    registry: &StrategyRegistry,
    forced: Option<&[usize]>,
) -> Result<RunRecord> {
    let pool = &task.pool;
    let oracle = pool
        .oracle()
        .ok_or_else(|| Error::Config("task pool carries no oracle labels".into()))?
        .to_vec();
    if cfg.budget > pool.len() {
        return Err(Error::Config(format!("budget {} exceeds pool size {}", cfg.budget, pool.len())));
    }
    let name = cfg.strategy();
    let mut learner = registry.create(&name, &cfg.model, pool)?;

    let mut bootstrap: Vec<usize> = Vec::new();
    if cfg.bootstrap == Bootstrap::Endpoints && !pool.is_empty() {
        if pool.dim() != Some(1) {
            return Err(Error::Config("endpoint bootstrap needs a one-dimensional pool".into()));
        }
        let by_x = |a: &usize, b: &usize| pool.point(*a)[0].total_cmp(&pool.point(*b)[0]);
        let lo = (0..pool.len()).min_by(by_x).expect("nonempty");
        let hi = (0..pool.len()).max_by(by_x).expect("nonempty");
        bootstrap.push(lo);
        if hi != lo {
            bootstrap.push(hi);
        }
        bootstrap.truncate(cfg.budget);
    }

    let seeds = round_seeds(cfg.seed, cfg.budget);
    let mut remaining: Vec<usize> = (0..pool.len()).collect();
    let mut steps = Vec::with_capacity(cfg.budget);
    let mut per_cluster = task.num_clusters.map(|m| vec![0usize; m]);
    let mut queries_to_zero = None;

    for round in 0..cfg.budget {
        if remaining.is_empty() {
            break;
        }
        let (index, estimated_label, score) = if round < bootstrap.len() {
            let i = bootstrap[round];
            (i, Label::from_sign(learner.pool_values()[i]), None)
        } else {
            let choice = learner.select(&remaining, seeds[round])?;
            if let Some(f) = forced {
                let i = *f.get(round).ok_or_else(|| Error::Config("replay ran out of selections".into()))?;
                if i != choice.index {
                    return Err(Error::InvalidArgument(format!(
                        "replay diverged at step {}: recorded {i}, selected {}",
                        round + 1,
                        choice.index
                    )));
                }
            }
            (choice.index, choice.label, Some(choice.score))
        };
        let pos = remaining
            .iter()
            .position(|&i| i == index)
            .ok_or_else(|| Error::InvalidArgument(format!("pool index {index} was already labeled")))?;
        remaining.swap_remove(pos);
        remaining.sort_unstable();

        let true_label = oracle[index];
        learner.observe(index, true_label)?;

        let train_error = training_error(&learner.pool_values(), &oracle);
        let test_error = match &task.test {
            Some(test) => Some(held_out_error(learner.as_mut(), test)?),
            None => None,
        };
        let explore_hypothesis = match (&task.membership, per_cluster.as_mut()) {
            (Some(mem), Some(counts)) => {
                counts[mem[index]] += 1;
                Some(counts.iter().all(|&c| c <= 1))
            }
            _ => None,
        };
        let reached_zero = train_error == 0.0 && queries_to_zero.is_none();
        if reached_zero {
            queries_to_zero = Some(round + 1);
        }
        steps.push(StepRecord {
            step: round + 1,
            index,
            point: pool.point(index).to_vec(),
            estimated_label,
            true_label,
            score,
            train_error,
            test_error,
            explore_hypothesis,
        });
        if reached_zero && cfg.stop_at_zero {
            break;
        }
    }

    Ok(RunRecord {
        strategy: name,
        task_family: task.family.to_string(),
        seed: cfg.seed,
        pool_size: pool.len(),
        steps,
        queries_to_zero,
        cluster_counts: per_cluster,
    })
}

fn held_out_error(learner: &mut dyn ActiveLearner, test: &UnlabeledPool) -> Result<f64> {
    let labels = test.oracle().unwrap_or(&[]);
    let mut values = Vec::with_capacity(test.len());
    for x in test.points() {
        values.push(learner.predict(x)?);
    }
    Ok(training_error(&values, labels))
}

/// Writes `trace.csv` with columns
/// `step,index,t_u,true_label,score,train_error`.
pub fn write_trace<W: std::io::Write>(record: &RunRecord, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "index", "t_u", "true_label", "score", "train_error"])?;
    for s in &record.steps {
        w.write_record([
            s.step.to_string(),
            s.index.to_string(),
            s.estimated_label.to_string(),
            s.true_label.to_string(),
            s.score.map(|v| v.to_string()).unwrap_or_default(),
            s.train_error.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Contents of `summary.json` for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: String,
    pub task: String,
    pub seed: u64,
    pub labels: usize,
    pub queries_to_zero: Option<usize>,
    pub final_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_test_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_cluster_counts: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explore_hypothesis_held_until: Option<usize>,
}

impl From<&RunRecord> for RunSummary {
    fn from(r: &RunRecord) -> Self {
        let held_until = r.steps.iter().take_while(|s| s.explore_hypothesis == Some(true)).count();
        Self {
            strategy: r.strategy.clone(),
            task: r.task_family.clone(),
            seed: r.seed,
            labels: r.steps.len(),
            queries_to_zero: r.queries_to_zero,
            final_error: r.final_error(),
            final_test_error: r.steps.last().and_then(|s| s.test_error),
            per_cluster_counts: r.cluster_counts.clone(),
            explore_hypothesis_held_until: r.cluster_counts.as_ref().map(|_| held_until),
        }
    }
}

/// Writes `trace.csv` and `summary.json` into `dir`.
pub fn write_outputs(record: &RunRecord, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_trace(record, fs::File::create(dir.join("trace.csv"))?)?;
    let summary = RunSummary::from(record);
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}
