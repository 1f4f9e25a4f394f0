//! Active learners as trait objects, registered by name.
//!
//! A learner owns its model state over a fixed pool. Each round the
//! harness asks it to [`select`](ActiveLearner::select) among the remaining
//! pool indices and then reports the revealed label through
//! [`observe`](ActiveLearner::observe).

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelConfig, KernelInterpolator};
use crate::labels::{Label, LabeledSet};
use crate::pool_cache::KernelPoolState;
use crate::scoring::{pick, ScoreKind, ScoredCandidate, UnlabeledPool};
use crate::spline::{fit_spline_with_margin, Density1D, SplineInterpolator};

/// Model family and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Kernel {
        h: f64,
        #[serde(default = "default_exponent")]
        p: f64,
    },
    Spline,
}

fn default_exponent() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Kernel { .. } => "kernel",
            ModelSpec::Spline => "spline",
        }
    }

    pub fn kernel_config(&self) -> Result<Option<KernelConfig>> {
        match *self {
            ModelSpec::Kernel { h, p } => Ok(Some(KernelConfig::new(h, p)?)),
            ModelSpec::Spline => Ok(None),
        }
    }
}

/// How candidates are ranked: one of the MaxiMin scores or uniformly at
/// random.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionRule {
    Function,
    Data,
    Random,
}

impl SelectionRule {
    pub fn score_kind(self) -> Option<ScoreKind> {
        match self {
            SelectionRule::Function => Some(ScoreKind::FunctionNorm),
            SelectionRule::Data => Some(ScoreKind::DataNorm),
            SelectionRule::Random => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SelectionRule::Function => "function",
            SelectionRule::Data => "data",
            SelectionRule::Random => "random",
        }
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Registry name of a model/rule combination, e.g. `kernel-data`.
pub fn strategy_name(model: &ModelSpec, rule: SelectionRule) -> String {
    format!("{}-{}", model.family(), rule)
}

pub trait ActiveLearner: Send {
    fn name(&self) -> &str;

    /// Chooses the next pool index among `remaining`.
    fn select(&mut self, remaining: &[usize], rng_seed: u64) -> Result<ScoredCandidate>;

    /// Adds the revealed label of pool point `index`.
    fn observe(&mut self, index: usize, label: Label) -> Result<()>;

    /// Current interpolant at every pool point.
    fn pool_values(&self) -> Vec<f64>;

    /// Current interpolant at an arbitrary point.
    fn predict(&mut self, x: &[f64]) -> Result<f64>;

    fn labeled(&self) -> &LabeledSet;
}

fn uniform_choice(remaining: &[usize], rng_seed: u64) -> Result<usize> {
    if remaining.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok(remaining[rng.gen_range(0..remaining.len())])
}

/// Kernel learner backed by the incremental pool state.
pub struct KernelLearner {
    name: String,
    rule: SelectionRule,
    pool: UnlabeledPool,
    state: KernelPoolState,
    labeled: LabeledSet,
    model: Option<KernelInterpolator>,
}

impl KernelLearner {
    pub fn new(name: &str, config: KernelConfig, rule: SelectionRule, pool: &UnlabeledPool) -> Self {
        Self {
            name: name.to_string(),
            rule,
            pool: pool.clone(),
            state: KernelPoolState::new(pool, config),
            labeled: LabeledSet::new(),
            model: None,
        }
    }

    pub fn state(&self) -> &KernelPoolState {
        &self.state
    }
}

impl ActiveLearner for KernelLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, remaining: &[usize], rng_seed: u64) -> Result<ScoredCandidate> {
        if remaining.is_empty() {
            return Err(Error::EmptyPool);
        }
        let scored = match self.rule.score_kind() {
            Some(kind) => self.state.score_candidates(remaining, kind),
            None => Vec::new(),
        };
        if scored.is_empty() {
            // random rule, or every remaining point coincides with a labeled one
            let index = uniform_choice(remaining, rng_seed)?;
            let label = Label::from_sign(self.state.values()[index]);
            return Ok(ScoredCandidate { index, label, score: 0.0 });
        }
        pick(&scored, rng_seed)
    }

    fn observe(&mut self, index: usize, label: Label) -> Result<()> {
        if self.state.is_scorable(index) {
            self.state.condition_on(index, label)?;
            self.labeled.push(self.pool.point(index).to_vec(), label)?;
            self.model = None;
        } else {
            log::warn!("pool point {index} coincides with a labeled point; label not added to the model");
        }
        Ok(())
    }

    fn pool_values(&self) -> Vec<f64> {
        self.state.values().to_vec()
    }

    fn predict(&mut self, x: &[f64]) -> Result<f64> {
        if self.model.is_none() {
            let dim = self.pool.dim().unwrap_or(x.len());
            self.model = Some(KernelInterpolator::fit_with_dim(&self.labeled, *self.state.config(), dim)?);
        }
        self.model.as_ref().expect("fitted above").evaluate(x)
    }

    fn labeled(&self) -> &LabeledSet {
        &self.labeled
    }
}

/// Minimal-knot spline learner on a one-dimensional pool.
///
/// The data norm uses the empirical measure of the remaining pool. Boundary
/// knots are placed beyond the whole pool so every candidate lies inside
/// the knot range.
pub struct SplineLearner {
    name: String,
    rule: SelectionRule,
    xs: Vec<f64>,
    margin: f64,
    labeled: LabeledSet,
    model: Option<SplineInterpolator>,
}

impl SplineLearner {
    pub fn new(name: &str, rule: SelectionRule, pool: &UnlabeledPool) -> Result<Self> {
        if pool.dim().is_some_and(|d| d != 1) {
            return Err(Error::Config("the spline model needs a one-dimensional pool".into()));
        }
        let xs: Vec<f64> = pool.points().iter().map(|p| p[0]).collect();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let margin = if xs.is_empty() { 1.0 } else { 2.0 * (hi - lo) + 1.0 };
        Ok(Self { name: name.to_string(), rule, xs, margin, labeled: LabeledSet::new(), model: None })
    }

    pub fn model(&self) -> Option<&SplineInterpolator> {
        self.model.as_ref()
    }
}

impl ActiveLearner for SplineLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, remaining: &[usize], rng_seed: u64) -> Result<ScoredCandidate> {
        if remaining.is_empty() {
            return Err(Error::EmptyPool);
        }
        let (kind, model) = match (self.rule.score_kind(), &self.model) {
            (Some(kind), Some(model)) => (kind, model),
            _ => {
                // with nothing labeled every candidate ties: f^u is the constant t
                let index = uniform_choice(remaining, rng_seed)?;
                let value = self.model.as_ref().map_or(0.0, |m| m.evaluate(self.xs[index]));
                return Ok(ScoredCandidate { index, label: Label::from_sign(value), score: 0.0 });
            }
        };
        let density = Density1D::empirical(remaining.iter().map(|&i| self.xs[i]).collect())?;
        let scored: Vec<ScoredCandidate> = remaining
            .iter()
            .filter_map(|&i| match model.score(self.xs[i], kind, &density) {
                Ok(s) => Some(Ok(ScoredCandidate::new(i, s))),
                Err(Error::DuplicatePoint { .. }) => None,
                Err(e) => Some(Err(e)),
            })
            .collect::<Result<_>>()?;
        if scored.is_empty() {
            let index = uniform_choice(remaining, rng_seed)?;
            return Ok(ScoredCandidate { index, label: Label::from_sign(model.evaluate(self.xs[index])), score: 0.0 });
        }
        pick(&scored, rng_seed)
    }

    fn observe(&mut self, index: usize, label: Label) -> Result<()> {
        let x = self.xs[index];
        if self.labeled.points().iter().any(|p| p[0] == x) {
            log::warn!("pool point {index} repeats a labeled position; label not added to the model");
            return Ok(());
        }
        self.labeled.push(vec![x], label)?;
        self.model = Some(fit_spline_with_margin(&self.labeled, self.margin)?);
        Ok(())
    }

    fn pool_values(&self) -> Vec<f64> {
        match &self.model {
            Some(m) => self.xs.iter().map(|&x| m.evaluate(x)).collect(),
            None => vec![0.0; self.xs.len()],
        }
    }

    fn predict(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: x.len() });
        }
        Ok(self.model.as_ref().map_or(0.0, |m| m.evaluate(x[0])))
    }

    fn labeled(&self) -> &LabeledSet {
        &self.labeled
    }
}

/// Builds a learner for a model over a pool.
pub type LearnerFactory = fn(&str, &ModelSpec, SelectionRule, &UnlabeledPool) -> Result<Box<dyn ActiveLearner>>;

fn kernel_factory(
    name: &str,
    model: &ModelSpec,
    rule: SelectionRule,
    pool: &UnlabeledPool,
) -> Result<Box<dyn ActiveLearner>> {
    let cfg = model
        .kernel_config()?
        .ok_or_else(|| Error::Config(format!("strategy `{name}` needs a kernel model")))?;
    Ok(Box::new(KernelLearner::new(name, cfg, rule, pool)))
}

fn spline_factory(
    name: &str,
    model: &ModelSpec,
    rule: SelectionRule,
    pool: &UnlabeledPool,
) -> Result<Box<dyn ActiveLearner>> {
    if !matches!(model, ModelSpec::Spline) {
        return Err(Error::Config(format!("strategy `{name}` needs a spline model")));
    }
    Ok(Box::new(SplineLearner::new(name, rule, pool)?))
}

struct Entry {
    rule: SelectionRule,
    factory: LearnerFactory,
}

/// Name → learner constructor table.
pub struct StrategyRegistry {
    entries: BTreeMap<String, Entry>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &str, rule: SelectionRule, factory: LearnerFactory) {
        self.entries.insert(name.to_string(), Entry { rule, factory });
    }

    /// Every kernel and spline combination with the function, data and
    /// random rules.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        for rule in [SelectionRule::Function, SelectionRule::Data, SelectionRule::Random] {
            r.register(&format!("kernel-{rule}"), rule, kernel_factory);
            r.register(&format!("spline-{rule}"), rule, spline_factory);
        }
        r
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn create(&self, name: &str, model: &ModelSpec, pool: &UnlabeledPool) -> Result<Box<dyn ActiveLearner>> {
        let entry = self.entries.get(name).ok_or_else(|| Error::UnknownStrategy(name.to_string()))?;
        (entry.factory)(name, model, entry.rule, pool)
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lists_defaults_and_rejects_unknown() {
        let r = StrategyRegistry::with_defaults();
        let names: Vec<&str> = r.names().collect();
        assert_eq!(
            names,
            vec!["kernel-data", "kernel-function", "kernel-random", "spline-data", "spline-function", "spline-random"]
        );
        let pool = UnlabeledPool::from_1d(&[0.0, 1.0]).unwrap();
        let model = ModelSpec::Kernel { h: 0.1, p: 1.0 };
        assert!(matches!(r.create("kernel-magic", &model, &pool), Err(Error::UnknownStrategy(_))));
        assert!(matches!(r.create("spline-data", &model, &pool), Err(Error::Config(_))));
        assert_eq!(r.create("kernel-data", &model, &pool).unwrap().name(), "kernel-data");
    }

    #[test]
    fn spline_learner_rejects_multidimensional_pool() {
        let pool = UnlabeledPool::new(vec![vec![0.0, 1.0]]).unwrap();
        assert!(SplineLearner::new("spline-function", SelectionRule::Function, &pool).is_err());
    }

    #[test]
    fn model_spec_json() {
        let m: ModelSpec = serde_json::from_str(r#"{"kind":"kernel","h":0.1,"p":2}"#).unwrap();
        assert_eq!(m, ModelSpec::Kernel { h: 0.1, p: 2.0 });
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"spline"}"#).unwrap();
        assert_eq!(s, ModelSpec::Spline);
        assert_eq!(strategy_name(&s, SelectionRule::Data), "spline-data");
    }

    #[test]
    fn kernel_learner_predict_matches_pool_values() {
        let pool = UnlabeledPool::from_1d(&[0.0, 0.3, 0.6, 1.0]).unwrap();
        let mut l = KernelLearner::new("k", KernelConfig::laplace(0.2).unwrap(), SelectionRule::Function, &pool);
        l.observe(0, Label::Pos).unwrap();
        l.observe(3, Label::Neg).unwrap();
        let vals = l.pool_values();
        for i in 0..4 {
            let direct = l.predict(pool.point(i)).unwrap();
            assert!((direct - vals[i]).abs() < 1e-10);
        }
    }
}
