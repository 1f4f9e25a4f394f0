//! Label estimation, the two MaxiMin scores, and argmax selection.
//!
//! All scores are in squared-norm units. The function-norm score of a
//! candidate `u` is `min_t ‖f_t^u‖²`, computed through the rank-one identity
//! `‖f_t^u‖² = ‖f‖² + (1 - t f(u))² / (1 - a_uᵀ K⁻¹ a_u)`. The data-norm
//! score is the pool average of `(f^u(x) - f(x))²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelInterpolator;
use crate::labels::Label;

/// Scores within this absolute distance of the maximum count as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Candidate points awaiting labels, with optional hidden labels used only
/// to simulate the labeling oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledPool {
    points: Vec<Vec<f64>>,
    oracle: Option<Vec<Label>>,
}

impl UnlabeledPool {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(points, None)
    }

    pub fn with_oracle(points: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} pool points but {} oracle labels",
                points.len(),
                labels.len()
            )));
        }
        Self::build(points, Some(labels))
    }

    pub fn from_1d(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect())
    }

    fn build(points: Vec<Vec<f64>>, oracle: Option<Vec<Label>>) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.len();
            if d == 0 {
                return Err(Error::InvalidArgument("pool points must have at least one coordinate".into()));
            }
            if let Some(bad) = points.iter().find(|p| p.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, found: bad.len() });
            }
        }
        Ok(Self { points, oracle })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn oracle(&self) -> Option<&[Label]> {
        self.oracle.as_deref()
    }

    /// Pool restricted to the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            oracle: self.oracle.as_ref().map(|o| indices.iter().map(|&i| o[i]).collect()),
        }
    }
}

/// Which MaxiMin score ranks candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScoreKind {
    #[serde(rename = "function")]
    FunctionNorm,
    #[serde(rename = "data")]
    DataNorm,
}

/// Estimated label and score of one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub label: Label,
    pub score: f64,
}

/// A candidate's pool index with its estimated label and score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub index: usize,
    pub label: Label,
    pub score: f64,
}

impl ScoredCandidate {
    pub fn new(index: usize, s: CandidateScore) -> Self {
        Self { index, label: s.label, score: s.score }
    }
}

/// `t(u)`: `+1` if `f(u) ≥ 0`, else `-1`.
pub fn estimate_label(m: &KernelInterpolator, u: &[f64]) -> Result<Label> {
    Ok(Label::from_sign(m.evaluate(u)?))
}

pub fn score_function_norm(m: &KernelInterpolator, u: &[f64]) -> Result<CandidateScore> {
    let (fu, den) = m.value_and_denominator(u)?;
    let label = Label::from_sign(fu);
    let score = m.norm_sq() + (1.0 - fu.abs()).powi(2) / den;
    Ok(CandidateScore { label, score })
}

/// Pool average of `(f^u(x) - f(x))²` where `f^u` adds `(u, t(u))`.
///
/// The difference is `β r_u(x)` with `β = (t - f(u)) / (1 - a_uᵀ K⁻¹ a_u)`
/// and `r_u(x) = k(u, x) - a_uᵀ K⁻¹ a_x`.
pub fn score_data_norm(m: &KernelInterpolator, u: &[f64], pool: &UnlabeledPool) -> Result<CandidateScore> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let a_u = m.kernel_vector(u);
    let (fu, den) = m.value_and_denominator(u)?;
    let label = Label::from_sign(fu);
    let beta = (label.value() - fu) / den;
    let w_u = m.whiten(&a_u);
    let cfg = m.config();
    let mut acc = 0.0;
    for x in pool.points() {
        if x.len() != m.dim() {
            return Err(Error::DimensionMismatch { expected: m.dim(), found: x.len() });
        }
        let w_x = m.whiten(&m.kernel_vector(x));
        let r = cfg.eval_unchecked(u, x) - w_u.dot(&w_x);
        acc += (beta * r).powi(2);
    }
    Ok(CandidateScore { label, score: acc / pool.len() as f64 })
}

/// Index of a maximal score, breaking ties (within [`TIE_TOLERANCE`])
/// uniformly at random with the given generator.
pub fn argmax_with_ties<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> Option<usize> {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    let ties: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= best - TIE_TOLERANCE)
        .map(|(i, _)| i)
        .collect();
    Some(ties[rng.gen_range(0..ties.len())])
}

/// Picks the best of a list of scored candidates; deterministic given
/// `rng_seed`.
pub fn pick(candidates: &[ScoredCandidate], rng_seed: u64) -> Result<ScoredCandidate> {
    let scores: Vec<f64> = candidates.iter().map(|c| c.score).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    argmax_with_ties(&scores, &mut rng).map(|i| candidates[i]).ok_or(Error::EmptyPool)
}

/// Scores every pool point and returns the MaxiMin choice.
pub fn select_next(
    m: &KernelInterpolator,
    pool: &UnlabeledPool,
    kind: ScoreKind,
    rng_seed: u64,
) -> Result<ScoredCandidate> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let scored = pool
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let s = match kind {
                ScoreKind::FunctionNorm => score_function_norm(m, u)?,
                ScoreKind::DataNorm => score_data_norm(m, u, pool)?,
            };
            Ok(ScoredCandidate::new(i, s))
        })
        .collect::<Result<Vec<_>>>()?;
    pick(&scored, rng_seed)
}
