//! One-dimensional two-layer ReLU learner through its linear-spline form.
//!
//! The minimum weight-norm interpolating network is a minimal-knot linear
//! spline, and its weight norm equals the total variation of `f'`. Two
//! artificial knots copying the extreme labels pin `f'(±∞) = 0`. Inserting
//! a knot between neighbors `x_j < u < x_{j+1}` changes the spline only on
//! `(x_j, x_{j+1})`, so both scores are local computations.
//!
//! Norms here are in total-variation units and are never squared.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::labels::{Label, LabeledSet};
use crate::scoring::{argmax_with_ties, CandidateScore, ScoreKind, ScoredCandidate};

/// Fitted minimal-knot linear spline through `±1` knots.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineInterpolator {
    // includes the two artificial boundary knots at either end
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    weight_norm: f64,
}

/// Sampling density used by the data-norm score.
#[derive(Debug, Clone, PartialEq)]
pub enum Density1D {
    /// Uniform density on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Empirical measure of a point sample, kept sorted.
    Empirical(Vec<f64>),
}

impl Density1D {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("uniform density needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Density1D::Uniform { lo, hi })
    }

    pub fn empirical(mut xs: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyPool);
        }
        xs.sort_by(f64::total_cmp);
        Ok(Density1D::Empirical(xs))
    }

    /// `∫ g(x)² dP(x)` for `g` linear from `(a, ga)` to `(b, gb)` and zero
    /// elsewhere.
    fn segment_mass(&self, a: f64, ga: f64, b: f64, gb: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let at = |x: f64| ga + (gb - ga) * (x - a) / (b - a);
        match self {
            Density1D::Uniform { lo, hi } => {
                let (c0, c1) = (a.max(*lo), b.min(*hi));
                if c1 <= c0 {
                    return 0.0;
                }
                let (v0, v1) = (at(c0), at(c1));
                (c1 - c0) * (v0 * v0 + v0 * v1 + v1 * v1) / 3.0 / (hi - lo)
            }
            Density1D::Empirical(xs) => {
                let start = xs.partition_point(|&x| x < a);
                let end = xs.partition_point(|&x| x <= b);
                xs[start..end].iter().map(|&x| at(x).powi(2)).sum::<f64>() / xs.len() as f64
            }
        }
    }
}

/// Offset of the artificial boundary knots: `max(1, span)`.
pub fn default_boundary_offset(span: f64) -> f64 {
    span.max(1.0)
}

/// Fits the minimal-knot spline through a one-dimensional labeled set.
pub fn fit_spline(labeled: &LabeledSet) -> Result<SplineInterpolator> {
    fit_spline_with_margin(labeled, 0.0)
}

/// As [`fit_spline`], with boundary knots at least `margin` beyond the
/// extreme labeled points. Scores do not depend on the offset.
pub fn fit_spline_with_margin(labeled: &LabeledSet, margin: f64) -> Result<SplineInterpolator> {
    if labeled.is_empty() {
        return Err(Error::InvalidArgument("spline fit needs at least one labeled point".into()));
    }
    if labeled.dim() != Some(1) {
        return Err(Error::InvalidArgument("spline learner is one-dimensional".into()));
    }
    let mut pairs: Vec<(f64, f64)> = labeled.iter().map(|(p, l)| (p[0], l.value())).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument("duplicate spline knot positions".into()));
    }
    let (first, last) = (pairs[0], pairs[pairs.len() - 1]);
    let offset = default_boundary_offset(last.0 - first.0).max(margin);
    let mut knots = Vec::with_capacity(pairs.len() + 2);
    let mut values = Vec::with_capacity(pairs.len() + 2);
    knots.push(first.0 - offset);
    values.push(first.1);
    for (x, y) in pairs {
        knots.push(x);
        values.push(y);
    }
    knots.push(last.0 + offset);
    values.push(last.1);
    let slopes: Vec<f64> = (0..knots.len() - 1)
        .map(|i| (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]))
        .collect();
    let weight_norm = total_variation_of_slope(&slopes);
    Ok(SplineInterpolator { knots, values, slopes, weight_norm })
}

/// `Σ |s_i - s_{i-1}|` with zero slope beyond both ends.
fn total_variation_of_slope(slopes: &[f64]) -> f64 {
    let mut prev = 0.0;
    let mut tv = 0.0;
    for &s in slopes.iter().chain(std::iter::once(&0.0)) {
        tv += (s - prev).abs();
        prev = s;
    }
    tv
}

impl SplineInterpolator {
    /// All knots, including the two artificial boundary knots.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.values
    }

    /// Slope on each interval between consecutive knots.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Total variation of `f'`, the network weight norm.
    pub fn weight_norm(&self) -> f64 {
        self.weight_norm
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0];
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let j = self.knots.partition_point(|&k| k <= x) - 1;
        self.values[j] + self.slopes[j] * (x - self.knots[j])
    }

    /// Interval `j` with `knots[j] < u < knots[j + 1]`.
    pub fn locate(&self, u: f64) -> Result<usize> {
        let n = self.knots.len();
        if !(u > self.knots[0] && u < self.knots[n - 1]) {
            if u == self.knots[0] || u == self.knots[n - 1] {
                return Err(Error::DuplicatePoint { denominator: 0.0 });
            }
            return Err(Error::OutOfRange(u));
        }
        let j = self.knots.partition_point(|&k| k < u);
        if self.knots[j] == u {
            return Err(Error::DuplicatePoint { denominator: 0.0 });
        }
        Ok(j - 1)
    }

    fn neighbor_slope(&self, i: isize) -> f64 {
        if i < 0 || i as usize >= self.slopes.len() {
            0.0
        } else {
            self.slopes[i as usize]
        }
    }

    /// Weight norm after inserting the knot `(u, t)`.
    pub fn augmented_norm(&self, u: f64, t: Label) -> Result<f64> {
        let j = self.locate(u)?;
        let (xl, xr) = (self.knots[j], self.knots[j + 1]);
        let (yl, yr) = (self.values[j], self.values[j + 1]);
        let before = self.neighbor_slope(j as isize - 1);
        let after = self.neighbor_slope(j as isize + 1);
        let old = self.slopes[j];
        let a = (t.value() - yl) / (u - xl);
        let b = (yr - t.value()) / (xr - u);
        let old_local = (old - before).abs() + (after - old).abs();
        let new_local = (a - before).abs() + (b - a).abs() + (after - b).abs();
        Ok(self.weight_norm - old_local + new_local)
    }

    /// Spline through the current knots plus `(u, t)`; the boundary knots
    /// stay where they are.
    pub fn augmented(&self, u: f64, t: Label) -> Result<SplineInterpolator> {
        let j = self.locate(u)?;
        let mut knots = self.knots.clone();
        let mut values = self.values.clone();
        knots.insert(j + 1, u);
        values.insert(j + 1, t.value());
        let slopes: Vec<f64> = (0..knots.len() - 1)
            .map(|i| (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]))
            .collect();
        let weight_norm = total_variation_of_slope(&slopes);
        Ok(SplineInterpolator { knots, values, slopes, weight_norm })
    }

    /// `min_t ‖f_t^u‖` with the minimizing label; equal norms resolve to
    /// `+1`.
    pub fn score_function_norm(&self, u: f64) -> Result<CandidateScore> {
        let pos = self.augmented_norm(u, Label::Pos)?;
        let neg = self.augmented_norm(u, Label::Neg)?;
        Ok(if pos <= neg {
            CandidateScore { label: Label::Pos, score: pos }
        } else {
            CandidateScore { label: Label::Neg, score: neg }
        })
    }

    /// `∫ (f^u - f)² dP` with `f^u` using the function-norm label. The
    /// difference is a hat on `(x_j, x_{j+1})` peaking at `u`.
    pub fn score_data_norm(&self, u: f64, density: &Density1D) -> Result<CandidateScore> {
        let label = self.score_function_norm(u)?.label;
        let j = self.locate(u)?;
        let peak = label.value() - self.evaluate(u);
        let (xl, xr) = (self.knots[j], self.knots[j + 1]);
        let score = density.segment_mass(xl, 0.0, u, peak) + density.segment_mass(u, peak, xr, 0.0);
        // the empirical measure counts a pool point at u once in each half
        let score = match density {
            Density1D::Empirical(xs) => {
                let at_u = xs[xs.partition_point(|&x| x < u)..].iter().take_while(|&&x| x == u).count();
                score - at_u as f64 * peak * peak / xs.len() as f64
            }
            Density1D::Uniform { .. } => score,
        };
        Ok(CandidateScore { label, score })
    }

    pub fn score(&self, u: f64, kind: ScoreKind, density: &Density1D) -> Result<CandidateScore> {
        match kind {
            ScoreKind::FunctionNorm => self.score_function_norm(u),
            ScoreKind::DataNorm => self.score_data_norm(u, density),
        }
    }
}

/// Scores every pool position and returns the MaxiMin choice; deterministic
/// given `rng_seed`. `density` is only used by the data norm.
pub fn spline_select_next(
    m: &SplineInterpolator,
    pool: &[f64],
    kind: ScoreKind,
    density: &Density1D,
    rng_seed: u64,
) -> Result<ScoredCandidate> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let scored = pool
        .iter()
        .enumerate()
        .map(|(i, &u)| Ok(ScoredCandidate::new(i, m.score(u, kind, density)?)))
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = scored.iter().map(|c| c.score).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let i = argmax_with_ties(&scores, &mut rng).ok_or(Error::EmptyPool)?;
    Ok(scored[i])
}
