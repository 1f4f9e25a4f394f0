//! Incremental scoring state for a kernel learner over a fixed pool.
//!
//! For labeled set `L` and pool points `x, x'` the residual kernel
//!
//! ```text
//! R(x, x') = k(x, x') - a_xᵀ K⁻¹ a_x'
//! ```
//!
//! gives everything the scores need: `R(u, u)` is the Schur denominator, and
//! adding `(u, t)` changes the interpolant by `β R(u, ·)` with
//! `β = (t - f(u)) / R(u, u)`. Labeling `u` downdates `R` by the rank-one
//! term `R(·, u) R(u, ·) / R(u, u)`, so a round costs `O(N²)` for a dense
//! residual and `O(N L)` when only the whitened rows are kept.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{KernelConfig, SCHUR_FLOOR};
use crate::labels::Label;
use crate::scoring::{CandidateScore, ScoreKind, ScoredCandidate, UnlabeledPool};

/// Pools up to this size keep the dense `N × N` residual kernel.
pub const MAX_DENSE_POOL: usize = 4096;

#[derive(Debug, Clone)]
enum Residual {
    /// Row-major `N × N` residual kernel.
    Dense(Vec<f64>),
    /// Rows `w_l = L⁻¹ a` of the whitened cross-kernel, one per labeled
    /// point; the residual is recomputed on demand.
    Whitened(Vec<Vec<f64>>),
}

/// Decision values, Schur denominators and residual kernel of a pool under
/// the current labeled set.
#[derive(Debug, Clone)]
pub struct KernelPoolState {
    config: KernelConfig,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    denominators: Vec<f64>,
    residual: Residual,
    labeled: Vec<bool>,
    norm_sq: f64,
}

impl KernelPoolState {
    /// State for an empty labeled set (`f ≡ 0`).
    pub fn new(pool: &UnlabeledPool, config: KernelConfig) -> Self {
        Self::with_backend(pool, config, pool.len() <= MAX_DENSE_POOL)
    }

    pub fn with_backend(pool: &UnlabeledPool, config: KernelConfig, dense: bool) -> Self {
        let n = pool.len();
        let points = pool.points().to_vec();
        let residual = if dense {
            let mut k = vec![0.0; n * n];
            k.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if i == j { 1.0 } else { config.eval_unchecked(&points[i], &points[j]) };
                }
            });
            Residual::Dense(k)
        } else {
            Residual::Whitened(Vec::new())
        };
        Self {
            config,
            points,
            values: vec![0.0; n],
            denominators: vec![1.0; n],
            residual,
            labeled: vec![false; n],
            norm_sq: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    /// Current interpolant evaluated at every pool point.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn denominators(&self) -> &[f64] {
        &self.denominators
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        self.labeled[i]
    }

    fn residual_row(&self, i: usize) -> Vec<f64> {
        let n = self.len();
        match &self.residual {
            Residual::Dense(r) => r[i * n..(i + 1) * n].to_vec(),
            Residual::Whitened(rows) => {
                let u = &self.points[i];
                let mut out: Vec<f64> = self.points.par_iter().map(|x| self.config.eval_unchecked(u, x)).collect();
                for w in rows {
                    let wi = w[i];
                    for (o, wx) in out.iter_mut().zip(w) {
                        *o -= wi * wx;
                    }
                }
                out
            }
        }
    }

    /// Adds `(points[i], label)` to the labeled set.
    pub fn condition_on(&mut self, i: usize, label: Label) -> Result<()> {
        let den = self.denominators[i];
        if self.labeled[i] || den < SCHUR_FLOOR {
            return Err(Error::DuplicatePoint { denominator: den });
        }
        let row = self.residual_row(i);
        let beta = (label.value() - self.values[i]) / den;
        self.norm_sq += (label.value() - self.values[i]).powi(2) / den;
        let scale = 1.0 / den.sqrt();
        let w: Vec<f64> = row.iter().map(|r| r * scale).collect();
        for ((v, d), (r, wx)) in self.values.iter_mut().zip(self.denominators.iter_mut()).zip(row.iter().zip(&w)) {
            *v += beta * r;
            *d -= wx * wx;
        }
        self.values[i] = label.value();
        self.denominators[i] = 0.0;
        self.labeled[i] = true;
        let n = self.len();
        match &mut self.residual {
            Residual::Dense(r) => {
                r.par_chunks_mut(n).enumerate().for_each(|(a, out)| {
                    let wa = w[a];
                    if wa != 0.0 {
                        for (o, wb) in out.iter_mut().zip(&w) {
                            *o -= wa * wb;
                        }
                    }
                });
            }
            Residual::Whitened(rows) => rows.push(w),
        }
        Ok(())
    }

    /// Whether `i` can be scored: unlabeled and not numerically coincident
    /// with a labeled point.
    pub fn is_scorable(&self, i: usize) -> bool {
        !self.labeled[i] && self.denominators[i] >= SCHUR_FLOOR
    }

    /// Function-norm score of pool point `i`.
    pub fn score_function_norm(&self, i: usize) -> Result<CandidateScore> {
        let (fu, den) = self.checked(i)?;
        Ok(CandidateScore { label: Label::from_sign(fu), score: self.norm_sq + (1.0 - fu.abs()).powi(2) / den })
    }

    /// Data-norm score of pool point `i`, averaged over `support`.
    pub fn score_data_norm(&self, i: usize, support: &[usize]) -> Result<CandidateScore> {
        if support.is_empty() {
            return Err(Error::EmptyPool);
        }
        let (fu, den) = self.checked(i)?;
        let label = Label::from_sign(fu);
        let beta = (label.value() - fu) / den;
        let sum_sq: f64 = match &self.residual {
            Residual::Dense(r) => {
                let n = self.len();
                let row = &r[i * n..(i + 1) * n];
                support.iter().map(|&x| row[x] * row[x]).sum()
            }
            Residual::Whitened(rows) => {
                let u = &self.points[i];
                support
                    .iter()
                    .map(|&x| {
                        let mut v = if x == i { 1.0 } else { self.config.eval_unchecked(u, &self.points[x]) };
                        for w in rows {
                            v -= w[i] * w[x];
                        }
                        v * v
                    })
                    .sum()
            }
        };
        Ok(CandidateScore { label, score: beta * beta * sum_sq / support.len() as f64 })
    }

    fn checked(&self, i: usize) -> Result<(f64, f64)> {
        let den = self.denominators[i];
        if self.labeled[i] || den < SCHUR_FLOOR {
            return Err(Error::DuplicatePoint { denominator: den });
        }
        Ok((self.values[i], den))
    }

    /// Scores every scorable candidate; the data norm averages over all of
    /// `candidates`. Results are in candidate order.
    pub fn score_candidates(&self, candidates: &[usize], kind: ScoreKind) -> Vec<ScoredCandidate> {
        let scorable: Vec<usize> = candidates.iter().copied().filter(|&i| self.is_scorable(i)).collect();
        scorable
            .par_iter()
            .map(|&i| {
                let s = match kind {
                    ScoreKind::FunctionNorm => self.score_function_norm(i),
                    ScoreKind::DataNorm => self.score_data_norm(i, candidates),
                }
                .expect("scorable candidate");
                ScoredCandidate::new(i, s)
            })
            .collect()
    }
}
