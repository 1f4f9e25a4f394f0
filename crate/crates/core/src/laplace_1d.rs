//! Closed forms for the one-dimensional Laplace kernel `exp(-|x - x'| / h)`.
//!
//! On sorted points the inverse kernel matrix is tridiagonal, so the squared
//! norm of the interpolant splits into one term per neighboring pair and a
//! candidate between two neighbors only changes that pair's term.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::KernelConfig;
use crate::labels::{Label, LabeledSet};

/// Strictly increasing positions with labels and gap factors
/// `d_i = exp(-(x_{i+1} - x_i) / h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedLabeled1D {
    positions: Vec<f64>,
    labels: Vec<Label>,
    gaps: Vec<f64>,
    bandwidth: f64,
}

impl SortedLabeled1D {
    pub fn new(positions: Vec<f64>, labels: Vec<Label>, bandwidth: f64) -> Result<Self> {
        if positions.len() != labels.len() {
            return Err(Error::InvalidArgument("positions and labels differ in length".into()));
        }
        if positions.is_empty() {
            return Err(Error::InvalidArgument("need at least one labeled point".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("positions must be strictly increasing".into()));
        }
        let gaps: Vec<f64> = positions.windows(2).map(|w| (-(w[1] - w[0]) / bandwidth).exp()).collect();
        if gaps.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
            return Err(Error::InvalidArgument("gap factors must lie strictly in (0, 1)".into()));
        }
        Ok(Self { positions, labels, gaps, bandwidth })
    }

    /// Sorts a one-dimensional labeled set. Only the Laplace exponent is
    /// accepted.
    pub fn from_labeled(set: &LabeledSet, cfg: &KernelConfig) -> Result<Self> {
        if cfg.exponent() != 1.0 {
            return Err(Error::InvalidArgument("closed forms require the Laplace kernel (p = 1)".into()));
        }
        if set.dim() != Some(1) {
            return Err(Error::InvalidArgument("closed forms require one-dimensional points".into()));
        }
        let mut pairs: Vec<(f64, Label)> = set.iter().map(|(p, l)| (p[0], l)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (positions, labels) = pairs.into_iter().unzip();
        Self::new(positions, labels, cfg.bandwidth())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    fn y(&self, i: usize) -> f64 {
        self.labels[i].value()
    }
}

/// Symmetric tridiagonal matrix stored as diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

impl Tridiagonal {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diagonal[i],
            1 => self.off_diagonal[i.min(j)],
            _ => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.diagonal.len();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }
}

/// Inverse kernel matrix of sorted Laplace points.
pub fn tridiagonal_inverse(s: &SortedLabeled1D) -> Tridiagonal {
    let n = s.len();
    // d_0 = d_n = 0 pads the ends
    let d = |i: usize| if i == 0 || i == n { 0.0 } else { s.gaps[i - 1] };
    let diagonal = (0..n)
        .map(|i| {
            let (left, right) = (d(i), d(i + 1));
            1.0 / (1.0 - left * left) + 1.0 / (1.0 - right * right) - 1.0
        })
        .collect();
    let off_diagonal = s.gaps.iter().map(|&g| -g / (1.0 - g * g)).collect();
    Tridiagonal { diagonal, off_diagonal }
}

/// `yᵀ K⁻¹ y = -(n - 2) + 2 Σ 1 / (1 + y_i y_{i+1} d_i)`.
pub fn norm_closed_form(s: &SortedLabeled1D) -> f64 {
    let n = s.len() as f64;
    let pair_terms: f64 = (0..s.len() - 1).map(|i| pair_term(s.y(i) * s.y(i + 1), s.gaps[i])).sum();
    -(n - 2.0) + pair_terms
}

fn pair_term(sign: f64, d: f64) -> f64 {
    2.0 / (1.0 + sign * d)
}

/// Interpolant coefficients `α = K⁻¹ y` in sorted order.
pub fn interpolant_coefficients(s: &SortedLabeled1D) -> Vec<f64> {
    let n = s.len();
    if n == 1 {
        return vec![s.y(0)];
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { 1.0 / (1.0 + s.y(i) * s.y(i - 1) * s.gaps[i - 1]) } else { 0.0 };
            let right = if i + 1 < n { 1.0 / (1.0 + s.y(i) * s.y(i + 1) * s.gaps[i]) } else { 0.0 };
            let interior = if i > 0 && i + 1 < n { 1.0 } else { 0.0 };
            (left + right - interior) * s.y(i)
        })
        .collect()
}

/// Evaluates the interpolant from its closed-form coefficients.
pub fn evaluate_closed_form(s: &SortedLabeled1D, x: f64) -> f64 {
    interpolant_coefficients(s)
        .iter()
        .zip(&s.positions)
        .map(|(c, xi)| c * (-(x - xi).abs() / s.bandwidth).exp())
        .sum()
}

/// Squared norm after inserting `(u, t)` strictly inside interval `j`
/// (between sorted points `j` and `j + 1`).
pub fn augmented_norm(s: &SortedLabeled1D, j: usize, u: f64, t: Label) -> Result<f64> {
    check_interval(s, j)?;
    let (xl, xr) = (s.positions[j], s.positions[j + 1]);
    if !(u > xl && u < xr) {
        return Err(Error::OutOfRange(u));
    }
    let h = s.bandwidth;
    let t = t.value();
    Ok(norm_closed_form(s) - 1.0 - pair_term(s.y(j) * s.y(j + 1), s.gaps[j])
        + pair_term(t * s.y(j), (-(u - xl) / h).exp())
        + pair_term(t * s.y(j + 1), (-(xr - u) / h).exp()))
}

fn check_interval(s: &SortedLabeled1D, j: usize) -> Result<()> {
    if j + 1 >= s.len() {
        return Err(Error::InvalidArgument(format!("interval {j} does not exist for {} points", s.len())));
    }
    Ok(())
}

/// Maximizer and maximal function-norm score within one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalScoreResult {
    pub maximizer: f64,
    pub score: f64,
    pub interval: usize,
}

/// The best candidate between sorted points `j` and `j + 1` is always the
/// midpoint; its score follows from the pairwise norm factorization.
pub fn interval_max_score(s: &SortedLabeled1D, j: usize) -> Result<IntervalScoreResult> {
    check_interval(s, j)?;
    let (xl, xr) = (s.positions[j], s.positions[j + 1]);
    let half = (-(xr - xl) / (2.0 * s.bandwidth)).exp();
    let sign = s.y(j) * s.y(j + 1);
    let score = norm_closed_form(s) - 1.0 - pair_term(sign, s.gaps[j]) + pair_term(1.0, half) + pair_term(sign, half);
    Ok(IntervalScoreResult { maximizer: 0.5 * (xl + xr), score, interval: j })
}

/// Interval whose midpoint has the highest score (first on exact ties).
pub fn best_interval(s: &SortedLabeled1D) -> Option<IntervalScoreResult> {
    (0..s.len().saturating_sub(1))
        .map(|j| interval_max_score(s, j).expect("valid interval"))
        .fold(None, |best: Option<IntervalScoreResult>, r| match best {
            Some(b) if b.score >= r.score => Some(b),
            _ => Some(r),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sorted(pairs: &[(f64, f64)], h: f64) -> SortedLabeled1D {
        let (p, l): (Vec<f64>, Vec<Label>) =
            pairs.iter().map(|&(x, y)| (x, Label::try_from(y).unwrap())).unzip();
        SortedLabeled1D::new(p, l, h).unwrap()
    }

    #[test]
    fn rejects_unsorted_and_empty() {
        assert!(SortedLabeled1D::new(vec![0.0, 0.0], vec![Label::Pos, Label::Neg], 1.0).is_err());
        assert!(SortedLabeled1D::new(vec![1.0, 0.0], vec![Label::Pos, Label::Neg], 1.0).is_err());
        assert!(SortedLabeled1D::new(vec![], vec![], 1.0).is_err());
    }

    #[test]
    fn single_point() {
        let s = sorted(&[(0.3, -1.0)], 0.5);
        assert_eq!(tridiagonal_inverse(&s).to_dense(), DMatrix::from_element(1, 1, 1.0));
        assert_eq!(norm_closed_form(&s), 1.0);
        assert_eq!(interpolant_coefficients(&s), vec![-1.0]);
    }

    #[test]
    fn three_point_middle_diagonal() {
        let s = sorted(&[(0.0, 1.0), (0.4, 1.0), (1.1, -1.0)], 0.5);
        let (d1, d2) = (s.gaps()[0], s.gaps()[1]);
        let t = tridiagonal_inverse(&s);
        assert_relative_eq!(t.diagonal[1], 1.0 / (1.0 - d1 * d1) + 1.0 / (1.0 - d2 * d2) - 1.0);
        assert_relative_eq!(t.diagonal[0], 1.0 / (1.0 - d1 * d1));
        assert_relative_eq!(t.get(1, 2), -d2 / (1.0 - d2 * d2));
        assert_eq!(t.get(0, 2), 0.0);
    }

    #[test]
    fn two_point_norm() {
        let (g, h) = (0.8, 0.3);
        let s = sorted(&[(0.0, 1.0), (g, -1.0)], h);
        assert_relative_eq!(norm_closed_form(&s), 2.0 / (1.0 - (-g / h).exp()), max_relative = 1e-14);
    }

    #[test]
    fn isolated_pair_interval_maxima() {
        let (g, h) = (0.6, 0.25);
        let opp = sorted(&[(1.0, 1.0), (1.0 + g, -1.0)], h);
        let same = sorted(&[(1.0, -1.0), (1.0 + g, -1.0)], h);
        let r = interval_max_score(&opp, 0).unwrap();
        assert_relative_eq!(r.maximizer, 1.0 + g / 2.0);
        assert_relative_eq!(r.score, 4.0 / (1.0 - (-g / h).exp()) - 1.0, max_relative = 1e-13);
        let r = interval_max_score(&same, 0).unwrap();
        assert_relative_eq!(r.score, 4.0 / (1.0 + (-g / (2.0 * h)).exp()) - 1.0, max_relative = 1e-13);
        assert!(interval_max_score(&same, 1).is_err());
    }

    #[test]
    fn augmented_norm_at_midpoint_matches_interval_max() {
        let s = sorted(&[(0.0, 1.0), (0.3, -1.0), (0.9, -1.0), (1.4, 1.0)], 0.2);
        for j in 0..3 {
            let r = interval_max_score(&s, j).unwrap();
            let t = s.labels()[j];
            let v = augmented_norm(&s, j, r.maximizer, t).unwrap();
            let v2 = augmented_norm(&s, j, r.maximizer, t.flip()).unwrap();
            assert_relative_eq!(r.score, v.min(v2), max_relative = 1e-13);
        }
        assert!(augmented_norm(&s, 0, 0.5, Label::Pos).is_err());
    }
}
