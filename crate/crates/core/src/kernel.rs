//! Minimum-RKHS-norm interpolation with radial-basis kernels.
//!
//! The kernel family is `k(x, x') = exp(-‖x - x'‖_p / h)`. Every kernel in
//! the family has unit diagonal, which the rank-one scoring identities rely
//! on.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{Label, LabeledSet};

/// Diagonal jitter schedule tried in order when factoring the kernel matrix.
pub const JITTER_SCHEDULE: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Schur denominators below this are treated as a repeated point.
pub const SCHUR_FLOOR: f64 = 1e-12;

/// Pivot-ratio condition estimates above this trigger the next jitter level.
const MAX_CONDITION: f64 = 1e15;

/// Bandwidth `h` and Minkowski exponent `p` of the radial-basis kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(rename = "h")]
    bandwidth: f64,
    #[serde(rename = "p")]
    exponent: f64,
}

impl KernelConfig {
    pub fn new(bandwidth: f64, exponent: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(Error::InvalidArgument(format!("exponent must be >= 1, got {exponent}")));
        }
        Ok(Self { bandwidth, exponent })
    }

    /// The Laplace kernel `exp(-|x - x'| / h)`.
    pub fn laplace(bandwidth: f64) -> Result<Self> {
        Self::new(bandwidth, 1.0)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Kernel value for points already known to share a dimension.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        (-minkowski(x, y, self.exponent) / self.bandwidth).exp()
    }
}

/// Minkowski distance `(Σ |x_i - y_i|^p)^(1/p)`.
pub fn minkowski(x: &[f64], y: &[f64], p: f64) -> f64 {
    let diffs = x.iter().zip(y).map(|(a, b)| (a - b).abs());
    if p == 1.0 {
        diffs.sum()
    } else if p == 2.0 {
        diffs.map(|d| d * d).sum::<f64>().sqrt()
    } else {
        // scale by the largest coordinate gap to keep |d|^p in range
        let m = x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * diffs.map(|d| (d / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Evaluates `exp(-‖x - x2‖_p / h)`.
pub fn kernel_eval(x: &[f64], x2: &[f64], cfg: &KernelConfig) -> Result<f64> {
    if x.len() != x2.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: x2.len() });
    }
    Ok(cfg.eval_unchecked(x, x2))
}

/// Dense kernel matrix of a point list.
pub fn kernel_matrix(points: &[Vec<f64>], cfg: &KernelConfig) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = cfg.eval_unchecked(&points[i], &points[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// The fitted minimum-norm interpolant `f(x) = Σ α_i k(x_i, x)` with
/// `α = K⁻¹ y`.
///
/// Immutable after construction; all evaluation methods take `&self`.
#[derive(Debug, Clone)]
pub struct KernelInterpolator {
    base: LabeledSet,
    config: KernelConfig,
    dim: usize,
    coefficients: DVector<f64>,
    // lower Cholesky factor of K + jitter·I
    factor: DMatrix<f64>,
    jitter: f64,
    norm_sq: f64,
}

impl KernelInterpolator {
    /// The interpolant of an empty labeled set, `f ≡ 0`.
    pub fn empty(dim: usize, config: KernelConfig) -> Self {
        Self {
            base: LabeledSet::new(),
            config,
            dim,
            coefficients: DVector::zeros(0),
            factor: DMatrix::zeros(0, 0),
            jitter: 0.0,
            norm_sq: 0.0,
        }
    }

    /// Fits the minimum-norm interpolant of `labeled`.
    ///
    /// An empty set yields `f ≡ 0` in dimension `dim_hint`.
    pub fn fit_with_dim(labeled: &LabeledSet, config: KernelConfig, dim_hint: usize) -> Result<Self> {
        if labeled.is_empty() {
            return Ok(Self::empty(dim_hint, config));
        }
        Self::fit(labeled, config)
    }

    pub fn fit(labeled: &LabeledSet, config: KernelConfig) -> Result<Self> {
        let dim = labeled
            .dim()
            .ok_or_else(|| Error::InvalidArgument("cannot fit an empty labeled set without a dimension".into()))?;
        let k = kernel_matrix(labeled.points(), &config);
        let (factor, jitter) = factor_with_jitter(&k)?;
        let y = DVector::from_vec(labeled.label_values());
        let coefficients = cholesky_solve(&factor, &y);
        let norm_sq = y.dot(&coefficients);
        Ok(Self { base: labeled.clone(), config, dim, coefficients, factor, jitter, norm_sq })
    }

    pub fn base(&self) -> &LabeledSet {
        &self.base
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    /// Squared RKHS norm `yᵀ K⁻¹ y`.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// Diagonal jitter that was needed to factor `K`.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        Ok(())
    }

    /// `a_x = [k(x_1, x), …, k(x_L, x)]`.
    pub fn kernel_vector(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.base.points().iter().map(|p| self.config.eval_unchecked(p, x)))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        self.base
            .points()
            .iter()
            .zip(self.coefficients.iter())
            .map(|(p, a)| a * self.config.eval_unchecked(p, x))
            .sum()
    }

    /// `L⁻¹ a` for the stored lower factor `L`.
    pub fn whiten(&self, a: &DVector<f64>) -> DVector<f64> {
        if a.is_empty() {
            return DVector::zeros(0);
        }
        self.factor.solve_lower_triangular(a).expect("factor has a positive diagonal")
    }

    /// Schur complement `1 - a_uᵀ K⁻¹ a_u` of a candidate point.
    pub fn schur_denominator(&self, u: &[f64]) -> Result<f64> {
        self.check_dim(u)?;
        let w = self.whiten(&self.kernel_vector(u));
        Ok(1.0 - w.dot(&w))
    }

    /// Value `f(u)` together with the Schur denominator at `u`, rejecting
    /// candidates that coincide with a labeled point.
    pub fn value_and_denominator(&self, u: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(u)?;
        let a = self.kernel_vector(u);
        let w = self.whiten(&a);
        let denominator = 1.0 - w.dot(&w);
        if denominator < SCHUR_FLOOR {
            return Err(Error::DuplicatePoint { denominator });
        }
        Ok((a.dot(&self.coefficients), denominator))
    }

    /// Norm increase `(1 - t f(u))² / (1 - a_uᵀ K⁻¹ a_u)` caused by adding
    /// `(u, t)`.
    pub fn norm_increment(&self, u: &[f64], t: Label) -> Result<f64> {
        let (fu, den) = self.value_and_denominator(u)?;
        Ok((t.value() - fu).powi(2) / den)
    }

    /// Minimum-norm interpolant of the labeled set extended by `(u, t)`,
    /// obtained by appending one row to the Cholesky factor.
    pub fn augmented_fit(&self, u: &[f64], t: Label) -> Result<Self> {
        self.check_dim(u)?;
        if self.base.points().iter().any(|p| p.as_slice() == u) {
            return Err(Error::DuplicatePoint { denominator: 0.0 });
        }
        let n = self.len();
        let a = self.kernel_vector(u);
        let w = self.whiten(&a);
        let denominator = 1.0 - w.dot(&w);
        if denominator < SCHUR_FLOOR {
            return Err(Error::DuplicatePoint { denominator });
        }
        let fu = a.dot(&self.coefficients);
        let beta = (t.value() - fu) / denominator;

        // K⁻¹ a = L⁻ᵀ w
        let kinv_a = if n == 0 {
            DVector::zeros(0)
        } else {
            self.factor.tr_solve_lower_triangular(&w).expect("factor has a positive diagonal")
        };
        let mut coefficients = DVector::zeros(n + 1);
        for i in 0..n {
            coefficients[i] = self.coefficients[i] - beta * kinv_a[i];
        }
        coefficients[n] = beta;

        let mut factor = DMatrix::zeros(n + 1, n + 1);
        factor.view_mut((0, 0), (n, n)).copy_from(&self.factor);
        for j in 0..n {
            factor[(n, j)] = w[j];
        }
        factor[(n, n)] = (denominator + self.jitter).sqrt();

        let mut base = self.base.clone();
        base.push(u.to_vec(), t)?;
        let y = DVector::from_vec(base.label_values());
        let norm_sq = y.dot(&coefficients);
        Ok(Self {
            base,
            config: self.config,
            dim: self.dim,
            coefficients,
            factor,
            jitter: self.jitter,
            norm_sq,
        })
    }
}

fn cholesky_solve(lower: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let z = lower.solve_lower_triangular(b).expect("factor has a positive diagonal");
    lower.tr_solve_lower_triangular(&z).expect("factor has a positive diagonal")
}

/// Cholesky factor of `K + jitter·I` for the first jitter in
/// [`JITTER_SCHEDULE`] that factors with an acceptable pivot ratio.
fn factor_with_jitter(k: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = k.nrows();
    let mut last_estimate = f64::INFINITY;
    for &jitter in &JITTER_SCHEDULE {
        let shifted = k + DMatrix::<f64>::identity(n, n) * jitter;
        if let Some(chol) = shifted.cholesky() {
            let l = chol.l();
            let (lo, hi) = l
                .diagonal()
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
            let estimate = (hi / lo).powi(2);
            if estimate.is_finite() && estimate < MAX_CONDITION {
                if jitter > 0.0 {
                    log::debug!("kernel matrix factored with jitter {jitter:e}");
                }
                return Ok((l, jitter));
            }
            last_estimate = estimate;
        }
    }
    if !last_estimate.is_finite() {
        last_estimate = eigen_condition(k);
    }
    Err(Error::IllConditioned {
        condition_estimate: last_estimate,
        jitter: JITTER_SCHEDULE[JITTER_SCHEDULE.len() - 1],
    })
}

fn eigen_condition(k: &DMatrix<f64>) -> f64 {
    let eig = k.clone().symmetric_eigen();
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v.abs()), hi.max(v.abs())));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn laplace(h: f64) -> KernelConfig {
        KernelConfig::laplace(h).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(KernelConfig::new(0.0, 1.0).is_err());
        assert!(KernelConfig::new(-1.0, 1.0).is_err());
        assert!(KernelConfig::new(1.0, 0.5).is_err());
        assert!(KernelConfig::new(1.0, f64::NAN).is_err());
        assert!(KernelConfig::new(0.3, 3.5).is_ok());
    }

    #[test]
    fn kernel_eval_examples() {
        let cfg = KernelConfig::new(0.7, 2.0).unwrap();
        assert_eq!(kernel_eval(&[0.3, -1.0], &[0.3, -1.0], &cfg).unwrap(), 1.0);
        let v = kernel_eval(&[0.0], &[2.0], &laplace(1.0)).unwrap();
        assert_relative_eq!(v, (-2.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(v, 0.135335, epsilon = 1e-6);
        assert!(matches!(
            kernel_eval(&[0.0], &[1.0, 2.0], &cfg),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn minkowski_general_exponent() {
        let d = minkowski(&[0.0, 0.0], &[3.0, 4.0], 2.0);
        assert_relative_eq!(d, 5.0);
        let d3 = minkowski(&[1.0, 2.0], &[2.0, 4.0], 3.0);
        assert_relative_eq!(d3, 9f64.powf(1.0 / 3.0), max_relative = 1e-14);
        assert_relative_eq!(minkowski(&[1.0, -1.0], &[0.0, 1.0], 1.0), 3.0);
    }

    #[test]
    fn single_point_fit() {
        let set = LabeledSet::from_1d(&[(0.0, 1.0)]).unwrap();
        let m = KernelInterpolator::fit(&set, laplace(1.0)).unwrap();
        assert_relative_eq!(m.coefficients()[0], 1.0);
        assert_relative_eq!(m.norm_sq(), 1.0);
        assert_relative_eq!(m.evaluate(&[1.0]).unwrap(), (-1.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn two_point_norms_match_closed_form() {
        let (d, h) = (0.37f64, 0.2);
        let e = (-d / h).exp();
        let opp = LabeledSet::from_1d(&[(0.1, 1.0), (0.1 + d, -1.0)]).unwrap();
        let same = LabeledSet::from_1d(&[(0.1, 1.0), (0.1 + d, 1.0)]).unwrap();
        let m_opp = KernelInterpolator::fit(&opp, laplace(h)).unwrap();
        let m_same = KernelInterpolator::fit(&same, laplace(h)).unwrap();
        assert_relative_eq!(m_opp.norm_sq(), 2.0 / (1.0 - e), max_relative = 1e-12);
        assert_relative_eq!(m_same.norm_sq(), 2.0 / (1.0 + e), max_relative = 1e-12);
    }

    #[test]
    fn evaluate_reproduces_labels_and_decays() {
        let set = LabeledSet::from_1d(&[(0.0, 1.0), (0.3, -1.0), (0.5, 1.0), (0.9, 1.0)]).unwrap();
        let h = 0.1;
        let m = KernelInterpolator::fit(&set, laplace(h)).unwrap();
        for (p, l) in set.iter() {
            assert!((m.evaluate(p).unwrap() - l.value()).abs() < 1e-8);
        }
        // direct summation oracle far from the data
        let far = [0.9 + 40.0 * h];
        let oracle: f64 = m
            .coefficients()
            .iter()
            .zip(set.points())
            .map(|(a, p)| a * (-(far[0] - p[0]).abs() / h).exp())
            .sum();
        assert!(oracle.abs() < 1e-6);
        assert_relative_eq!(m.evaluate(&far).unwrap(), oracle, max_relative = 1e-12);
        assert!(m.evaluate(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn augmented_fit_from_empty() {
        let m = KernelInterpolator::empty(2, KernelConfig::new(0.5, 2.0).unwrap());
        let a = m.augmented_fit(&[0.2, 0.4], Label::Pos).unwrap();
        assert_relative_eq!(a.norm_sq(), 1.0);
        assert_relative_eq!(a.evaluate(&[0.2, 0.4]).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn augmented_fit_rejects_labeled_point() {
        let set = LabeledSet::from_1d(&[(0.0, 1.0), (1.0, -1.0)]).unwrap();
        let m = KernelInterpolator::fit(&set, laplace(0.5)).unwrap();
        assert!(matches!(m.augmented_fit(&[1.0], Label::Pos), Err(Error::DuplicatePoint { .. })));
        // numerically coincident with a labeled point
        assert!(matches!(m.augmented_fit(&[1e-15], Label::Pos), Err(Error::DuplicatePoint { .. })));
    }

    #[test]
    fn near_duplicates_need_jitter_or_fail() {
        let cfg = laplace(1.0);
        // gap 1e-13 gives condition ~2e13, still under the limit
        let set = LabeledSet::from_1d(&[(0.0, 1.0), (1e-13, -1.0)]).unwrap();
        assert_eq!(KernelInterpolator::fit(&set, cfg).unwrap().jitter(), 0.0);
        let set = LabeledSet::from_1d(&[(0.0, 1.0), (1e-16, -1.0)]).unwrap();
        match KernelInterpolator::fit(&set, cfg) {
            Err(Error::IllConditioned { condition_estimate, .. }) => assert!(condition_estimate > 1e12),
            Ok(m) => assert!(m.jitter() > 0.0),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn kernel_matrix_symmetric_unit_diagonal() {
        let pts = vec![vec![0.0, 0.1], vec![0.5, -0.2], vec![1.0, 1.0]];
        let k = kernel_matrix(&pts, &KernelConfig::new(0.4, 1.5).unwrap());
        for i in 0..3 {
            assert_eq!(k[(i, i)], 1.0);
            for j in 0..3 {
                assert_eq!(k[(i, j)], k[(j, i)]);
                assert!(k[(i, j)] > 0.0 && k[(i, j)] <= 1.0);
            }
        }
    }
}
