//! Synthetic tasks: 1D multi-threshold problems and ℓp-ball cluster
//! mixtures, plus checks of the geometric regimes the cluster guarantees
//! assume.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{minkowski, KernelConfig};
use crate::labels::Label;
use crate::scoring::UnlabeledPool;

/// Half-width of the jitter applied to equally spaced cuts, in units of
/// `1/k`.
pub const THRESHOLD_JITTER: f64 = 0.25;

/// `k` alternating pieces on `[0, 1]` separated by `k - 1` cuts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTask1D {
    pub n: usize,
    pub k: usize,
    pub thresholds: Vec<f64>,
    pub first_label: Label,
}

impl ThresholdTask1D {
    /// Label of the piece containing `x`.
    pub fn label_at(&self, x: f64) -> Label {
        let crossed = self.thresholds.partition_point(|&c| c <= x);
        if crossed % 2 == 0 {
            self.first_label
        } else {
            self.first_label.flip()
        }
    }

    /// Lengths of the `k` pieces.
    pub fn piece_lengths(&self) -> Vec<f64> {
        let mut edges = vec![0.0];
        edges.extend(&self.thresholds);
        edges.push(1.0);
        edges.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// `n` uniform points on `[0, 1]` labeled by a `k`-piece alternating
/// function. Cut `i` sits at `(i + U(-1/4, 1/4)) / k`, so every piece has
/// length in `[0.5/k, 1.5/k]`.
pub fn gen_threshold_task(n: usize, k: usize, seed: u64) -> Result<(ThresholdTask1D, UnlabeledPool)> {
    if k == 0 {
        return Err(Error::InvalidArgument("threshold task needs at least one piece".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} pieces exceeds n = {n} points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thresholds: Vec<f64> = (1..k)
        .map(|i| (i as f64 + rng.gen_range(-THRESHOLD_JITTER..THRESHOLD_JITTER)) / k as f64)
        .collect();
    let first_label = if rng.gen::<bool>() { Label::Pos } else { Label::Neg };
    let task = ThresholdTask1D { n, k, thresholds, first_label };
    let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let labels = xs.iter().map(|&x| task.label_at(x)).collect();
    let pool = UnlabeledPool::with_oracle(xs.into_iter().map(|x| vec![x]).collect(), labels)?;
    Ok((task, pool))
}

/// `M` disjoint ℓp balls with per-ball labels and point counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub labels: Vec<Label>,
    pub counts: Vec<usize>,
    #[serde(default = "default_ball_norm")]
    pub p: f64,
}

fn default_ball_norm() -> f64 {
    2.0
}

/// Sampled cluster data with the ball each point came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSample {
    pub pool: UnlabeledPool,
    pub membership: Vec<usize>,
}

impl ClusterSpec {
    pub fn num_balls(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    /// `min_{i≠j} ‖c_i - c_j‖_p - 2 max r`; infinite for a single ball.
    pub fn separation(&self) -> f64 {
        let rmax = self.radii.iter().copied().fold(0.0, f64::max);
        let mut min_dist = f64::INFINITY;
        for i in 0..self.centers.len() {
            for j in 0..i {
                min_dist = min_dist.min(minkowski(&self.centers[i], &self.centers[j], self.p));
            }
        }
        min_dist - 2.0 * rmax
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.centers.len();
        if m == 0 {
            return Err(Error::Spec("no balls".into()));
        }
        if self.radii.len() != m || self.labels.len() != m || self.counts.len() != m {
            return Err(Error::Spec("centers, radii, labels and counts must have equal length".into()));
        }
        let d = self.dim();
        if d == 0 || self.centers.iter().any(|c| c.len() != d) {
            return Err(Error::Spec("centers must share a positive dimension".into()));
        }
        if !(self.p >= 1.0) {
            return Err(Error::Spec(format!("ball norm exponent must be >= 1, got {}", self.p)));
        }
        if self.radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Spec("radii must be positive".into()));
        }
        if m > 1 && !(self.separation() > 0.0) {
            return Err(Error::Spec(format!("balls overlap (separation {:.4})", self.separation())));
        }
        Ok(())
    }

    /// `m` equal balls of radius `radius` on a square grid whose axis
    /// neighbors are `separation + 2 radius` apart. Labels alternate with
    /// the ball index.
    pub fn grid_layout(m: usize, radius: f64, separation: f64, count: usize, p: f64) -> Self {
        let side = (m as f64).sqrt().ceil() as usize;
        let spacing = separation + 2.0 * radius;
        let centers = (0..m).map(|i| vec![(i % side) as f64 * spacing, (i / side) as f64 * spacing]).collect();
        let labels = (0..m).map(|i| if i % 2 == 0 { Label::Pos } else { Label::Neg }).collect();
        Self { centers, radii: vec![radius; m], labels, counts: vec![count; m], p }
    }

    /// Thirteen equal-count balls with mixed labels, radius `h/4` and
    /// separation `13 h ln(26)`.
    pub fn thirteen_clusters(h: f64, count: usize) -> Self {
        let m = 13;
        Self::grid_layout(m, h / 4.0, 13.0 * h * (2.0 * m as f64).ln(), count, 2.0)
    }

    /// `m` balls in the plane: one of radius `h/2`, the rest `0.6` times
    /// smaller, separated by 1.2 times the first-point bound. Counts scale
    /// with ball area so the sample is uniform over the union.
    pub fn first_point_layout(h: f64, m: usize, largest_count: usize) -> Self {
        let d = 2;
        let r1 = h / 2.0;
        let r2 = 0.6 * r1;
        let bound = first_point_bound(h, m, r1, r2, d);
        let separation = 1.2 * bound;
        let mut spec = Self::grid_layout(m, r1, separation, largest_count, 2.0);
        let small = ((largest_count as f64) * (r2 / r1).powi(d as i32)).round() as usize;
        for i in 1..m {
            spec.radii[i] = r2;
            spec.counts[i] = small.max(1);
        }
        spec
    }
}

/// `(h/2) [ln M - ln(1 - (r2/r1)^d)]`.
pub fn first_point_bound(h: f64, m: usize, r1: f64, r2: f64, d: usize) -> f64 {
    0.5 * h * ((m as f64).ln() - (1.0 - (r2 / r1).powi(d as i32)).ln())
}

/// Uniform sample inside each ball by rejection from its bounding box.
pub fn gen_clusters(spec: &ClusterSpec, seed: u64) -> Result<ClusterSample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.dim();
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut membership = Vec::new();
    for (b, ((c, &r), (&label, &count))) in
        spec.centers.iter().zip(&spec.radii).zip(spec.labels.iter().zip(&spec.counts)).enumerate()
    {
        let mut drawn = 0;
        while drawn < count {
            let x: Vec<f64> = (0..d).map(|i| c[i] + r * rng.gen_range(-1.0..=1.0)).collect();
            if minkowski(&x, c, spec.p) <= r {
                points.push(x);
                labels.push(label);
                membership.push(b);
                drawn += 1;
            }
        }
    }
    Ok(ClusterSample { pool: UnlabeledPool::with_oracle(points, labels)?, membership })
}

/// Which cluster guarantee to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    FirstPoint,
    ClusterExplore,
}

/// One hypothesis inequality `lhs ≤ rhs` (or `<`), with margin `rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub margin: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(name: &str, lhs: f64, rhs: f64, strict: bool) -> Self {
        let holds = if strict { lhs < rhs } else { lhs <= rhs };
        Self { name: name.to_string(), lhs, rhs, strict, margin: rhs - lhs, holds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub holds: bool,
    pub checks: Vec<InequalityCheck>,
}

/// Checks the geometric hypotheses of a cluster guarantee.
///
/// * first point: `r1 ≤ h/2` and `D > (h/2)[ln M − ln(1 − (r2/r1)^d)]`;
/// * exploration: `r < h/3` and `D ≥ 12 h ln(2M)`.
pub fn validate_theorem_regime(spec: &ClusterSpec, cfg: &KernelConfig, which: Regime) -> RegimeReport {
    let h = cfg.bandwidth();
    let m = spec.num_balls();
    let d = spec.dim();
    let sep = spec.separation();
    let mut radii = spec.radii.clone();
    radii.sort_by(|a, b| b.total_cmp(a));
    let r1 = radii.first().copied().unwrap_or(0.0);
    let checks = match which {
        Regime::FirstPoint => {
            let r2 = radii.get(1).copied().unwrap_or(0.0);
            let bound = first_point_bound(h, m, r1, r2, d);
            let bound = if bound.is_nan() { f64::INFINITY } else { bound };
            vec![
                InequalityCheck::new("r1 <= h/2", r1, h / 2.0, false),
                InequalityCheck::new("D > (h/2)[ln M - ln(1 - (r2/r1)^d)]", bound, sep, true),
            ]
        }
        Regime::ClusterExplore => vec![
            InequalityCheck::new("r < h/3", r1, h / 3.0, true),
            InequalityCheck::new("D >= 12 h ln(2M)", 12.0 * h * (2.0 * m as f64).ln(), sep, false),
        ],
    };
    RegimeReport { regime: which, holds: checks.iter().all(|c| c.holds), checks }
}
