//! Acceptance checks, grouped into the suites exposed by `maximin check`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::write_csv;
use crate::error::{Error, Result};
use crate::harness::{run_experiment, run_on_task, write_trace, Bootstrap, ExperimentConfig, Task, TaskSpec};
use crate::kernel::{kernel_matrix, KernelConfig, KernelInterpolator};
use crate::labels::{Label, LabeledSet};
use crate::laplace_1d::{norm_closed_form, tridiagonal_inverse, SortedLabeled1D};
use crate::scoring::{argmax_with_ties, score_function_norm, ScoreKind};
use crate::spline::{fit_spline, Density1D, SplineInterpolator};
use crate::strategy::{ModelSpec, SelectionRule, StrategyRegistry};
use crate::summary::median;
use crate::synthetic::{gen_threshold_task, ClusterSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Bisection,
    Identities,
    Splines,
    Clusters,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Bisection, Suite::Identities, Suite::Splines, Suite::Clusters];

    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Bisection => &[1, 10],
            Suite::Identities => &[2, 3, 4, 9],
            Suite::Splines => &[7, 8],
            Suite::Clusters => &[5, 6],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bisection" => Ok(Suite::Bisection),
            "identities" => Ok(Suite::Identities),
            "splines" => Ok(Suite::Splines),
            "clusters" => Ok(Suite::Clusters),
            other => Err(Error::InvalidArgument(format!("unknown suite `{other}`"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Bisection => "bisection",
            Suite::Identities => "identities",
            Suite::Splines => "splines",
            Suite::Clusters => "clusters",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<CriterionResult> {
    suite.criteria().iter().map(|&id| run_criterion(id, seed)).collect()
}

/// Runs one criterion by number. Errors inside a check count as failures.
pub fn run_criterion(id: u8, seed: u64) -> CriterionResult {
    let (name, outcome): (&'static str, Result<(bool, String)>) = match id {
        1 => ("bisection label complexity", bisection_complexity(seed)),
        2 => ("midpoint optimality for a labeled pair", pair_midpoint(seed)),
        3 => ("rank-one score identity", rank_one_identity(seed)),
        4 => ("tridiagonal inverse and norm", tridiagonal_forms(seed)),
        5 => ("first point in the largest ball", first_point(seed)),
        6 => ("cluster exploration", cluster_exploration(seed)),
        7 => ("spline selection properties", spline_properties(seed)),
        8 => ("spline data-norm value", spline_data_value()),
        9 => ("zero-crossing maximizer", zero_crossing(seed)),
        10 => ("active beats random", active_vs_random(seed)),
        _ => ("unknown", Err(Error::InvalidArgument(format!("no criterion {id}")))),
    };
    match outcome {
        Ok((passed, detail)) => CriterionResult { id, name, passed, detail },
        Err(e) => CriterionResult { id, name, passed: false, detail: format!("error: {e}") },
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn threshold_cfg(model: ModelSpec, score: SelectionRule, budget: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        task: TaskSpec::Threshold { n: 1024, k: 5 },
        model,
        score,
        budget,
        seed,
        bootstrap: Bootstrap::None,
        stop_at_zero: true,
        output_dir: None,
    }
}

const LAPLACE_01: ModelSpec = ModelSpec::Kernel { h: 0.1, p: 1.0 };

fn bisection_complexity(seed: u64) -> Result<(bool, String)> {
    let bound = 5 * (10 + 4);
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for model in [LAPLACE_01, ModelSpec::Spline] {
        let mut worst = 0usize;
        let mut misses = 0;
        for s in seed..seed + 10 {
            let mut cfg = threshold_cfg(model, SelectionRule::Function, bound, s);
            cfg.bootstrap = Bootstrap::Endpoints;
            let r = run_experiment(&cfg)?;
            match r.queries_to_zero {
                Some(q) => worst = worst.max(q),
                None => misses += 1,
            }
        }
        ok &= misses == 0;
        parts.push(format!("{}: worst {worst}, {misses} runs above {bound}", model.family()));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    Ok((ok, format!("{}; {secs:.1}s", parts.join("; "))))
}

fn active_vs_random(seed: u64) -> Result<(bool, String)> {
    let medians = |rule: SelectionRule| -> Result<f64> {
        let mut q = Vec::new();
        for s in seed..seed + 20 {
            let r = run_experiment(&threshold_cfg(LAPLACE_01, rule, 1024, s))?;
            q.push(r.queries_to_zero.map_or(f64::INFINITY, |v| v as f64));
        }
        Ok(median(&q))
    };
    let random = medians(SelectionRule::Random)?;
    let function = medians(SelectionRule::Function)?;
    let data = medians(SelectionRule::Data)?;
    let dominates = function <= 0.5 * random && data <= 0.5 * random;

    let (rows, budget) = csv_round_trip(seed)?;
    let ok = dominates && rows == budget;
    Ok((
        ok,
        format!("median queries to zero: function {function}, data {data}, random {random}; csv trace {rows}/{budget} rows"),
    ))
}

/// Writes a 200-row threshold pool to CSV, runs on it and counts trace rows.
fn csv_round_trip(seed: u64) -> Result<(usize, usize)> {
    let (_, pool) = gen_threshold_task(200, 3, seed)?;
    let path = std::env::temp_dir().join(format!("maximin-check-{}-{seed}.csv", std::process::id()));
    write_csv(&pool, &path)?;
    let budget = 25;
    let cfg = ExperimentConfig {
        task: TaskSpec::Csv { path: path.clone(), holdout: None },
        model: LAPLACE_01,
        score: SelectionRule::Data,
        budget,
        seed,
        bootstrap: Bootstrap::None,
        stop_at_zero: false,
        output_dir: None,
    };
    let record = run_experiment(&cfg);
    let _ = std::fs::remove_file(&path);
    let mut buf = Vec::new();
    write_trace(&record?, &mut buf)?;
    let rows = String::from_utf8_lossy(&buf).lines().count().saturating_sub(1);
    Ok((rows, budget))
}

fn pair_midpoint(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = 10_000usize;
    let mut ok = true;
    let mut worst_rel = 0.0f64;
    let mut worst_offset = 0.0f64;
    for case in 0..8 {
        let h = rng.gen_range(0.05..1.0);
        let g = h * rng.gen_range(0.2..5.0);
        let x1 = rng.gen_range(-1.0..1.0);
        let opposite = case % 2 == 0;
        let y2 = if opposite { -1.0 } else { 1.0 };
        let set = LabeledSet::from_1d(&[(x1, 1.0), (x1 + g, y2)])?;
        let m = KernelInterpolator::fit(&set, KernelConfig::laplace(h)?)?;
        let step = g / grid as f64;
        let mut xs = Vec::with_capacity(grid - 1);
        let mut scores = Vec::with_capacity(grid - 1);
        for k in 1..grid {
            let u = x1 + k as f64 * step;
            xs.push(u);
            scores.push(score_function_norm(&m, &[u])?.score);
        }
        let best = argmax_with_ties(&scores, &mut rng).ok_or(Error::EmptyPool)?;
        let offset = (xs[best] - (x1 + 0.5 * g)).abs() / step;
        let closed = if opposite {
            4.0 / (1.0 - (-g / h).exp()) - 1.0
        } else {
            4.0 / (1.0 + (-g / (2.0 * h)).exp()) - 1.0
        };
        let rel = rel_err(scores[best], closed);
        worst_rel = worst_rel.max(rel);
        worst_offset = worst_offset.max(offset);
        ok &= offset <= 1.0 + 1e-6 && rel <= 1e-9;
    }
    Ok((ok, format!("8 pairs; worst argmax offset {worst_offset:.3} steps, worst relative error {worst_rel:.2e}")))
}

fn rank_one_identity(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_increment = 0.0f64;
    let mut label_mismatches = 0;
    let mut failures = 0;
    for _ in 0..200 {
        let d = rng.gen_range(1..=5);
        let n = rng.gen_range(1..=50);
        let p = if rng.gen::<bool>() { 1.0 } else { 2.0 };
        let cfg = KernelConfig::new(rng.gen_range(0.1..1.0), p)?;
        let mut set = LabeledSet::new();
        while set.len() < n {
            let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
            let y = if rng.gen::<bool>() { Label::Pos } else { Label::Neg };
            set.push(x, y)?;
        }
        let u: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let m = KernelInterpolator::fit(&set, cfg)?;
        let schur = score_function_norm(&m, &u)?;

        let refit = |t: Label| -> Result<f64> {
            let mut s = set.clone();
            s.push(u.clone(), t)?;
            Ok(KernelInterpolator::fit(&s, cfg)?.norm_sq())
        };
        let (plus, minus) = (refit(Label::Pos)?, refit(Label::Neg)?);
        let (best, label) = if plus <= minus { (plus, Label::Pos) } else { (minus, Label::Neg) };
        let rel = rel_err(schur.score, best);
        worst = worst.max(rel);
        worst_increment = worst_increment.max(rel_err(schur.score - m.norm_sq(), best - m.norm_sq()));
        if schur.label != label && plus != minus {
            label_mismatches += 1;
        }
        if rel > 1e-8 {
            failures += 1;
        }
    }
    let ok = failures == 0 && label_mismatches == 0;
    Ok((
        ok,
        format!(
            "200 configs; worst relative error {worst:.2e} (increment {worst_increment:.2e}); {failures} above 1e-8; {label_mismatches} label mismatches"
        ),
    ))
}

fn tridiagonal_forms(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_inv = 0.0f64;
    let mut worst_norm = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=20);
        let h = rng.gen_range(0.05..1.0);
        // keep the dense oracle well conditioned
        let xs = loop {
            let mut xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            xs.sort_by(f64::total_cmp);
            if xs.windows(2).all(|w| w[1] - w[0] >= 1e-3) {
                break xs;
            }
        };
        let labels: Vec<Label> = (0..n).map(|_| if rng.gen::<bool>() { Label::Pos } else { Label::Neg }).collect();
        let s = SortedLabeled1D::new(xs.clone(), labels.clone(), h)?;
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let k = kernel_matrix(&pts, &KernelConfig::laplace(h)?);
        let inv = k.cholesky().ok_or(Error::IllConditioned { condition_estimate: f64::INFINITY, jitter: 0.0 })?.inverse();
        let closed = tridiagonal_inverse(&s).to_dense();
        let scale = inv.amax();
        worst_inv = worst_inv.max((&closed - &inv).amax() / scale);
        let y = DVector::from_iterator(n, labels.iter().map(|l| l.value()));
        let dense_norm = y.dot(&(&inv * &y));
        worst_norm = worst_norm.max(rel_err(norm_closed_form(&s), dense_norm));
    }
    let ok = worst_inv <= 1e-9 && worst_norm <= 1e-9;
    Ok((ok, format!("100 sets; inverse max error {worst_inv:.2e} (relative to max entry), norm {worst_norm:.2e}")))
}

fn zero_crossing(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0;
    let grid = 10_000usize;
    let mut misses = 0;
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let p = if trial % 2 == 0 { 1.0 } else { 2.0 };
        let cfg = KernelConfig::new(h, p)?;
        let delta = 20.0 * h.powf(1.0 / p);
        // three points in the plane, pairwise distances in [Δ, 1.5Δ]
        let pts = loop {
            let pts: Vec<Vec<f64>> =
                (0..3).map(|_| vec![rng.gen_range(0.0..2.0 * delta), rng.gen_range(0.0..2.0 * delta)]).collect();
            let ok = (0..3).all(|i| {
                (0..i).all(|j| {
                    let d = crate::kernel::minkowski(&pts[i], &pts[j], p);
                    (delta..=1.5 * delta).contains(&d)
                })
            });
            if ok {
                break pts;
            }
        };
        let set = LabeledSet::from_parts(pts.clone(), vec![Label::Pos, Label::Pos, Label::Neg])?;
        let m = KernelInterpolator::fit(&set, cfg)?;
        let (a, b) = (&pts[1], &pts[2]);
        let at = |s: f64| vec![a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        let step = 1.0 / grid as f64;
        let mut scores = Vec::with_capacity(grid - 1);
        let mut values = Vec::with_capacity(grid - 1);
        for k in 1..grid {
            let u = at(k as f64 * step);
            values.push(m.evaluate(&u)?);
            scores.push(score_function_norm(&m, &u)?.score);
        }
        let best = argmax_with_ties(&scores, &mut rng).ok_or(Error::EmptyPool)?;
        let Some(c) = values.windows(2).position(|w| w[0] >= 0.0 && w[1] < 0.0) else {
            misses += 1;
            continue;
        };
        // sign change lies between grid nodes c and c + 1
        let crossing = c as f64 + values[c] / (values[c] - values[c + 1]);
        let offset = (best as f64 - crossing).abs();
        worst = worst.max(offset);
        if offset > 1.0 {
            misses += 1;
        }
    }
    Ok((misses == 0, format!("20 geometries; worst offset {worst:.3} steps; {misses} misses")))
}

fn first_point(seed: u64) -> Result<(bool, String)> {
    let h = 1.0;
    let spec = ClusterSpec::first_point_layout(h, 5, 100);
    let model = ModelSpec::Kernel { h, p: 2.0 };
    let mut hits = 0;
    for s in seed..seed + 10 {
        let cfg = cluster_cfg(&spec, model, SelectionRule::Data, 1, s);
        let task = Task::materialize(&cfg.task, s)?;
        let r = run_on_task(&cfg, &task, &StrategyRegistry::with_defaults(), None)?;
        let membership = task.membership.as_ref().expect("cluster task");
        if membership[r.steps[0].index] == 0 {
            hits += 1;
        }
    }
    Ok((hits == 10, format!("first pick in the largest ball for {hits}/10 seeds")))
}

fn cluster_cfg(spec: &ClusterSpec, model: ModelSpec, score: SelectionRule, budget: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        task: TaskSpec::Clusters(spec.clone()),
        model,
        score,
        budget,
        seed,
        bootstrap: Bootstrap::None,
        stop_at_zero: false,
        output_dir: None,
    }
}

fn cluster_exploration(seed: u64) -> Result<(bool, String)> {
    let h = 1.0;
    let spec = ClusterSpec::thirteen_clusters(h, 20);
    let model = ModelSpec::Kernel { h, p: 2.0 };
    let mut data_all = 0;
    let mut function_missing = 0;
    let mut function_unlabeled = Vec::new();
    for s in seed..seed + 10 {
        let counts = |rule| -> Result<Vec<usize>> {
            let r = run_experiment(&cluster_cfg(&spec, model, rule, 13, s))?;
            Ok(r.cluster_counts.unwrap_or_default())
        };
        if counts(SelectionRule::Data)?.iter().all(|&c| c == 1) {
            data_all += 1;
        }
        let unlabeled = counts(SelectionRule::Function)?.iter().filter(|&&c| c == 0).count();
        function_unlabeled.push(unlabeled);
        if unlabeled > 0 {
            function_missing += 1;
        }
    }
    let ok = data_all == 10 && function_missing > 5;
    Ok((
        ok,
        format!(
            "data norm covered all 13 clusters in {data_all}/10 seeds; function norm left clusters unlabeled in {function_missing}/10 seeds (unlabeled per seed {function_unlabeled:?})"
        ),
    ))
}

fn spline_data_value() -> Result<(bool, String)> {
    let set = LabeledSet::from_1d(&[(0.0, 1.0), (1.0, -1.0)])?;
    let m = fit_spline(&set)?;
    let v = m.score_data_norm(0.5, &Density1D::uniform(0.0, 1.0)?)?.score;
    Ok(((v - 1.0 / 3.0).abs() <= 1e-6, format!("score {v:.12}, expected 1/3")))
}

/// Counts violations of the eight spline selection properties.
#[derive(Debug, Default)]
struct SplineTally {
    violations: [usize; 8],
    applicable: [usize; 8],
}

fn spline_properties(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = SplineTally::default();
    let density = Density1D::uniform(0.0, 1.0)?;
    for _ in 0..500 {
        let n = rng.gen_range(4..=12);
        let xs = loop {
            let mut xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            xs.sort_by(f64::total_cmp);
            if xs.windows(2).all(|w| w[1] - w[0] >= 1e-3) {
                break xs;
            }
        };
        let pairs: Vec<(f64, f64)> = xs.iter().map(|&x| (x, if rng.gen::<bool>() { 1.0 } else { -1.0 })).collect();
        let m = fit_spline(&LabeledSet::from_1d(&pairs)?)?;
        check_spline_config(&m, &pairs, &density, &mut tally)?;
    }
    let total: usize = tally.violations.iter().sum();
    Ok((
        total == 0,
        format!("500 configs; violations per property {:?}; configs exercising each {:?}", tally.violations, tally.applicable),
    ))
}

const GRID_PER_INTERVAL: usize = 40;

struct IntervalScores {
    width: f64,
    opposite: bool,
    mid: [f64; 2],
    grid: Vec<[f64; 2]>,
}

fn check_spline_config(
    m: &SplineInterpolator,
    pairs: &[(f64, f64)],
    density: &Density1D,
    tally: &mut SplineTally,
) -> Result<()> {
    let tol = 1e-12;
    let score = |u: f64| -> Result<[f64; 2]> {
        Ok([m.score(u, ScoreKind::FunctionNorm, density)?.score, m.score(u, ScoreKind::DataNorm, density)?.score])
    };
    let mut intervals = Vec::new();
    for w in pairs.windows(2) {
        let (x1, x2) = (w[0].0, w[1].0);
        let width = x2 - x1;
        let grid = (1..=GRID_PER_INTERVAL)
            .map(|k| score(x1 + width * k as f64 / (GRID_PER_INTERVAL + 1) as f64))
            .collect::<Result<Vec<_>>>()?;
        intervals.push(IntervalScores { width, opposite: w[0].1 != w[1].1, mid: score(x1 + 0.5 * width)?, grid });
    }
    let opp: Vec<&IntervalScores> = intervals.iter().filter(|i| i.opposite).collect();
    let same: Vec<&IntervalScores> = intervals.iter().filter(|i| !i.opposite).collect();

    // slots 0..4 function norm, 4..8 data norm
    for k in 0..2 {
        let base = 4 * k;
        let scale = |v: f64| tol * v.abs().max(1.0);
        // midpoint dominates its own interval
        if !opp.is_empty() {
            tally.applicable[base] += 1;
            if opp.iter().any(|i| i.grid.iter().any(|g| g[k] > i.mid[k] + scale(i.mid[k]))) {
                tally.violations[base] += 1;
            }
        }
        // width ordering: function norm prefers the narrower pair, data norm the wider
        if opp.len() >= 2 {
            tally.applicable[base + 1] += 1;
            let mut bad = false;
            for a in &opp {
                for b in &opp {
                    if a.width >= b.width {
                        let (wide, narrow) = (a.mid[k], b.mid[k]);
                        bad |= if k == 0 { wide > narrow + scale(narrow) } else { wide + scale(wide) < narrow };
                    }
                }
            }
            if bad {
                tally.violations[base + 1] += 1;
            }
        }
        // between identical labels: constant function norm, zero data norm
        if !same.is_empty() {
            tally.applicable[base + 2] += 1;
            let bad = same.iter().any(|i| {
                i.grid.iter().any(|g| {
                    if k == 0 {
                        (g[0] - m.weight_norm()).abs() > scale(m.weight_norm())
                    } else {
                        g[1] != 0.0
                    }
                })
            });
            if bad {
                tally.violations[base + 2] += 1;
            }
        }
        // opposite-pair candidates dominate identical-pair candidates
        if !opp.is_empty() && !same.is_empty() {
            tally.applicable[base + 3] += 1;
            let hi_same = same.iter().flat_map(|i| i.grid.iter().map(|g| g[k])).fold(f64::NEG_INFINITY, f64::max);
            let lo_opp = opp.iter().flat_map(|i| i.grid.iter().map(|g| g[k])).fold(f64::INFINITY, f64::min);
            if hi_same > lo_opp + scale(lo_opp) {
                tally.violations[base + 3] += 1;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_cover_every_criterion_once() {
        let mut ids: Vec<u8> = Suite::ALL.iter().flat_map(|s| s.criteria().iter().copied()).collect();
        ids.sort_unstable();
        assert_eq!(ids, (1..=10).collect::<Vec<u8>>());
        assert_eq!("splines".parse::<Suite>().unwrap(), Suite::Splines);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn unknown_criterion_fails() {
        assert!(!run_criterion(11, 0).passed);
    }
}
