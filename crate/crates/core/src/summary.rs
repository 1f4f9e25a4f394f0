//! Aggregates over repeated runs of one task family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::RunRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub step: usize,
    pub runs: usize,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task_family: String,
    pub strategies: Vec<String>,
    pub runs: usize,
    pub per_step: Vec<StepStats>,
    /// Per run, `None` when zero error was never reached.
    pub queries_to_zero: Vec<Option<usize>>,
    /// Median with unreached runs counted as infinite; `None` if that
    /// median is infinite.
    pub median_queries_to_zero: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_count_std: Option<f64>,
}

/// Linear-interpolated quantile of a sorted sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi || sorted[hi] == sorted[lo] {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// Standard deviation of selections per cluster, pooled over runs.
pub fn cluster_count_std(records: &[RunRecord]) -> Option<f64> {
    let counts: Vec<f64> = records
        .iter()
        .filter_map(|r| r.cluster_counts.as_ref())
        .flat_map(|c| c.iter().map(|&v| v as f64))
        .collect();
    if counts.is_empty() {
        return None;
    }
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / counts.len() as f64;
    Some(var.sqrt())
}

pub fn summarize(records: &[RunRecord]) -> Result<Summary> {
    let first = records.first().ok_or_else(|| Error::InvalidArgument("no records to summarize".into()))?;
    if let Some(other) = records.iter().find(|r| r.task_family != first.task_family) {
        return Err(Error::InvalidArgument(format!(
            "mixed task families: {} and {}",
            first.task_family, other.task_family
        )));
    }
    let mut strategies: Vec<String> = records.iter().map(|r| r.strategy.clone()).collect();
    strategies.sort();
    strategies.dedup();

    let longest = records.iter().map(|r| r.steps.len()).max().unwrap_or(0);
    let per_step = (0..longest)
        .map(|k| {
            let mut errs: Vec<f64> = records.iter().filter_map(|r| r.steps.get(k)).map(|s| s.train_error).collect();
            errs.sort_by(f64::total_cmp);
            StepStats {
                step: k + 1,
                runs: errs.len(),
                median: quantile(&errs, 0.5),
                q10: quantile(&errs, 0.1),
                q90: quantile(&errs, 0.9),
            }
        })
        .collect();

    let queries_to_zero: Vec<Option<usize>> = records.iter().map(|r| r.queries_to_zero).collect();
    let as_f64: Vec<f64> = queries_to_zero.iter().map(|q| q.map_or(f64::INFINITY, |v| v as f64)).collect();
    let med = median(&as_f64);

    Ok(Summary {
        task_family: first.task_family.clone(),
        strategies,
        runs: records.len(),
        per_step,
        queries_to_zero,
        median_queries_to_zero: med.is_finite().then_some(med),
        cluster_count_std: cluster_count_std(records),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::StepRecord;
    use crate::labels::Label;

    fn record(family: &str, errors: &[f64]) -> RunRecord {
        let steps = errors
            .iter()
            .enumerate()
            .map(|(i, &e)| StepRecord {
                step: i + 1,
                index: i,
                point: vec![i as f64],
                estimated_label: Label::Pos,
                true_label: Label::Pos,
                score: Some(1.0),
                train_error: e,
                test_error: None,
                explore_hypothesis: None,
            })
            .collect();
        RunRecord {
            strategy: "kernel-function".into(),
            task_family: family.into(),
            seed: 0,
            pool_size: 10,
            steps,
            queries_to_zero: errors.iter().position(|&e| e == 0.0).map(|p| p + 1),
            cluster_counts: None,
        }
    }

    #[test]
    fn single_record_summary_equals_record() {
        let r = record("threshold", &[0.5, 0.2, 0.0, 0.1]);
        let s = summarize(std::slice::from_ref(&r)).unwrap();
        assert_eq!(s.runs, 1);
        for (st, step) in s.per_step.iter().zip(&r.steps) {
            assert_eq!(st.median, step.train_error);
            assert_eq!(st.q10, step.train_error);
            assert_eq!(st.q90, step.train_error);
        }
        assert_eq!(s.queries_to_zero, vec![Some(3)]);
        assert_eq!(s.median_queries_to_zero, Some(3.0));
    }

    #[test]
    fn mixed_families_rejected() {
        let a = record("threshold", &[0.1]);
        let b = record("clusters", &[0.1]);
        assert!(matches!(summarize(&[a, b]), Err(Error::InvalidArgument(_))));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn unreached_runs_count_as_infinite() {
        let a = record("threshold", &[0.1, 0.0]);
        let b = record("threshold", &[0.1, 0.1]);
        let c = record("threshold", &[0.1, 0.1, 0.1]);
        let s = summarize(&[a.clone(), b.clone(), c]).unwrap();
        assert_eq!(s.median_queries_to_zero, None);
        let s = summarize(&[a.clone(), a, b]).unwrap();
        assert_eq!(s.median_queries_to_zero, Some(2.0));
        assert_eq!(s.per_step.len(), 2);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }
}
