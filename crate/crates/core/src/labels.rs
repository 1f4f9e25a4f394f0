use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary class label, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    pub fn value(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    /// Sign of a decision value, with zero mapped to `+1`.
    pub fn from_sign(v: f64) -> Self {
        if v >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(Error::InvalidArgument(format!("label must be +1 or -1, got {other}"))),
        }
    }
}

impl TryFrom<f64> for Label {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        if v == 1.0 {
            Ok(Label::Pos)
        } else if v == -1.0 {
            Ok(Label::Neg)
        } else {
            Err(Error::InvalidArgument(format!("label must be +1 or -1, got {v}")))
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Pos => write!(f, "1"),
            Label::Neg => write!(f, "-1"),
        }
    }
}

/// Ordered labeled points. Points share one dimension and are pairwise
/// distinct.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl LabeledSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(points: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let mut set = Self::new();
        for (p, l) in points.into_iter().zip(labels) {
            set.push(p, l)?;
        }
        Ok(set)
    }

    /// One-dimensional convenience constructor from `(position, ±1)` pairs.
    pub fn from_1d(pairs: &[(f64, f64)]) -> Result<Self> {
        let mut set = Self::new();
        for &(x, y) in pairs {
            set.push(vec![x], Label::try_from(y)?)?;
        }
        Ok(set)
    }

    /// Appends a point. Rejects dimension changes and exact duplicates.
    pub fn push(&mut self, point: Vec<f64>, label: Label) -> Result<()> {
        if let Some(d) = self.dim() {
            if point.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: point.len() });
            }
        }
        if point.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("point has non-finite coordinates".into()));
        }
        if self.points.iter().any(|p| p == &point) {
            return Err(Error::DuplicatePoint { denominator: 0.0 });
        }
        self.points.push(point);
        self.labels.push(label);
        Ok(())
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

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label_values(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.value()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Label)> {
        self.points.iter().map(Vec::as_slice).zip(self.labels.iter().copied())
    }
}
