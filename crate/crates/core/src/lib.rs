//! MaxiMin active learning with minimum-norm interpolators.
//!
//! A learner holds a labeled set and a pool of unlabeled candidates. Each
//! round it fits the minimum-norm interpolant of the labeled data, scores
//! every candidate by the norm of the best-case extension of that
//! interpolant (maximum over candidates of the minimum over the two
//! possible labels), and asks for the label of the top-scoring point.
//!
//! Two model families are provided:
//!
//! * [`kernel`]: minimum-RKHS-norm interpolation with the radial-basis
//!   family `exp(-‖x - x'‖_p / h)`, with rank-one (Schur complement)
//!   candidate scoring. [`laplace_1d`] holds the closed forms for the
//!   one-dimensional Laplace kernel.
//! * [`spline`]: minimal-knot linear splines, the one-dimensional
//!   characterization of minimum weight-norm two-layer ReLU networks.
//!
//! Both support the function-norm score and the data-based-norm score.
//! Learners are trait objects registered by name in [`strategy`] and
//! driven by the pool-based loop in [`harness`].

pub mod checks;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod labels;
pub mod laplace_1d;
pub mod pool_cache;
pub mod scoring;
pub mod spline;
pub mod strategy;
pub mod summary;
pub mod synthetic;

pub use error::{Error, Result};
pub use kernel::{KernelConfig, KernelInterpolator};
pub use labels::{Label, LabeledSet};
pub use scoring::{ScoreKind, ScoredCandidate, UnlabeledPool};
