//! Refit-based, selective feature importance.
//!
//! The crate is organised around the pipeline a run goes through:
//!
//! - [`dataset`]: tabular data, CSV ingestion, simulated data-generating
//!   processes with known true covariates, and row splitting.
//! - [`learner`]: the learner contract (seeded fit on a feature subset,
//!   predict, cross-validated loss) with OLS, gradient-boosted trees and an
//!   external-process learner.
//! - [`shapley`]: coalitional games, exact Shapley values and the
//!   coverage probability of random feature subsets.
//! - [`importance`]: SMSSM, LOCO, a simplified Model Class Reliance,
//!   constant replacement and gain importance.
//! - [`evaluation`]: angle / selective-ratio metrics, split consistency,
//!   rank summaries and refit-Shapley ground truth.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod importance;
pub mod learner;
pub mod rng;
pub mod shapley;
pub mod stats;

pub use dataset::{Dataset, DgpId, DgpSpec, SplitKind, SplitPlan};
pub use error::{Error, Result};
pub use importance::{ImportanceReport, Method, MethodConfig};
pub use learner::{CoalitionMask, FittedModel, LearnerKind, LearnerSpec, LossMetric};
pub use shapley::{Game, ShapleyVector};
