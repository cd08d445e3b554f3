//! Demographic-parity fair regression by post-processing.
//!
//! A fitted base regressor `f(x, s)` is turned into a fair predictor by
//! pushing its per-group output distributions onto their one-dimensional
//! Wasserstein-2 barycenter:
//!
//! ```text
//! g(x, s) = (sum_{s'} p_{s'} Q_{s'}) o F_s(f(x, s) + eps)
//! ```
//!
//! where `F_s` and `Q_s` are empirical CDF / quantile functions built from
//! two disjoint halves of a jittered unlabeled sample of group `s`.
//!
//! Module map:
//! - [`measures`]: jittered empirical measures, CDF, quantile, position.
//! - [`transport`]: 1-D Wasserstein distances and barycenters.
//! - [`regressors`]: ridge and k-NN base estimators.
//! - [`postprocess`]: the fair post-processor.
//! - [`oracle`]: the exact fair predictor for analytic group laws.
//! - [`metrics`]: MSE and pairwise Kolmogorov-Smirnov unfairness.
//! - [`data`]: datasets, CSV ingestion, splits, synthetic data, model selection.
//! - [`experiments`]: the statistical guarantee experiments.

pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod measures;
pub mod metrics;
pub mod oracle;
pub mod postprocess;
pub mod regressors;
pub mod rng;
pub mod transport;

pub use data::{GroupId, GroupedDataset, Row};
pub use error::{Error, Result};
pub use measures::{EmpiricalMeasure, SplitIndices};
pub use metrics::EvalReport;
pub use oracle::AnalyticGroupModel;
pub use postprocess::FairPostprocessor;
pub use regressors::{BaseModel, KnnModel, Regressor, RidgeModel};
pub use transport::WeightedMeasures;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
