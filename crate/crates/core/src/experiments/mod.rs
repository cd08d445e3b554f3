//! Seeded Monte-Carlo experiments checking the statistical guarantees of the
//! post-processor and the exactness of the transport primitives.
//!
//! Replications draw from their own counter-based streams and are collected
//! in index order before any reduction, so a report depends only on the
//! config and the seed, never on the number of worker threads.

pub mod barycenter_oracle;
pub mod brute;
pub mod dkw;
pub mod fairness_accuracy;
pub mod fairness_bound;
pub mod gaussian_oracle;
pub mod rate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentsConfig;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    BarycenterOracle,
    GaussianOracle,
    FairnessBound,
    Rate,
    FairnessAccuracy,
    Dkw,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::BarycenterOracle,
        ExperimentName::GaussianOracle,
        ExperimentName::FairnessBound,
        ExperimentName::Rate,
        ExperimentName::FairnessAccuracy,
        ExperimentName::Dkw,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::BarycenterOracle => "barycenter-oracle",
            ExperimentName::GaussianOracle => "gaussian-oracle",
            ExperimentName::FairnessBound => "fairness-bound",
            ExperimentName::Rate => "rate",
            ExperimentName::FairnessAccuracy => "fairness-accuracy",
            ExperimentName::Dkw => "dkw",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// One pass/fail comparison `value` against `bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= bound`.
    pub fn at_most(name: &str, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= bound,
            value,
            bound,
            detail: detail.into(),
        }
    }
}

/// Numeric columns for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Invariant(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invariant(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    pub fn new(name: ExperimentName, seed: u64, checks: Vec<Check>, tables: Vec<Table>) -> Self {
        Self {
            experiment: name.as_str().into(),
            seed,
            passed: checks.iter().all(|c| c.passed),
            checks,
            tables,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn run(name: ExperimentName, config: &ExperimentsConfig, seed: u64) -> Result<ExperimentReport> {
    let inner = derive_seed(seed, Domain::Replication, name.tag());
    let report = match name {
        ExperimentName::BarycenterOracle => barycenter_oracle::run(&config.barycenter_oracle, inner),
        ExperimentName::GaussianOracle => gaussian_oracle::run(&config.gaussian_oracle, inner),
        ExperimentName::FairnessBound => fairness_bound::run(&config.fairness_bound, inner),
        ExperimentName::Rate => rate::run(&config.rate, inner),
        ExperimentName::FairnessAccuracy => fairness_accuracy::run(&config.fairness_accuracy, inner),
        ExperimentName::Dkw => dkw::run(&config.dkw, inner),
    }?;
    Ok(ExperimentReport { seed, ..report })
}

/// Seed of replication `(a, b)` of an experiment.
pub(crate) fn rep_seed(seed: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(seed, Domain::Replication, a), Domain::Replication, b)
}

/// Sample mean and standard error of the mean.
pub(crate) fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
