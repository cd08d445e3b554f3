//! Base estimators of the regression function, to be post-processed.
//!
//! Both estimators see the sensitive attribute: ridge through indicator
//! columns, k-NN through a scaled one-hot block in its distance.

mod knn;
mod ridge;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{CsvSchema, GroupId, GroupedDataset};
use crate::error::{Error, Result};

pub use knn::{fit_knn, KnnModel};
pub use ridge::{fit_ridge, RidgeModel};

/// A fitted predictor `f(x, s)`.
pub trait Regressor: Send + Sync {
    fn dim(&self) -> usize;

    fn predict(&self, x: &[f64], s: GroupId) -> Result<f64>;

    fn predict_all(&self, data: &GroupedDataset) -> Result<Vec<f64>> {
        data.rows().iter().map(|r| self.predict(&r.x, r.s)).collect()
    }
}

impl<T: Regressor + ?Sized> Regressor for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn predict(&self, x: &[f64], s: GroupId) -> Result<f64> {
        (**self).predict(x, s)
    }
}

/// Adapts a closure `(x, s) -> f(x, s)` of known input dimension.
pub struct FnRegressor<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], GroupId) -> f64 + Send + Sync> FnRegressor<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], GroupId) -> f64 + Send + Sync> Regressor for FnRegressor<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &[f64], s: GroupId) -> Result<f64> {
        check_dim(self.dim, x)?;
        Ok((self.f)(x, s))
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            found: x.len(),
        })
    }
}

/// Per-feature z-scoring fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &GroupedDataset) -> Self {
        let d = data.dim();
        let n = data.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in data.rows() {
            for (m, v) in mean.iter_mut().zip(&r.x) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in data.rows() {
            for ((s, v), m) in var.iter_mut().zip(&r.x).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        // constant columns are left unscaled
        let scale = var
            .into_iter()
            .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseModel {
    Ridge(RidgeModel),
    Knn(KnnModel),
}

impl Regressor for BaseModel {
    fn dim(&self) -> usize {
        match self {
            BaseModel::Ridge(m) => m.dim(),
            BaseModel::Knn(m) => m.dim(),
        }
    }

    fn predict(&self, x: &[f64], s: GroupId) -> Result<f64> {
        match self {
            BaseModel::Ridge(m) => m.predict(x, s),
            BaseModel::Knn(m) => m.predict(x, s),
        }
    }
}

pub const MODEL_FILE_VERSION: u32 = 1;

/// On-disk base model: the estimator plus the input schema it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModelFile {
    pub version: u32,
    pub schema: CsvSchema,
    pub group_names: Vec<String>,
    pub model: BaseModel,
}

impl BaseModelFile {
    pub fn new(schema: CsvSchema, group_names: Vec<String>, model: BaseModel) -> Self {
        Self {
            version: MODEL_FILE_VERSION,
            schema,
            group_names,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let found = serde_json::from_str::<serde_json::Value>(text)
            .ok()
            .and_then(|v| v.get("version")?.as_u64())
            .map(|v| v as u32);
        if found != Some(MODEL_FILE_VERSION) {
            return Err(Error::SchemaVersionMismatch {
                expected: MODEL_FILE_VERSION,
                found,
            });
        }
        let file: Self = serde_json::from_str(text).map_err(|_| Error::SchemaVersionMismatch {
            expected: MODEL_FILE_VERSION,
            found,
        })?;
        if file.model.dim() != file.schema.features.len() {
            return Err(Error::Invariant("model dimension differs from its schema".into()));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
