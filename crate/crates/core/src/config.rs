//! TOML run configuration. A single file drives `fit`, `generate` and the
//! experiments; every section is optional and falls back to documented
//! defaults. Relative paths are resolved against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{CsvSchema, CvConfig, FeatureLaw, GroupSpec, SyntheticSpec};
use crate::error::{Error, Result};
use crate::oracle::{AnalyticGroup, AnalyticGroupModel, GroupLaw};
use crate::postprocess::DEFAULT_SIGMA;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub fit: Option<FitConfig>,
    pub generate: Option<GenerateConfig>,
    pub experiments: ExperimentsConfig,
}

/// Base model choice. A missing hyperparameter is selected by cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Ridge {
        lambda: Option<f64>,
    },
    Knn {
        k: Option<usize>,
        #[serde(default = "one")]
        group_scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Ridge { lambda: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Labeled training CSV.
    pub train: PathBuf,
    /// Unlabeled CSV for the post-processor. Without it the training file is
    /// split in half (stratified): one half fits the base model, the other
    /// half, labels dropped, fits the post-processor.
    pub unlabeled: Option<PathBuf>,
    pub schema: CsvSchema,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub cv: CvConfig,
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}

/// Synthetic CSV generation: train/unlabeled/test files from one spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub spec: SyntheticSpec,
    pub n_train: usize,
    #[serde(default)]
    pub n_unlabeled: usize,
    #[serde(default)]
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentsConfig {
    pub barycenter_oracle: BarycenterOracleConfig,
    pub gaussian_oracle: GaussianOracleConfig,
    pub fairness_bound: FairnessBoundConfig,
    pub rate: RateConfig,
    pub fairness_accuracy: FairnessAccuracyConfig,
    pub dkw: DkwConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarycenterOracleConfig {
    pub w2_pairs: usize,
    pub w2_max_atoms: usize,
    pub w2_tolerance: f64,
    pub instances: usize,
    pub max_measures: usize,
    pub max_atoms: usize,
    pub candidates: usize,
    /// Slack multiplier `c` in `c * range^2 / grid`.
    pub slack: f64,
}

impl Default for BarycenterOracleConfig {
    fn default() -> Self {
        Self {
            w2_pairs: 500,
            w2_max_atoms: 7,
            w2_tolerance: 1e-9,
            instances: 100,
            max_measures: 4,
            max_atoms: 6,
            candidates: 10_000,
            slack: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianOracleConfig {
    pub probes: usize,
    pub closed_form_tolerance: f64,
    pub decomposition_tolerance: f64,
}

impl Default for GaussianOracleConfig {
    fn default() -> Self {
        Self {
            probes: 10_000,
            closed_form_tolerance: 1e-8,
            decomposition_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FairnessBoundConfig {
    pub spec: SyntheticSpec,
    pub lambda: f64,
    pub n_train: usize,
    /// Minority unlabeled sizes `N`; the other group gets `size_ratio * N`.
    pub sizes: Vec<usize>,
    pub size_ratio: usize,
    pub replications: usize,
    /// Fresh rows per group used to estimate the conditional law of the output.
    pub n_eval: usize,
    pub se_multiplier: f64,
    /// Equal-size marginal test.
    pub marginal_size: usize,
    pub marginal_replications: usize,
    pub marginal_alpha: f64,
    pub sigma: f64,
}

impl Default for FairnessBoundConfig {
    fn default() -> Self {
        Self {
            spec: SyntheticSpec::default(),
            lambda: 0.01,
            n_train: 400,
            sizes: vec![50, 200, 800],
            size_ratio: 2,
            replications: 50,
            n_eval: 5000,
            se_multiplier: 3.0,
            marginal_size: 200,
            marginal_replications: 200,
            marginal_alpha: 0.01,
            sigma: DEFAULT_SIGMA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    pub model: AnalyticGroupModel,
    pub sizes: Vec<usize>,
    pub seeds: usize,
    pub n_eval: usize,
    pub slope_range: (f64, f64),
    pub sigma: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            model: AnalyticGroupModel {
                groups: vec![
                    AnalyticGroup {
                        name: "minority".into(),
                        weight: 0.35,
                        law: GroupLaw::Gaussian { mean: 0.0, std: 1.0 },
                    },
                    AnalyticGroup {
                        name: "majority".into(),
                        weight: 0.65,
                        law: GroupLaw::Gaussian { mean: 1.5, std: 1.5 },
                    },
                ],
            },
            sizes: vec![250, 1000, 4000],
            seeds: 30,
            n_eval: 2000,
            slope_range: (-0.65, -0.35),
            sigma: DEFAULT_SIGMA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FairnessAccuracyConfig {
    pub spec: SyntheticSpec,
    pub lambda: f64,
    pub n_train: usize,
    pub n_unlabeled: usize,
    pub n_test: usize,
    pub seeds: usize,
    pub max_ks_ratio: f64,
    pub max_mse_ratio: f64,
    pub sigma: f64,
}

impl Default for FairnessAccuracyConfig {
    fn default() -> Self {
        Self {
            spec: biased_spec(),
            lambda: 0.01,
            n_train: 1000,
            n_unlabeled: 1000,
            n_test: 2000,
            seeds: 30,
            max_ks_ratio: 0.5,
            max_mse_ratio: 2.0,
            sigma: DEFAULT_SIGMA,
        }
    }
}

/// Two groups with identical feature laws and slopes, and an intercept gap of
/// three noise standard deviations. The minority share is 0.1: the fair
/// optimum then costs `p1 p2 gap^2 = 0.81 tau^2` over the unfair one.
pub fn biased_spec() -> SyntheticSpec {
    let law = FeatureLaw {
        mean: vec![0.0, 0.0],
        std: vec![1.0, 1.0],
    };
    SyntheticSpec {
        seed: 0,
        noise_std: 1.0,
        groups: vec![
            GroupSpec {
                name: "minority".into(),
                weight: 0.1,
                features: law.clone(),
                beta: vec![1.0, 0.5],
                intercept: 0.0,
            },
            GroupSpec {
                name: "majority".into(),
                weight: 0.9,
                features: law,
                beta: vec![1.0, 0.5],
                intercept: 3.0,
            },
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DkwConfig {
    pub trials: usize,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub max_exceed_rate: f64,
}

impl Default for DkwConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            n: 500,
            m: 500,
            alpha: 0.001,
            max_exceed_rate: 0.005,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config; relative paths are rebased on its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if let (Some(fit), Some(dir)) = (config.fit.as_mut(), path.parent()) {
            fit.train = dir.join(&fit.train);
            fit.unlabeled = fit.unlabeled.as_ref().map(|u| dir.join(u));
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(fit) = &self.fit {
            fit.cv.validate()?;
            if !(fit.sigma > 0.0 && fit.sigma.is_finite()) {
                return Err(Error::Config(format!("sigma must be positive, got {}", fit.sigma)));
            }
            match fit.model {
                ModelConfig::Ridge { lambda: Some(l) } if !(l >= 0.0 && l.is_finite()) => {
                    return Err(Error::Config(format!("lambda must be nonnegative, got {l}")));
                }
                ModelConfig::Knn { k: Some(0), .. } => return Err(Error::Config("k must be positive".into())),
                _ => {}
            }
            if fit.schema.label.is_none() {
                return Err(Error::Config("fit.schema.label is required".into()));
            }
        }
        if let Some(g) = &self.generate {
            g.spec.validate()?;
            if g.n_train == 0 {
                return Err(Error::Config("generate.n_train must be positive".into()));
            }
        }
        let e = &self.experiments;
        e.fairness_bound.spec.validate()?;
        e.fairness_accuracy.spec.validate()?;
        e.rate.model.validate()?;
        if e.rate.sizes.len() < 2 {
            return Err(Error::Config("rate.sizes needs at least two sizes".into()));
        }
        if e.fairness_bound.size_ratio == 0 || e.fairness_bound.sizes.contains(&0) {
            return Err(Error::Config("fairness_bound sizes must be positive".into()));
        }
        if e.barycenter_oracle.w2_max_atoms > 9 {
            // the permutation oracle enumerates m! pairings
            return Err(Error::Config("barycenter_oracle.w2_max_atoms is capped at 9".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::from_toml("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.experiments.rate.sizes, vec![250, 1000, 4000]);
    }

    #[test]
    fn fit_section() {
        let c = Config::from_toml(
            r#"
seed = 3
[fit]
train = "train.csv"
sigma = 1e-4
schema = { features = ["x0", "x1"], group = "g", label = "y" }
model = { kind = "knn", k = 5 }
[fit.cv]
folds = 4
"#,
        )
        .unwrap();
        let fit = c.fit.unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(fit.model, ModelConfig::Knn { k: Some(5), group_scale: 1.0 });
        assert_eq!(fit.cv.folds, 4);
        assert_eq!(fit.cv.mse_slack, 0.10);
    }

    #[test]
    fn analytic_model_from_toml() {
        let c = Config::from_toml(
            r#"
[experiments.rate]
sizes = [100, 400]
[[experiments.rate.model.groups]]
name = "a"
weight = 0.5
law = "uniform"
low = 0.0
high = 2.0
[[experiments.rate.model.groups]]
name = "b"
weight = 0.5
law = "gaussian"
mean = 1.0
std = 0.5
"#,
        )
        .unwrap();
        assert_eq!(c.experiments.rate.model.groups[0].law, GroupLaw::Uniform { low: 0.0, high: 2.0 });
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(Config::from_toml("bogus = 1").is_err());
        assert!(Config::from_toml("[experiments.rate]\nsizes = [10]").is_err());
        let bad_lambda = r#"
[fit]
train = "t.csv"
schema = { features = ["x"], group = "g", label = "y" }
model = { kind = "ridge", lambda = -1.0 }
"#;
        assert!(matches!(Config::from_toml(bad_lambda), Err(Error::Config(_))));
    }

    #[test]
    fn default_config_round_trips_through_toml() {
        let text = toml::to_string(&Config::default()).unwrap();
        assert_eq!(Config::from_toml(&text).unwrap(), Config::default());
    }
}
