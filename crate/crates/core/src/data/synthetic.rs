use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GroupId, GroupedDataset, Row};
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// Independent Gaussian coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLaw {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub weight: f64,
    pub features: FeatureLaw,
    pub beta: Vec<f64>,
    pub intercept: f64,
}

/// Linear-Gaussian model `Y = beta_s . X + m_s + tau * N(0, 1)` with
/// `X | S = s ~ features_s` and `S ~ weights`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Seed of [`generate_synthetic`]; the CLI derives its own from the run seed.
    #[serde(default)]
    pub seed: u64,
    pub noise_std: f64,
    pub groups: Vec<GroupSpec>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let law = FeatureLaw {
            mean: vec![0.0, 0.0],
            std: vec![1.0, 1.0],
        };
        Self {
            seed: 0,
            noise_std: 1.0,
            groups: vec![
                GroupSpec {
                    name: "minority".into(),
                    weight: 0.35,
                    features: law.clone(),
                    beta: vec![1.0, 0.5],
                    intercept: 0.0,
                },
                GroupSpec {
                    name: "majority".into(),
                    weight: 0.65,
                    features: law,
                    beta: vec![1.0, 0.5],
                    intercept: 1.5,
                },
            ],
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::Config("synthetic spec has no groups".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!("noise_std = {} must be >= 0", self.noise_std)));
        }
        let weights: Vec<f64> = self.groups.iter().map(|g| g.weight).collect();
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::Config("group weights must be positive".into()));
        }
        crate::transport::check_simplex(&weights)
            .map_err(|_| Error::Config("group weights must sum to 1".into()))?;
        let d = self.dim();
        for g in &self.groups {
            if d == 0 || g.beta.len() != d || g.features.mean.len() != d || g.features.std.len() != d {
                return Err(Error::Config(format!("group {:?} has inconsistent dimensions", g.name)));
            }
            if g.features.std.iter().any(|&s| s < 0.0) {
                return Err(Error::Config(format!("group {:?} has a negative feature std", g.name)));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.groups[0].beta.len()
    }

    pub fn group_names(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.name.clone()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.weight).collect()
    }

    /// The regression function `f*(x, s) = beta_s . x + m_s`.
    pub fn regression(&self, x: &[f64], s: GroupId) -> f64 {
        let g = &self.groups[s.index()];
        g.beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>() + g.intercept
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    fn draw_group<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupId {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, g) in self.groups.iter().enumerate() {
            acc += g.weight;
            if u < acc {
                return GroupId(i as u32);
            }
        }
        GroupId(self.groups.len() as u32 - 1)
    }

    pub(crate) fn draw_features<R: Rng + ?Sized>(&self, s: GroupId, rng: &mut R) -> Vec<f64> {
        let law = &self.groups[s.index()].features;
        law.mean
            .iter()
            .zip(&law.std)
            .map(|(m, sd)| m + sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn draw_label<R: Rng + ?Sized>(&self, x: &[f64], s: GroupId, rng: &mut R) -> f64 {
        self.regression(x, s) + self.noise_std * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Draws `n` labeled rows. Row `i` uses its own stream, so a larger `n`
/// extends a smaller draw rather than replacing it.
pub fn generate_synthetic(spec: &SyntheticSpec, n: usize) -> Result<GroupedDataset> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let rows = (0..n as u64)
        .map(|id| {
            let mut rng = stream(spec.seed, Domain::Synthetic, id);
            let s = spec.draw_group(&mut rng);
            let x = spec.draw_features(s, &mut rng);
            let y = spec.draw_label(&x, s, &mut rng);
            Row { id, x, s, y: Some(y) }
        })
        .collect();
    GroupedDataset::new(spec.dim(), spec.group_names(), rows)
}

/// Draws exactly `counts[s]` labeled rows for each group `s`, in group order.
pub fn generate_with_counts(spec: &SyntheticSpec, counts: &[usize]) -> Result<GroupedDataset> {
    spec.validate()?;
    if counts.len() != spec.groups.len() {
        return Err(Error::LengthMismatch {
            left: counts.len(),
            right: spec.groups.len(),
        });
    }
    let mut rows = Vec::with_capacity(counts.iter().sum());
    for (g, &count) in counts.iter().enumerate() {
        let s = GroupId(g as u32);
        for _ in 0..count {
            let id = rows.len() as u64;
            let mut rng = stream(spec.seed, Domain::Unlabeled, id);
            let x = spec.draw_features(s, &mut rng);
            let y = spec.draw_label(&x, s, &mut rng);
            rows.push(Row { id, x, s, y: Some(y) });
        }
    }
    GroupedDataset::new(spec.dim(), spec.group_names(), rows)
}
