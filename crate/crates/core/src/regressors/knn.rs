use serde::{Deserialize, Serialize};

use super::{check_dim, Regressor, Standardizer};
use crate::data::{GroupId, GroupedDataset};
use crate::error::{Error, Result};

/// k-nearest-neighbour average in standardized feature space. Points of a
/// different group sit `group_scale * sqrt(2)` further away (a scaled one-hot
/// block), so the sensitive attribute enters the neighbourhood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub group_scale: f64,
    pub n_groups: usize,
    pub standardizer: Standardizer,
    points: Vec<Vec<f64>>,
    groups: Vec<GroupId>,
    labels: Vec<f64>,
}

pub fn fit_knn(data: &GroupedDataset, k: usize, group_scale: f64) -> Result<KnnModel> {
    if k == 0 || k > data.len() {
        return Err(Error::Domain {
            what: "k",
            value: k as f64,
        });
    }
    if !(group_scale >= 0.0 && group_scale.is_finite()) {
        return Err(Error::Domain {
            what: "group_scale",
            value: group_scale,
        });
    }
    let labels = data
        .labels()
        .ok_or_else(|| Error::Invariant("k-NN needs a labeled dataset".into()))?;
    let standardizer = Standardizer::fit(data);
    Ok(KnnModel {
        k,
        group_scale,
        n_groups: data.n_groups(),
        points: data.rows().iter().map(|r| standardizer.apply(&r.x)).collect(),
        groups: data.rows().iter().map(|r| r.s).collect(),
        labels,
        standardizer,
    })
}

impl Regressor for KnnModel {
    fn dim(&self) -> usize {
        self.standardizer.mean.len()
    }

    fn predict(&self, x: &[f64], s: GroupId) -> Result<f64> {
        check_dim(self.dim(), x)?;
        if s.index() >= self.n_groups {
            return Err(Error::UnknownGroup(s));
        }
        let z = self.standardizer.apply(x);
        let penalty = 2.0 * self.group_scale * self.group_scale;
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .zip(&self.groups)
            .enumerate()
            .map(|(i, (p, &g))| {
                let d2: f64 = p.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
                (if g == s { d2 } else { d2 + penalty }, i)
            })
            .collect();
        // equal distances go to the lower training index
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, order);
        }
        let sum: f64 = dist[..self.k].iter().map(|&(_, i)| self.labels[i]).sum();
        Ok(sum / self.k as f64)
    }
}
