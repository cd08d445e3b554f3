//! Accuracy and unfairness metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{GroupedDataset, Row};
use crate::error::{Error, Result};

/// Mean squared residual.
pub fn mse(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = predictions.iter().zip(labels).map(|(p, y)| (y - p) * (y - p)).sum();
    Ok(sum / predictions.len() as f64)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_t |F_a(t) - F_b(t)|`,
/// evaluated exactly at every jump of either empirical CDF.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    Ok(ks_sorted(&a, &b))
}

/// As [`ks_two_sample`] for inputs that are already sorted.
pub fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / n - j as f64 / m).abs());
    }
    // once one sample is exhausted its CDF is 1; the gap is largest right here
    sup.max((i as f64 / n - j as f64 / m).abs())
}

/// Two-sample DKW envelope `sqrt(ln(2 / alpha) / 2 * (1/n + 1/m))`: the KS
/// level exceeded with probability about `alpha` under a common law.
pub fn dkw_two_sample_envelope(n: usize, m: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / 2.0 * (1.0 / n as f64 + 1.0 / m as f64)).sqrt()
}

/// One-sample DKW band `sqrt(ln(2 / alpha) / (2 n))`.
pub fn dkw_envelope(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Test-set statistics of one predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mse: f64,
    pub group_names: Vec<String>,
    /// Symmetric, zero diagonal; `None` where a group has no test rows.
    pub ks_pairwise: Vec<Vec<Option<f64>>>,
    /// Largest defined pairwise entry.
    pub ks_max: f64,
    pub per_group_counts: BTreeMap<String, usize>,
    /// Number of unordered pairs whose KS is undefined.
    pub undefined_pairs: usize,
}

impl EvalReport {
    #[cfg(test)]
    pub(crate) fn from_parts(mse: f64, ks_max: f64) -> Self {
        Self {
            mse,
            group_names: Vec::new(),
            ks_pairwise: Vec::new(),
            ks_max,
            per_group_counts: BTreeMap::new(),
            undefined_pairs: 0,
        }
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["mse".to_string(), "ks_max".into(), "undefined_pairs".into()];
        h.extend(self.group_names.iter().map(|g| format!("count_{g}")));
        for (a, ga) in self.group_names.iter().enumerate() {
            for gb in &self.group_names[a + 1..] {
                h.push(format!("ks_{ga}_{gb}"));
            }
        }
        h
    }

    /// Flat row matching [`EvalReport::csv_header`]; undefined KS entries are empty.
    pub fn csv_row(&self) -> Vec<String> {
        let mut r = vec![
            self.mse.to_string(),
            self.ks_max.to_string(),
            self.undefined_pairs.to_string(),
        ];
        r.extend(self.group_names.iter().map(|g| self.per_group_counts[g].to_string()));
        for a in 0..self.group_names.len() {
            for b in a + 1..self.group_names.len() {
                r.push(self.ks_pairwise[a][b].map_or_else(String::new, |v| v.to_string()));
            }
        }
        r
    }
}

/// Evaluates `g` on every row of a labeled test set.
pub fn evaluate<F>(mut g: F, test: &GroupedDataset) -> Result<EvalReport>
where
    F: FnMut(&Row) -> Result<f64>,
{
    if test.is_empty() {
        return Err(Error::EmptyInput);
    }
    let labels = test
        .labels()
        .ok_or_else(|| Error::Invariant("evaluation requires a labeled test set".into()))?;
    let preds = test.rows().iter().map(&mut g).collect::<Result<Vec<_>>>()?;
    report(&preds, &labels, test)
}

/// Builds the report from precomputed predictions aligned with `test` rows.
pub fn report(preds: &[f64], labels: &[f64], test: &GroupedDataset) -> Result<EvalReport> {
    if preds.len() != test.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: test.len(),
        });
    }
    let mse = mse(preds, labels)?;
    let k = test.n_groups();
    let mut by_group: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (p, r) in preds.iter().zip(test.rows()) {
        by_group[r.s.index()].push(*p);
    }
    for g in &mut by_group {
        g.sort_unstable_by(f64::total_cmp);
    }
    let mut ks_pairwise = vec![vec![Some(0.0); k]; k];
    let mut ks_max: f64 = 0.0;
    let mut undefined_pairs = 0;
    for a in 0..k {
        if by_group[a].is_empty() {
            ks_pairwise[a][a] = None;
        }
        for b in a + 1..k {
            let entry = if by_group[a].is_empty() || by_group[b].is_empty() {
                undefined_pairs += 1;
                None
            } else {
                let v = ks_sorted(&by_group[a], &by_group[b]);
                ks_max = ks_max.max(v);
                Some(v)
            };
            ks_pairwise[a][b] = entry;
            ks_pairwise[b][a] = entry;
        }
    }
    if undefined_pairs > 0 {
        log::warn!("{undefined_pairs} group pair(s) have no test rows; their KS is undefined");
    }
    Ok(EvalReport {
        mse,
        group_names: test.group_names().to_vec(),
        ks_pairwise,
        ks_max,
        per_group_counts: test.group_counts(),
        undefined_pairs,
    })
}
