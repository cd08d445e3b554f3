//! Grouped datasets and everything that produces or partitions them.

mod csv_io;
mod cv;
mod split;
mod synthetic;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, read_csv, write_csv, CsvSchema};
pub use cv::{
    lambda_grid, select_hyperparams, shortlist, stratified_folds, two_step_select, CvConfig, CvScore,
    Selection,
};
pub use split::train_test_split;
pub use synthetic::{generate_synthetic, generate_with_counts, FeatureLaw, GroupSpec, SyntheticSpec};

/// Dense id of a sensitive group; indexes [`GroupedDataset::group_names`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(pub u32);

impl GroupId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Stable identifier, preserved by splits; keys prediction-time noise.
    pub id: u64,
    pub x: Vec<f64>,
    pub s: GroupId,
    pub y: Option<f64>,
}

/// Rows of `(x, s, y?)` sharing a feature dimension and a group vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    dim: usize,
    group_names: Vec<String>,
    rows: Vec<Row>,
}

impl GroupedDataset {
    pub fn new(dim: usize, group_names: Vec<String>, rows: Vec<Row>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invariant("feature dimension must be positive".into()));
        }
        let labeled = rows.first().map(|r| r.y.is_some());
        for r in &rows {
            if r.x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.x.len(),
                });
            }
            if r.s.index() >= group_names.len() {
                return Err(Error::UnknownGroup(r.s));
            }
            if Some(r.y.is_some()) != labeled {
                return Err(Error::Invariant("labels must be all present or all absent".into()));
            }
            if let Some(v) = r.x.iter().chain(r.y.iter()).find(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: "dataset row",
                    value: *v,
                });
            }
        }
        Ok(Self {
            dim,
            group_names,
            rows,
        })
    }

    pub fn empty_like(&self) -> Self {
        Self {
            dim: self.dim,
            group_names: self.group_names.clone(),
            rows: Vec::new(),
        }
    }

    /// Same schema, different rows. Rows are assumed to come from `self`.
    pub(crate) fn with_rows(&self, rows: Vec<Row>) -> Self {
        Self {
            dim: self.dim,
            group_names: self.group_names.clone(),
            rows,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn n_groups(&self) -> usize {
        self.group_names.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        self.rows.first().is_some_and(|r| r.y.is_some())
    }

    pub fn labels(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.y).collect()
    }

    pub fn group_of(&self, name: &str) -> Option<GroupId> {
        self.group_names
            .iter()
            .position(|g| g == name)
            .map(|i| GroupId(i as u32))
    }

    /// Row indices per group id, in row order.
    pub fn indices_by_group(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_groups()];
        for (i, r) in self.rows.iter().enumerate() {
            out[r.s.index()].push(i);
        }
        out
    }

    pub fn group_counts(&self) -> BTreeMap<String, usize> {
        let mut counts: BTreeMap<String, usize> =
            self.group_names.iter().map(|g| (g.clone(), 0)).collect();
        for r in &self.rows {
            *counts.get_mut(&self.group_names[r.s.index()]).unwrap() += 1;
        }
        counts
    }

    pub fn without_labels(&self) -> Self {
        self.with_rows(
            self.rows
                .iter()
                .map(|r| Row { y: None, ..r.clone() })
                .collect(),
        )
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        self.with_rows(indices.iter().map(|&i| self.rows[i].clone()).collect())
    }

    /// Group labels of every row: the default attribute sample.
    pub fn group_sample(&self) -> Vec<GroupId> {
        self.rows.iter().map(|r| r.s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: u64, x: f64, s: u32, y: Option<f64>) -> Row {
        Row {
            id,
            x: vec![x],
            s: GroupId(s),
            y,
        }
    }

    #[test]
    fn invariants_are_enforced() {
        let names = vec!["a".to_string(), "b".to_string()];
        assert!(GroupedDataset::new(1, names.clone(), vec![row(0, 1.0, 0, Some(1.0))]).is_ok());
        assert!(matches!(
            GroupedDataset::new(1, names.clone(), vec![row(0, 1.0, 2, None)]),
            Err(Error::UnknownGroup(_))
        ));
        assert!(matches!(
            GroupedDataset::new(2, names.clone(), vec![row(0, 1.0, 0, None)]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            GroupedDataset::new(1, names, vec![row(0, 1.0, 0, None), row(1, 1.0, 1, Some(2.0))]),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn grouping_helpers() {
        let names = vec!["a".to_string(), "b".to_string()];
        let d = GroupedDataset::new(
            1,
            names,
            vec![row(0, 1.0, 1, Some(1.0)), row(1, 2.0, 0, Some(2.0)), row(2, 3.0, 1, Some(3.0))],
        )
        .unwrap();
        assert_eq!(d.indices_by_group(), vec![vec![1], vec![0, 2]]);
        assert_eq!(d.group_counts()["b"], 2);
        assert_eq!(d.group_of("b"), Some(GroupId(1)));
        assert!(!d.without_labels().is_labeled());
        assert_eq!(d.labels(), Some(vec![1.0, 2.0, 3.0]));
    }
}
