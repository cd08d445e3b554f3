//! Two-step k-fold model selection: shortlist by MSE, then pick the fairest.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GroupId, GroupedDataset};
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    /// Relative MSE slack of the shortlist: keep points with `mse <= (1 + slack) * best`.
    pub mse_slack: f64,
    pub lambdas: Vec<f64>,
    pub neighbors: Vec<usize>,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            mse_slack: 0.10,
            lambdas: lambda_grid(),
            neighbors: vec![1, 3, 5, 9, 15, 25],
            seed: 0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds = {} must be >= 2", self.folds)));
        }
        if self.mse_slack.is_nan() || self.mse_slack < 0.0 {
            return Err(Error::Config(format!("mse_slack = {} must be >= 0", self.mse_slack)));
        }
        Ok(())
    }
}

/// `10^{-4.5}, 10^{-3.5}, ..., 10^{2.5}` and `10^3`.
pub fn lambda_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..8).map(|i| 10f64.powf(-4.5 + i as f64)).collect();
    grid.push(1e3);
    grid
}

/// Fold id of every row. Each group is shuffled on its own stream and dealt
/// round-robin, so every fold sees every group.
pub fn stratified_folds(data: &GroupedDataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("folds = {folds} must be >= 2")));
    }
    let mut assignment = vec![0; data.len()];
    for (g, mut idx) in data.indices_by_group().into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        if idx.len() < folds {
            return Err(Error::GroupTooSmall {
                group: GroupId(g as u32),
                size: idx.len(),
                needed: folds,
            });
        }
        idx.shuffle(&mut stream(seed, Domain::Folds, g as u64));
        for (k, i) in idx.into_iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    Ok(assignment)
}

/// Cross-validated mean scores of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub mse: f64,
    pub ks_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection<H> {
    pub index: usize,
    pub params: H,
    pub scores: Vec<CvScore>,
    pub shortlist: Vec<usize>,
}

/// Grid points whose MSE is within the relative slack of the best one.
pub fn shortlist(scores: &[CvScore], slack: f64) -> Vec<usize> {
    let best = scores.iter().map(|s| s.mse).fold(f64::INFINITY, f64::min);
    let limit = best * (1.0 + slack);
    (0..scores.len()).filter(|&i| scores[i].mse <= limit).collect()
}

/// The shortlisted point with the lowest KS; ties go to the lower MSE, then
/// to the earlier grid position.
pub fn two_step_select(scores: &[CvScore], slack: f64) -> Option<usize> {
    shortlist(scores, slack).into_iter().min_by(|&a, &b| {
        scores[a]
            .ks_max
            .total_cmp(&scores[b].ks_max)
            .then(scores[a].mse.total_cmp(&scores[b].mse))
            .then(a.cmp(&b))
    })
}

/// Runs `pipeline(params, train_fold, validation_fold, fold)` for every grid
/// point and fold, averages MSE and KS over folds (KS on the validation
/// folds), and applies [`two_step_select`].
pub fn select_hyperparams<H, F>(grid: &[H], data: &GroupedDataset, cv: &CvConfig, pipeline: F) -> Result<Selection<H>>
where
    H: Clone + Sync,
    F: Fn(&H, &GroupedDataset, &GroupedDataset, usize) -> Result<EvalReport> + Sync,
{
    cv.validate()?;
    if grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let assignment = stratified_folds(data, cv.folds, cv.seed)?;
    let splits: Vec<(GroupedDataset, GroupedDataset)> = (0..cv.folds)
        .map(|k| {
            let (valid, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| assignment[i] == k);
            (data.subset(&train), data.subset(&valid))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..cv.folds).map(move |k| (g, k)))
        .collect();
    let reports = jobs
        .par_iter()
        .map(|&(g, k)| pipeline(&grid[g], &splits[k].0, &splits[k].1, k))
        .collect::<Result<Vec<_>>>()?;

    let scores: Vec<CvScore> = reports
        .chunks(cv.folds)
        .map(|fold_reports| {
            let n = fold_reports.len() as f64;
            CvScore {
                mse: fold_reports.iter().map(|r| r.mse).sum::<f64>() / n,
                ks_max: fold_reports.iter().map(|r| r.ks_max).sum::<f64>() / n,
            }
        })
        .collect();
    let index = two_step_select(&scores, cv.mse_slack).expect("grid is nonempty");
    Ok(Selection {
        index,
        params: grid[index].clone(),
        shortlist: shortlist(&scores, cv.mse_slack),
        scores,
    })
}
