//! Fairness against accuracy on a strongly biased synthetic population:
//! post-processing should cut the KS unfairness by more than it inflates
//! the test error.

use rayon::prelude::*;

use super::{rep_seed, Check, ExperimentName, ExperimentReport, Table};
use crate::config::FairnessAccuracyConfig;
use crate::data::generate_synthetic;
use crate::error::Result;
use crate::metrics::report;
use crate::postprocess::{FairPostprocessor, PostprocessConfig};
use crate::regressors::{fit_ridge, Regressor};
use crate::rng::{derive_seed, Domain};

/// `[mse_unfair, ks_unfair, mse_fair, ks_fair]` for one seed.
fn one_seed(cfg: &FairnessAccuracyConfig, seed: u64) -> Result<[f64; 4]> {
    let draw = |tag: u64, n: usize| generate_synthetic(&cfg.spec.with_seed(derive_seed(seed, Domain::Synthetic, tag)), n);
    let train = draw(0, cfg.n_train)?;
    let unlabeled = draw(1, cfg.n_unlabeled)?.without_labels();
    let test = draw(2, cfg.n_test)?;
    let base = fit_ridge(&train, cfg.lambda)?;
    let post = FairPostprocessor::fit(
        &base,
        &unlabeled,
        None,
        PostprocessConfig {
            sigma: cfg.sigma,
            seed: derive_seed(seed, Domain::Predict, 0),
        },
    )?;
    let labels = test.labels().expect("synthetic rows are labeled");
    let unfair = report(&base.predict_all(&test)?, &labels, &test)?;
    let fair = report(&post.transform_batch(&base, &test)?, &labels, &test)?;
    Ok([unfair.mse, unfair.ks_max, fair.mse, fair.ks_max])
}

pub fn run(cfg: &FairnessAccuracyConfig, seed: u64) -> Result<ExperimentReport> {
    let runs = (0..cfg.seeds as u64)
        .into_par_iter()
        .map(|j| one_seed(cfg, rep_seed(seed, 1, j)))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new("seeds", &["seed_index", "mse_unfair", "ks_unfair", "mse_fair", "ks_fair"]);
    let mut mean = [0.0; 4];
    for (j, r) in runs.iter().enumerate() {
        let mut row = vec![j as f64];
        row.extend_from_slice(r);
        table.push(row);
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / runs.len() as f64;
        }
    }
    let [mse_f, ks_f, mse_g, ks_g] = mean;
    let checks = vec![
        Check::at_most(
            "ks-reduction",
            ks_g,
            cfg.max_ks_ratio * ks_f,
            format!("mean ks_max fair vs {} x mean ks_max unfair ({ks_f:.5})", cfg.max_ks_ratio),
        ),
        Check::at_most(
            "mse-inflation",
            mse_g,
            cfg.max_mse_ratio * mse_f,
            format!("mean MSE fair vs {} x mean MSE unfair ({mse_f:.5})", cfg.max_mse_ratio),
        ),
    ];
    Ok(ExperimentReport::new(ExperimentName::FairnessAccuracy, seed, checks, vec![table]))
}
