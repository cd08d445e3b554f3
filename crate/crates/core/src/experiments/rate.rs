//! Convergence rate of the post-processed exact regression function to the
//! analytic fair optimum. With no base-model error the mean absolute gap
//! should shrink like `N^{-1/2}` in the unlabeled sample size.

use rayon::prelude::*;

use super::{mean_se, ols_slope, rep_seed, Check, ExperimentName, ExperimentReport, Table};
use crate::config::RateConfig;
use crate::error::Result;
use crate::postprocess::{FairPostprocessor, PostprocessConfig};
use crate::rng::{derive_seed, stream, Domain};

/// `E|g_hat - g*|` for one unlabeled sample of size `n`.
fn one_run(cfg: &RateConfig, seed: u64, n: usize) -> Result<f64> {
    let model = &cfg.model;
    let mut rng = stream(seed, Domain::Unlabeled, 0);
    let mut counts = vec![0usize; model.groups.len()];
    for _ in 0..n {
        counts[model.sample_group(&mut rng).index()] += 1;
    }
    let unlabeled = model.sample_with_counts(&counts, &mut rng)?;
    let post = FairPostprocessor::fit(
        model,
        &unlabeled,
        None,
        PostprocessConfig {
            sigma: cfg.sigma,
            seed: derive_seed(seed, Domain::Predict, 0),
        },
    )?;
    let mut rng = stream(seed, Domain::Evaluation, 0);
    let mut total = 0.0;
    for i in 0..cfg.n_eval {
        let s = model.sample_group(&mut rng);
        let x = model.sample_feature(s, &mut rng)?;
        let fair = post.transform_row(model, &[x], s, i as u64)?;
        total += (fair - model.g_star(x, s)?).abs();
    }
    Ok(total / cfg.n_eval as f64)
}

pub fn run(cfg: &RateConfig, seed: u64) -> Result<ExperimentReport> {
    let mut summary = Table::new("rate", &["n", "mean_abs_error", "se"]);
    let mut raw = Table::new("replications", &["n", "seed_index", "mean_abs_error"]);
    let mut log_n = Vec::new();
    let mut log_err = Vec::new();
    for (k, &n) in cfg.sizes.iter().enumerate() {
        let errs = (0..cfg.seeds as u64)
            .into_par_iter()
            .map(|j| one_run(cfg, rep_seed(seed, k as u64, j), n))
            .collect::<Result<Vec<_>>>()?;
        for (j, e) in errs.iter().enumerate() {
            raw.push(vec![n as f64, j as f64, *e]);
        }
        let (mean, se) = mean_se(&errs);
        summary.push(vec![n as f64, mean, se]);
        log_n.push((n as f64).ln());
        log_err.push(mean.ln());
    }
    let slope = ols_slope(&log_n, &log_err);
    let (lo, hi) = cfg.slope_range;
    let detail = format!("log-log slope of mean |g_hat - g_star| against N, accepted in [{lo}, {hi}]");
    let checks = vec![
        Check::at_most("rate-slope-upper", slope, hi, detail.clone()),
        Check::at_most("rate-slope-lower", -slope, -lo, detail),
    ];
    Ok(ExperimentReport::new(ExperimentName::Rate, seed, checks, vec![summary, raw]))
}
