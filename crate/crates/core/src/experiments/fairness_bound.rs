//! Distribution-free fairness of the post-processed ridge predictor.
//!
//! Conditional part: with unlabeled group sizes `N` and `r N`, the KS distance
//! between the groups' output laws, given the data, averages at most
//! `6 / sqrt(N + 1)`. The conditional laws are estimated from large fresh
//! samples, which can only inflate the KS estimate.
//!
//! Marginal part: with equal group sizes the output laws, averaged over the
//! data, coincide exactly. One fresh row per group is drawn from each of many
//! independent refits, and the pooled outputs are compared by a KS test.

use rayon::prelude::*;

use super::{mean_se, rep_seed, Check, ExperimentName, ExperimentReport, Table};
use crate::config::FairnessBoundConfig;
use crate::data::{generate_synthetic, generate_with_counts, GroupId, GroupedDataset};
use crate::error::{Error, Result};
use crate::metrics::{dkw_two_sample_envelope, ks_two_sample};
use crate::postprocess::{FairPostprocessor, PostprocessConfig};
use crate::regressors::{fit_ridge, RidgeModel};
use crate::rng::{derive_seed, Domain};

struct Fitted {
    base: RidgeModel,
    post: FairPostprocessor,
}

/// Fits ridge on a fresh training sample and the post-processor on fresh
/// unlabeled rows with the given per-group counts.
fn refit(cfg: &FairnessBoundConfig, seed: u64, unlabeled_counts: &[usize]) -> Result<Fitted> {
    let train = generate_synthetic(&cfg.spec.with_seed(derive_seed(seed, Domain::Synthetic, 0)), cfg.n_train)?;
    let base = fit_ridge(&train, cfg.lambda)?;
    let unlabeled = generate_with_counts(&cfg.spec.with_seed(derive_seed(seed, Domain::Unlabeled, 0)), unlabeled_counts)?
        .without_labels();
    let post = FairPostprocessor::fit(
        &base,
        &unlabeled,
        None,
        PostprocessConfig {
            sigma: cfg.sigma,
            seed: derive_seed(seed, Domain::Predict, 0),
        },
    )?;
    Ok(Fitted { base, post })
}

fn outputs_by_group(fitted: &Fitted, eval: &GroupedDataset) -> Result<Vec<Vec<f64>>> {
    let preds = fitted.post.transform_batch(&fitted.base, eval)?;
    let mut by_group = vec![Vec::new(); eval.n_groups()];
    for (p, r) in preds.into_iter().zip(eval.rows()) {
        by_group[r.s.index()].push(p);
    }
    Ok(by_group)
}

fn binary_counts(cfg: &FairnessBoundConfig, first: usize, second: usize) -> Result<Vec<usize>> {
    if cfg.spec.groups.len() != 2 {
        return Err(Error::NotBinary(cfg.spec.groups.len()));
    }
    Ok(vec![first, second])
}

pub fn run(cfg: &FairnessBoundConfig, seed: u64) -> Result<ExperimentReport> {
    let mut summary = Table::new("conditional", &["n_min", "n_max", "mean_ks", "se", "bound"]);
    let mut raw = Table::new("conditional_replications", &["n_min", "replication", "ks"]);
    let mut checks = Vec::new();
    for (k, &n) in cfg.sizes.iter().enumerate() {
        let counts = binary_counts(cfg, n, cfg.size_ratio * n)?;
        let eval_counts = binary_counts(cfg, cfg.n_eval, cfg.n_eval)?;
        let ks = (0..cfg.replications as u64)
            .into_par_iter()
            .map(|r| {
                let s = rep_seed(seed, 1 + k as u64, r);
                let fitted = refit(cfg, s, &counts)?;
                let eval = generate_with_counts(&cfg.spec.with_seed(derive_seed(s, Domain::Evaluation, 0)), &eval_counts)?;
                let g = outputs_by_group(&fitted, &eval)?;
                ks_two_sample(&g[0], &g[1])
            })
            .collect::<Result<Vec<_>>>()?;
        for (r, v) in ks.iter().enumerate() {
            raw.push(vec![n as f64, r as f64, *v]);
        }
        let (mean, se) = mean_se(&ks);
        let bound = 6.0 / ((n + 1) as f64).sqrt();
        summary.push(vec![n as f64, (cfg.size_ratio * n) as f64, mean, se, bound]);
        checks.push(Check::at_most(
            &format!("conditional-ks-n{n}"),
            mean,
            bound + cfg.se_multiplier * se,
            format!(
                "mean KS over {} replications, bound 6/sqrt(N+1) = {bound:.5} plus {} SE",
                cfg.replications, cfg.se_multiplier
            ),
        ));
    }

    let n = cfg.marginal_size;
    let counts = binary_counts(cfg, n, n)?;
    let pairs = (0..cfg.marginal_replications as u64)
        .into_par_iter()
        .map(|r| {
            let s = rep_seed(seed, 0, r);
            let fitted = refit(cfg, s, &counts)?;
            let eval = generate_with_counts(&cfg.spec.with_seed(derive_seed(s, Domain::Evaluation, 0)), &[1, 1])?;
            debug_assert_eq!(eval.rows()[0].s, GroupId(0));
            let g = outputs_by_group(&fitted, &eval)?;
            Ok((g[0][0], g[1][0]))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut marginal = Table::new("marginal", &["replication", "output_group0", "output_group1"]);
    for (r, (a, b)) in pairs.iter().enumerate() {
        marginal.push(vec![r as f64, *a, *b]);
    }
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let stat = ks_two_sample(&a, &b)?;
    let critical = dkw_two_sample_envelope(a.len(), b.len(), cfg.marginal_alpha);
    checks.push(Check::at_most(
        "marginal-ks-equal-sizes",
        stat,
        critical,
        format!(
            "pooled KS over {} refits with N = {n} per group, critical value at level {}",
            cfg.marginal_replications, cfg.marginal_alpha
        ),
    ));

    Ok(ExperimentReport::new(
        ExperimentName::FairnessBound,
        seed,
        checks,
        vec![summary, raw, marginal],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let cfg = FairnessBoundConfig {
            sizes: vec![30, 120],
            replications: 8,
            n_eval: 500,
            marginal_size: 40,
            marginal_replications: 60,
            ..Default::default()
        };
        let report = run(&cfg, 5).unwrap();
        assert!(report.passed, "{:#?}", report.checks);
        assert_eq!(report.tables[1].rows.len(), 16);
    }

    #[test]
    fn needs_two_groups() {
        let mut cfg = FairnessBoundConfig::default();
        cfg.spec.groups.pop();
        cfg.spec.groups[0].weight = 1.0;
        assert!(matches!(run(&cfg, 0), Err(Error::NotBinary(1))));
    }
}
