//! Coverage of the Dvoretzky-Kiefer-Wolfowitz bands: how often same-law KS
//! statistics leave the `1 - alpha` envelope.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{rep_seed, Check, ExperimentName, ExperimentReport, Table};
use crate::config::DkwConfig;
use crate::error::Result;
use crate::metrics::{dkw_envelope, dkw_two_sample_envelope, ks_two_sample};
use crate::oracle::std_normal_cdf;
use crate::rng::{stream, Domain};

/// `sup_t |F_n(t) - Phi(t)|` of a sample against the standard normal.
fn ks_normal(mut sample: Vec<f64>) -> f64 {
    sample.sort_unstable_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = std_normal_cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn run(cfg: &DkwConfig, seed: u64) -> Result<ExperimentReport> {
    let stats = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(rep_seed(seed, 1, t), Domain::Replication, 0);
            let a: Vec<f64> = (0..cfg.n).map(|_| rng.sample(StandardNormal)).collect();
            let b: Vec<f64> = (0..cfg.m).map(|_| rng.sample(StandardNormal)).collect();
            let two = ks_two_sample(&a, &b)?;
            Ok((two, ks_normal(a)))
        })
        .collect::<Result<Vec<_>>>()?;
    let env2 = dkw_two_sample_envelope(cfg.n, cfg.m, cfg.alpha);
    let env1 = dkw_envelope(cfg.n, cfg.alpha);
    let mut table = Table::new("trials", &["trial", "ks_two_sample", "ks_one_sample"]);
    let (mut out2, mut out1) = (0usize, 0usize);
    for (t, &(two, one)) in stats.iter().enumerate() {
        out2 += usize::from(two > env2);
        out1 += usize::from(one > env1);
        table.push(vec![t as f64, two, one]);
    }
    let trials = cfg.trials.max(1) as f64;
    let checks = vec![
        Check::at_most(
            "dkw-two-sample",
            out2 as f64 / trials,
            cfg.max_exceed_rate,
            format!("fraction of {} trials with KS > {env2:.5}", cfg.trials),
        ),
        Check::at_most(
            "dkw-one-sample",
            out1 as f64 / trials,
            cfg.max_exceed_rate,
            format!("fraction of {} trials with sup|F_n - F| > {env1:.5}", cfg.trials),
        ),
    ];
    Ok(ExperimentReport::new(ExperimentName::Dkw, seed, checks, vec![table]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sample_statistic_by_hand() {
        // F(0) = 1/2, so the single-atom sample at 0 is 1/2 away on both sides
        assert!((ks_normal(vec![0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn small_run_passes() {
        let cfg = DkwConfig {
            trials: 100,
            max_exceed_rate: 0.05,
            ..Default::default()
        };
        assert!(run(&cfg, 9).unwrap().passed);
    }
}
