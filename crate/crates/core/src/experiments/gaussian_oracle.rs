//! The analytic fair predictor on random Gaussian pairs against its closed
//! form `sum_{s'} p_{s'} (m_{s'} + sd_{s'} (v - m_s) / sd_s)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{rep_seed, Check, ExperimentName, ExperimentReport, Table};
use crate::config::GaussianOracleConfig;
use crate::data::GroupId;
use crate::error::Result;
use crate::oracle::AnalyticGroupModel;
use crate::rng::{stream, Domain};

pub fn run(cfg: &GaussianOracleConfig, seed: u64) -> Result<ExperimentReport> {
    let probes = (0..cfg.probes as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(rep_seed(seed, 1, i), Domain::Replication, 0);
            let p1 = rng.random_range(0.05..0.95);
            let means = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let sds = [rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)];
            let model = AnalyticGroupModel::gaussian_pair(p1, (means[0], sds[0]), (means[1], sds[1]))?;
            let s = GroupId(rng.random_range(0..2));
            let x: f64 = rng.sample(StandardNormal);
            let v = model.f_star(x, s)?;
            let p = [p1, 1.0 - p1];
            let (a, o) = (s.index(), 1 - s.index());
            let closed = p[a] * v + p[o] * (means[o] + sds[o] * (v - means[a]) / sds[a]);
            let g = model.g_star(x, s)?;
            let decomposed = p[a] * v + p[o] * model.t_star(x, s)?;
            Ok([i as f64, s.0 as f64, x, g, closed, (g - closed).abs(), (g - decomposed).abs()])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(
        "probes",
        &["probe", "group", "x", "g_star", "closed_form", "closed_form_error", "decomposition_error"],
    );
    let (mut worst_closed, mut worst_dec): (f64, f64) = (0.0, 0.0);
    for row in probes {
        worst_closed = worst_closed.max(row[5]);
        worst_dec = worst_dec.max(row[6]);
        table.push(row.to_vec());
    }
    let checks = vec![
        Check::at_most(
            "gaussian-closed-form",
            worst_closed,
            cfg.closed_form_tolerance,
            format!("max |g_star - closed form| over {} probes", cfg.probes),
        ),
        Check::at_most(
            "binary-decomposition",
            worst_dec,
            cfg.decomposition_tolerance,
            "max |g_star - (p_s f_star + p_o t_star)|",
        ),
    ];
    Ok(ExperimentReport::new(ExperimentName::GaussianOracle, seed, checks, vec![table]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let cfg = GaussianOracleConfig {
            probes: 500,
            ..Default::default()
        };
        let report = run(&cfg, 3).unwrap();
        assert!(report.passed, "{:#?}", report.checks);
    }
}
