//! Exact transport primitives against exhaustive and randomized oracles:
//! sorted-coupling W2 against all pairings, and the quantile-average
//! barycenter against random candidate measures.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::brute::w2_squared_brute;
use super::{rep_seed, Check, ExperimentName, ExperimentReport, Table};
use crate::config::BarycenterOracleConfig;
use crate::error::Result;
use crate::measures::EmpiricalMeasure;
use crate::rng::{stream, Domain};
use crate::transport::{barycenter, w2_squared, WeightedMeasures};

fn atoms(rng: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    // a third of the samples are rounded to force ties
    let round = rng.random_bool(1.0 / 3.0);
    (0..m)
        .map(|_| {
            let v = rng.random_range(lo..hi);
            if round {
                v.round()
            } else {
                v
            }
        })
        .collect()
}

struct Instance {
    measures: WeightedMeasures,
    bary_objective: f64,
    best_candidate: f64,
    slack: f64,
}

fn random_instance(cfg: &BarycenterOracleConfig, seed: u64, i: u64) -> Result<Instance> {
    let mut rng = stream(rep_seed(seed, 2, i), Domain::Replication, 0);
    let k = rng.random_range(2..=cfg.max_measures.max(2));
    let measures = (0..k)
        .map(|_| {
            let m = rng.random_range(1..=cfg.max_atoms);
            EmpiricalMeasure::new(atoms(&mut rng, m, -5.0, 5.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let inputs = WeightedMeasures::new(measures, weights)?;
    let grid = inputs.default_grid_size();
    let bary = barycenter(&inputs, grid)?;
    let bary_objective = inputs.objective(&bary);

    let lo = inputs.measures().iter().map(EmpiricalMeasure::min).fold(f64::INFINITY, f64::min);
    let hi = inputs.measures().iter().map(EmpiricalMeasure::max).fold(f64::NEG_INFINITY, f64::max);
    let range = (hi - lo).max(f64::MIN_POSITIVE);
    let slack = cfg.slack * range * range / grid as f64;

    let mut best_candidate = f64::INFINITY;
    for c in 0..cfg.candidates {
        let candidate = match c % 3 {
            // uniform atoms over the data range
            0 => {
                let m = rng.random_range(1..=cfg.max_atoms + 2);
                EmpiricalMeasure::new((0..m).map(|_| rng.random_range(lo..=hi)).collect())?
            }
            // small perturbations of the barycenter
            1 => {
                let scale = 0.05 * range * rng.random::<f64>();
                EmpiricalMeasure::new(bary.values().iter().map(|v| v + rng.random_range(-scale..=scale)).collect())?
            }
            // quantile averages with the wrong weights
            _ => {
                let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0) + 1e-9).collect();
                let total: f64 = raw.iter().sum();
                let other = WeightedMeasures::new(
                    inputs.measures().to_vec(),
                    raw.iter().map(|w| w / total).collect(),
                )?;
                barycenter(&other, grid)?
            }
        };
        best_candidate = best_candidate.min(inputs.objective(&candidate));
    }
    Ok(Instance {
        measures: inputs,
        bary_objective,
        best_candidate,
        slack,
    })
}

pub fn run(cfg: &BarycenterOracleConfig, seed: u64) -> Result<ExperimentReport> {
    let pairs = (0..cfg.w2_pairs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(rep_seed(seed, 1, i), Domain::Replication, 0);
            let m = rng.random_range(1..=cfg.w2_max_atoms);
            let a = atoms(&mut rng, m, -10.0, 10.0);
            let b = atoms(&mut rng, m, -10.0, 10.0);
            let exact = w2_squared(&EmpiricalMeasure::new(a.clone())?, &EmpiricalMeasure::new(b.clone())?);
            Ok((m, exact, w2_squared_brute(&a, &b)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut w2_table = Table::new("w2", &["pair", "atoms", "w2_squared", "brute_force", "abs_error"]);
    let mut worst: f64 = 0.0;
    for (i, (m, exact, brute)) in pairs.iter().enumerate() {
        let err = (exact - brute).abs();
        worst = worst.max(err);
        w2_table.push(vec![i as f64, *m as f64, *exact, *brute, err]);
    }

    let instances = (0..cfg.instances as u64)
        .into_par_iter()
        .map(|i| random_instance(cfg, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let mut bary_table = Table::new(
        "barycenter",
        &["instance", "measures", "barycenter_objective", "best_candidate", "slack", "margin"],
    );
    // the worst excess of the barycenter over a candidate, in units of slack
    let mut worst_excess = f64::NEG_INFINITY;
    for (i, inst) in instances.iter().enumerate() {
        let margin = inst.best_candidate + inst.slack - inst.bary_objective;
        worst_excess = worst_excess.max((inst.bary_objective - inst.best_candidate) / inst.slack);
        bary_table.push(vec![
            i as f64,
            inst.measures.measures().len() as f64,
            inst.bary_objective,
            inst.best_candidate,
            inst.slack,
            margin,
        ]);
    }

    let checks = vec![
        Check::at_most(
            "w2-brute-force",
            worst,
            cfg.w2_tolerance,
            format!("max |w2_squared - min over pairings| over {} pairs", cfg.w2_pairs),
        ),
        Check::at_most(
            "barycenter-optimality",
            worst_excess,
            1.0,
            format!(
                "max (objective(barycenter) - objective(best of {} candidates)) / slack over {} instances",
                cfg.candidates, cfg.instances
            ),
        ),
    ];
    Ok(ExperimentReport::new(
        ExperimentName::BarycenterOracle,
        seed,
        checks,
        vec![w2_table, bary_table],
    ))
}
