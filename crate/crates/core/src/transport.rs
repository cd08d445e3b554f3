//! One-dimensional optimal transport between empirical measures.
//!
//! On the real line the optimal coupling is monotone, so every Wasserstein
//! distance reduces to an integral over `u in (0, 1)` of the gap between the
//! two quantile functions. For empirical measures both quantile functions are
//! step functions with jumps at `i / m` and `j / n`; the integrals below are
//! evaluated exactly on the merged breakpoint grid.

use crate::error::{Error, Result};
use crate::measures::EmpiricalMeasure;

const WEIGHT_TOL: f64 = 1e-12;

/// Measures with mixture weights on the probability simplex.
#[derive(Debug, Clone)]
pub struct WeightedMeasures {
    measures: Vec<EmpiricalMeasure>,
    weights: Vec<f64>,
}

impl WeightedMeasures {
    pub fn new(measures: Vec<EmpiricalMeasure>, weights: Vec<f64>) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::EmptyInput);
        }
        if measures.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: measures.len(),
                right: weights.len(),
            });
        }
        check_simplex(&weights)?;
        Ok(Self { measures, weights })
    }

    pub fn measures(&self) -> &[EmpiricalMeasure] {
        &self.measures
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest input size; the default barycenter resolution.
    pub fn default_grid_size(&self) -> usize {
        self.measures.iter().map(EmpiricalMeasure::len).max().unwrap_or(1)
    }

    /// `sum_s p_s W2^2(nu_s, candidate)`.
    pub fn objective(&self, candidate: &EmpiricalMeasure) -> f64 {
        self.measures
            .iter()
            .zip(&self.weights)
            .map(|(m, p)| p * w2_squared(m, candidate))
            .sum()
    }
}

pub(crate) fn check_simplex(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidWeights(format!("weight {w} is negative or not finite")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Walks the merged breakpoint grid of two step quantile functions and calls
/// `visit(length, a, b)` for every interval on which `Q_mu = a`, `Q_nu = b`.
fn merged_segments(mu: &[f64], nu: &[f64], mut visit: impl FnMut(f64, f64, f64)) {
    let (m, n) = (mu.len() as u128, nu.len() as u128);
    let denom = (m * n) as f64;
    // positions are tracked on the common grid 1 / (m n) to stay exact
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev: u128 = 0;
    while i < mu.len() && j < nu.len() {
        let next_i = (i as u128 + 1) * n;
        let next_j = (j as u128 + 1) * m;
        let next = next_i.min(next_j);
        visit((next - prev) as f64 / denom, mu[i], nu[j]);
        prev = next;
        if next_i == next {
            i += 1;
        }
        if next_j == next {
            j += 1;
        }
    }
}

/// Squared Wasserstein-2 distance `int_0^1 (Q_mu - Q_nu)^2 du`.
pub fn w2_squared(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> f64 {
    if mu.len() == nu.len() {
        let n = mu.len() as f64;
        return mu
            .values()
            .iter()
            .zip(nu.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;
    }
    let mut acc = 0.0;
    merged_segments(mu.values(), nu.values(), |len, a, b| acc += len * (a - b) * (a - b));
    acc
}

pub fn w2(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> f64 {
    w2_squared(mu, nu).sqrt()
}

/// Wasserstein-1 distance `int_0^1 |Q_mu - Q_nu| du`.
pub fn w1(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> f64 {
    let mut acc = 0.0;
    merged_segments(mu.values(), nu.values(), |len, a, b| acc += len * (a - b).abs());
    acc
}

/// Wasserstein-infinity distance `sup_u |Q_mu(u) - Q_nu(u)|`.
pub fn w_inf(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> f64 {
    let mut acc: f64 = 0.0;
    merged_segments(mu.values(), nu.values(), |_, a, b| acc = acc.max((a - b).abs()));
    acc
}

/// Wasserstein-2 barycenter: the measure whose quantile function is
/// `sum_s p_s Q_s`, sampled at the mid-grid levels `(i - 1/2) / grid_size`.
pub fn barycenter(inputs: &WeightedMeasures, grid_size: usize) -> Result<EmpiricalMeasure> {
    if grid_size == 0 {
        return Err(Error::Domain {
            what: "grid_size",
            value: 0.0,
        });
    }
    let atoms: Vec<f64> = (1..=grid_size)
        .map(|i| {
            inputs
                .measures
                .iter()
                .zip(&inputs.weights)
                .map(|(m, p)| p * m.values()[midgrid_index(i, grid_size, m.len())])
                .sum()
        })
        .collect();
    // a weighted sum of nondecreasing sequences is nondecreasing up to rounding
    EmpiricalMeasure::new(atoms)
}

/// Zero-based order statistic `ceil((2i - 1) m / (2 g)) - 1`, i.e. the empirical
/// quantile of an `m`-atom measure at level `(i - 1/2) / g`, in exact integers.
fn midgrid_index(i: usize, grid: usize, m: usize) -> usize {
    let num = (2 * i - 1) * m;
    let den = 2 * grid;
    num.div_ceil(den).clamp(1, m) - 1
}
