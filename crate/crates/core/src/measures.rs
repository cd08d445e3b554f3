//! Empirical univariate measures built from (optionally jittered) samples.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::jitter;

/// Uniform-weight atoms, kept sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    values: Vec<f64>,
    jitter_width: f64,
}

impl EmpiricalMeasure {
    /// Builds a measure from unsorted atoms without jittering.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        check_finite(&values)?;
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            values,
            jitter_width: 0.0,
        })
    }

    /// Adds i.i.d. `U([-jitter_width, jitter_width])` noise to every raw value
    /// and sorts the result.
    pub fn build<R: Rng + ?Sized>(raw: &[f64], jitter_width: f64, rng: &mut R) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptySample);
        }
        if !(jitter_width >= 0.0 && jitter_width.is_finite()) {
            return Err(Error::Domain {
                what: "jitter_width",
                value: jitter_width,
            });
        }
        check_finite(raw)?;
        let mut values: Vec<f64> = raw.iter().map(|v| v + jitter(rng, jitter_width)).collect();
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            values,
            jitter_width,
        })
    }

    /// Wraps atoms that are already sorted, e.g. when loading a saved model.
    pub fn from_sorted(values: Vec<f64>, jitter_width: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        check_finite(&values)?;
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Invariant("atoms are not sorted".into()));
        }
        Ok(Self {
            values,
            jitter_width,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn jitter_width(&self) -> f64 {
        self.jitter_width
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Right-continuous empirical CDF: `#{v <= t} / m`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.values.partition_point(|&v| v <= t) as f64 / self.len() as f64
    }

    /// Generalized inverse `inf{y : F(y) >= u}`, with `Q(0) = Q(0+)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain {
                what: "quantile level",
                value: u,
            });
        }
        Ok(self.values[quantile_index(u, self.len())])
    }

    /// Number of atoms strictly below `a`; inserting `a` at that index keeps
    /// the atoms sorted.
    pub fn position(&self, a: f64) -> usize {
        self.values.partition_point(|&v| v < a)
    }

    /// Shifts every atom by `c`.
    pub fn translate(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
            jitter_width: self.jitter_width,
        }
    }
}

/// Zero-based index of the order statistic `ceil(u * m)` (clamped to 1 at u = 0).
///
/// Levels of the form `k / m` computed in floating point can land a few ulps
/// above `k`; those are snapped back so that `quantile(cdf(v)) == v`.
pub(crate) fn quantile_index(u: f64, m: usize) -> usize {
    let x = u * m as f64;
    let nearest = x.round();
    let rank = if (x - nearest).abs() <= 8.0 * f64::EPSILON * x.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (rank as usize).clamp(1, m) - 1
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(&value) => Err(Error::NonFinite {
            context: "sample",
            value,
        }),
        None => Ok(()),
    }
}

/// A random equal-size partition of `0..n` into two halves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub i0: Vec<usize>,
    pub i1: Vec<usize>,
    /// Index dropped to make `n` even, if any.
    pub dropped: Option<usize>,
}

/// Shuffles `0..n` and cuts it in half. For odd `n` one uniformly chosen
/// index is discarded first.
pub fn split_even<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SplitIndices> {
    if n < 2 {
        return Err(Error::GroupTooSmall {
            group: crate::data::GroupId(0),
            size: n,
            needed: 2,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let dropped = if n % 2 == 1 { idx.pop() } else { None };
    let half = idx.len() / 2;
    let i1 = idx.split_off(half);
    Ok(SplitIndices {
        i0: idx,
        i1,
        dropped,
    })
}
