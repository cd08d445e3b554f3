//! Fair post-processing of a base regressor.
//!
//! Fitting builds, per group `s`, two sorted tables from a jittered unlabeled
//! sample split in half: `ar0[s]` (empirical quantiles) and `ar1[s]`
//! (empirical CDF). A new point `(x, s)` is mapped to
//!
//! ```text
//! k   = #{ a in ar1[s] : a < f(x, s) + eps },        eps ~ U([-sigma, sigma])
//! g   = sum_{s'} p[s'] * ar0[s'][ ceil(|ar0[s']| * k / |ar1[s]|) ]   (1-based, clamped to >= 1)
//! ```
//!
//! i.e. the group-wise rank of the jittered prediction is pushed through the
//! weighted average of all groups' empirical quantile functions.
//! Jittering makes every prediction continuous, so within-group ranks are
//! exchangeable whatever the base model; with equal group sizes the output
//! law is the same for every group.

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{GroupId, GroupedDataset};
use crate::error::{Error, Result};
use crate::measures::{split_even, EmpiricalMeasure};
use crate::regressors::Regressor;
use crate::rng::{jitter, stream, Domain};
use crate::transport::check_simplex;

pub const DEFAULT_SIGMA: f64 = 1e-5;
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PostprocessConfig {
    /// Jitter half-width.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairPostprocessor {
    groups: Vec<GroupId>,
    ar0: Vec<EmpiricalMeasure>,
    ar1: Vec<EmpiricalMeasure>,
    p_hat: Vec<f64>,
    sigma: f64,
    seed: u64,
}

impl FairPostprocessor {
    /// Builds the quantile and CDF tables of every group present in
    /// `unlabeled`, and the group frequencies from `attr_sample` (by default
    /// the group labels of `unlabeled`).
    pub fn fit<R: Regressor + ?Sized>(
        base: &R,
        unlabeled: &GroupedDataset,
        attr_sample: Option<&[GroupId]>,
        config: PostprocessConfig,
    ) -> Result<Self> {
        let PostprocessConfig { sigma, seed } = config;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain {
                what: "sigma",
                value: sigma,
            });
        }
        let mut groups = Vec::new();
        let mut ar0 = Vec::new();
        let mut ar1 = Vec::new();
        for (g, idx) in unlabeled.indices_by_group().into_iter().enumerate() {
            if idx.is_empty() {
                continue;
            }
            let group = GroupId(g as u32);
            if idx.len() < 2 {
                return Err(Error::GroupTooSmall {
                    group,
                    size: idx.len(),
                    needed: 2,
                });
            }
            let preds = idx
                .iter()
                .map(|&i| base.predict(&unlabeled.rows()[i].x, group))
                .collect::<Result<Vec<_>>>()?;
            let split = split_even(preds.len(), &mut stream(seed, Domain::Split, g as u64))?;
            let half = |ids: &[usize]| ids.iter().map(|&i| preds[i]).collect::<Vec<_>>();
            let q = EmpiricalMeasure::build(&half(&split.i0), sigma, &mut stream(seed, Domain::JitterQuantile, g as u64))?;
            let c = EmpiricalMeasure::build(&half(&split.i1), sigma, &mut stream(seed, Domain::JitterCdf, g as u64))?;
            groups.push(group);
            ar0.push(q);
            ar1.push(c);
        }
        if groups.is_empty() {
            return Err(Error::EmptyInput);
        }

        let default_attr;
        let attr = match attr_sample {
            Some(a) => a,
            None => {
                default_attr = unlabeled.group_sample();
                &default_attr
            }
        };
        if attr.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut counts = vec![0usize; groups.len()];
        for s in attr {
            let slot = groups.binary_search(s).map_err(|_| Error::UnknownGroup(*s))?;
            counts[slot] += 1;
        }
        for (g, c) in groups.iter().zip(&counts) {
            if *c == 0 {
                log::warn!("group {g} never occurs in the attribute sample; its weight is 0");
            }
        }
        let p_hat = counts.iter().map(|&c| c as f64 / attr.len() as f64).collect();
        Ok(Self {
            groups,
            ar0,
            ar1,
            p_hat,
            sigma,
            seed,
        })
    }

    pub fn groups(&self) -> &[GroupId] {
        &self.groups
    }

    pub fn p_hat(&self) -> &[f64] {
        &self.p_hat
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn slot(&self, s: GroupId) -> Result<usize> {
        self.groups.binary_search(&s).map_err(|_| Error::UnknownGroup(s))
    }

    /// Quantile table of group `s`.
    pub fn ar0(&self, s: GroupId) -> Result<&EmpiricalMeasure> {
        Ok(&self.ar0[self.slot(s)?])
    }

    /// CDF table of group `s`.
    pub fn ar1(&self, s: GroupId) -> Result<&EmpiricalMeasure> {
        Ok(&self.ar1[self.slot(s)?])
    }

    /// Smallest and largest possible output.
    pub fn output_range(&self) -> (f64, f64) {
        let lo = self.ar0.iter().map(EmpiricalMeasure::min).fold(f64::INFINITY, f64::min);
        let hi = self.ar0.iter().map(EmpiricalMeasure::max).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Maps an already-jittered base prediction `value = f(x, s) + eps`.
    pub fn transform_value(&self, value: f64, s: GroupId) -> Result<f64> {
        let slot = self.slot(s)?;
        let cdf_table = &self.ar1[slot];
        let k = cdf_table.position(value);
        let n1 = cdf_table.len();
        Ok(self
            .ar0
            .iter()
            .zip(&self.p_hat)
            .map(|(q, p)| p * q.values()[table_index(k, q.len(), n1)])
            .sum())
    }

    /// Fair prediction for `(x, s)` with jitter drawn from `rng`.
    pub fn transform<B: Regressor + ?Sized, R: Rng + ?Sized>(
        &self,
        base: &B,
        x: &[f64],
        s: GroupId,
        rng: &mut R,
    ) -> Result<f64> {
        self.slot(s)?;
        let value = base.predict(x, s)? + jitter(rng, self.sigma);
        self.transform_value(value, s)
    }

    /// As [`FairPostprocessor::transform`] with the jitter stream keyed by
    /// `(seed, row_id)`.
    pub fn transform_row<B: Regressor + ?Sized>(&self, base: &B, x: &[f64], s: GroupId, row_id: u64) -> Result<f64> {
        self.transform(base, x, s, &mut stream(self.seed, Domain::Predict, row_id))
    }

    /// Row-wise [`FairPostprocessor::transform_row`], keyed by each row's id.
    pub fn transform_batch<B: Regressor + ?Sized>(&self, base: &B, data: &GroupedDataset) -> Result<Vec<f64>> {
        data.rows()
            .par_iter()
            .map(|r| self.transform_row(base, &r.x, r.s, r.id))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let found = serde_json::from_str::<serde_json::Value>(text)
            .ok()
            .and_then(|v| v.get("version")?.as_u64())
            .map(|v| v as u32);
        if found != Some(MODEL_VERSION) {
            return Err(Error::SchemaVersionMismatch {
                expected: MODEL_VERSION,
                found,
            });
        }
        let file: ModelFile = serde_json::from_str(text).map_err(|_| Error::SchemaVersionMismatch {
            expected: MODEL_VERSION,
            found,
        })?;
        file.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Zero-based quantile-table slot for CDF rank `k` out of `n1`, in a table of
/// `n0` atoms: `ceil(n0 k / n1)`, clamped to `[1, n0]`, minus one.
#[inline]
fn table_index(k: usize, n0: usize, n1: usize) -> usize {
    (k * n0).div_ceil(n1).clamp(1, n0) - 1
}

/// Serialized form; floats are written as shortest round-trip decimal strings.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    groups: Vec<GroupId>,
    sigma: String,
    seed: u64,
    p_hat: Vec<String>,
    ar0: Vec<Vec<String>>,
    ar1: Vec<Vec<String>>,
}

fn to_strings(v: &[f64]) -> Vec<String> {
    v.iter().map(f64::to_string).collect()
}

fn parse_floats(v: &[String]) -> Result<Vec<f64>> {
    v.iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Invariant(format!("{t:?} is not a decimal float")))
        })
        .collect()
}

impl From<&FairPostprocessor> for ModelFile {
    fn from(pp: &FairPostprocessor) -> Self {
        Self {
            version: MODEL_VERSION,
            groups: pp.groups.clone(),
            sigma: pp.sigma.to_string(),
            seed: pp.seed,
            p_hat: to_strings(&pp.p_hat),
            ar0: pp.ar0.iter().map(|m| to_strings(m.values())).collect(),
            ar1: pp.ar1.iter().map(|m| to_strings(m.values())).collect(),
        }
    }
}

impl TryFrom<ModelFile> for FairPostprocessor {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        let k = file.groups.len();
        if k == 0 || file.p_hat.len() != k || file.ar0.len() != k || file.ar1.len() != k {
            return Err(Error::Invariant("groups, p_hat, ar0 and ar1 must have equal lengths".into()));
        }
        if file.groups.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invariant("groups must be strictly increasing".into()));
        }
        let sigma: f64 = file
            .sigma
            .parse()
            .map_err(|_| Error::Invariant(format!("sigma {:?} is not a float", file.sigma)))?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Invariant(format!("sigma = {sigma} must be positive")));
        }
        let p_hat = parse_floats(&file.p_hat)?;
        check_simplex(&p_hat).map_err(|e| Error::Invariant(e.to_string()))?;
        let table = |v: &Vec<String>| -> Result<EmpiricalMeasure> {
            EmpiricalMeasure::from_sorted(parse_floats(v)?, sigma).map_err(|e| Error::Invariant(format!("table: {e}")))
        };
        let ar0 = file.ar0.iter().map(table).collect::<Result<Vec<_>>>()?;
        let ar1 = file.ar1.iter().map(table).collect::<Result<Vec<_>>>()?;
        if ar0.iter().zip(&ar1).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::Invariant("ar0 and ar1 sizes differ".into()));
        }
        Ok(Self {
            groups: file.groups,
            ar0,
            ar1,
            p_hat,
            sigma,
            seed: file.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Row;
    use crate::metrics::{dkw_two_sample_envelope, ks_two_sample};
    use crate::regressors::FnRegressor;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Unlabeled 1-D data with `counts[s]` rows of group `s`, x ~ N(0, 1).
    fn unlabeled(counts: &[usize], seed: u64) -> GroupedDataset {
        let mut rng = stream(seed, Domain::Unlabeled, 0);
        let mut rows = Vec::new();
        for (g, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                rows.push(Row {
                    id: rows.len() as u64,
                    x: vec![rng.sample(StandardNormal)],
                    s: GroupId(g as u32),
                    y: None,
                });
            }
        }
        let names = (0..counts.len()).map(|g| format!("g{g}")).collect();
        GroupedDataset::new(1, names, rows).unwrap()
    }

    fn identity() -> FnRegressor<impl Fn(&[f64], GroupId) -> f64> {
        FnRegressor::new(1, |x: &[f64], _| x[0])
    }

    fn cfg(sigma: f64, seed: u64) -> PostprocessConfig {
        PostprocessConfig { sigma, seed }
    }

    #[test]
    fn constant_base_gives_constant_tables() {
        let base = FnRegressor::new(1, |_: &[f64], _| 3.5);
        let pp = FairPostprocessor::fit(&base, &unlabeled(&[10, 14], 0), None, cfg(1e-5, 1)).unwrap();
        for &g in pp.groups() {
            for m in [pp.ar0(g).unwrap(), pp.ar1(g).unwrap()] {
                assert!(m.values().iter().all(|v| (v - 3.5).abs() <= 1e-5));
            }
        }
    }

    #[test]
    fn balanced_attribute_sample() {
        let data = unlabeled(&[100, 100], 0);
        let pp = FairPostprocessor::fit(&identity(), &data, None, cfg(1e-5, 0)).unwrap();
        assert_eq!(pp.p_hat(), &[0.5, 0.5]);
        assert_eq!(pp.ar0(GroupId(0)).unwrap().len(), 50);
        let attr = [GroupId(0), GroupId(1), GroupId(1), GroupId(1)];
        let pp = FairPostprocessor::fit(&identity(), &data, Some(&attr), cfg(1e-5, 0)).unwrap();
        assert_eq!(pp.p_hat(), &[0.25, 0.75]);
    }

    #[test]
    fn fit_is_bit_reproducible() {
        let data = unlabeled(&[31, 57], 4);
        let a = FairPostprocessor::fit(&identity(), &data, None, cfg(1e-5, 9)).unwrap();
        let b = FairPostprocessor::fit(&identity(), &data, None, cfg(1e-5, 9)).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = FairPostprocessor::fit(&identity(), &data, None, cfg(1e-5, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fit_errors() {
        let data = unlabeled(&[1, 10], 0);
        assert!(matches!(
            FairPostprocessor::fit(&identity(), &data, None, cfg(1e-5, 0)),
            Err(Error::GroupTooSmall { group: GroupId(0), .. })
        ));
        let data = unlabeled(&[10, 0], 0);
        let attr = [GroupId(0), GroupId(1)];
        assert!(matches!(
            FairPostprocessor::fit(&identity(), &data, Some(&attr), cfg(1e-5, 0)),
            Err(Error::UnknownGroup(GroupId(1)))
        ));
        assert!(FairPostprocessor::fit(&identity(), &data, Some(&[]), cfg(1e-5, 0)).is_err());
        assert!(FairPostprocessor::fit(&identity(), &data, None, cfg(0.0, 0)).is_err());
    }

    #[test]
    fn table_index_clamps_and_rescales() {
        assert_eq!(table_index(0, 5, 5), 0);
        assert_eq!(table_index(1, 5, 5), 0);
        assert_eq!(table_index(5, 5, 5), 4);
        // n0 = 10, n1 = 4, k = 1 -> ceil(10/4) = 3rd atom
        assert_eq!(table_index(1, 10, 4), 2);
        assert_eq!(table_index(4, 10, 4), 9);
    }

    #[test]
    fn single_group_is_a_rank_preserving_remap() {
        let data = unlabeled(&[400], 3);
        let pp = FairPostprocessor::fit(&identity(), &data, None, cfg(1e-9, 3)).unwrap();
        let q = pp.ar0(GroupId(0)).unwrap().values().to_vec();
        let c = pp.ar1(GroupId(0)).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=200 {
            let x = -3.0 + 6.0 * i as f64 / 200.0;
            let g = pp.transform_row(&identity(), &[x], GroupId(0), i).unwrap();
            let k = c.position(x);
            assert_eq!(g, q[k.max(1) - 1]);
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn group_constant_base_collapses_to_the_weighted_mean() {
        let sigma = 1e-3;
        let base = FnRegressor::new(1, |_: &[f64], s: GroupId| if s.0 == 0 { -2.0 } else { 5.0 });
        let data = unlabeled(&[30, 70], 1);
        let pp = FairPostprocessor::fit(&base, &data, None, cfg(sigma, 2)).unwrap();
        let target = 0.3 * -2.0 + 0.7 * 5.0;
        for r in data.rows() {
            let g = pp.transform_row(&base, &r.x, r.s, r.id + 1000).unwrap();
            assert!((g - target).abs() <= 2.0 * sigma, "{g}");
        }
    }

    /// Median |g - f| over fresh points when both groups share one law.
    fn median_gap(n: usize, seed: u64) -> f64 {
        let data = unlabeled(&[n, n], seed);
        let pp = FairPostprocessor::fit(&identity(), &data, None, cfg(1e-5, seed)).unwrap();
        let test = unlabeled(&[500, 500], seed + 100);
        let out = pp.transform_batch(&identity(), &test).unwrap();
        let mut gaps: Vec<f64> = out.iter().zip(test.rows()).map(|(g, r)| (g - r.x[0]).abs()).collect();
        gaps.sort_unstable_by(f64::total_cmp);
        gaps[gaps.len() / 2]
    }

    #[test]
    fn identical_groups_leave_predictions_nearly_unchanged() {
        let small: f64 = (0..5).map(|s| median_gap(100, s)).sum::<f64>() / 5.0;
        let large: f64 = (0..5).map(|s| median_gap(10_000, s)).sum::<f64>() / 5.0;
        assert!(large < small / 3.0, "{small} -> {large}");
        assert!(large < 0.05, "{large}");
    }

    #[test]
    fn one_group_outputs_resample_the_quantile_table() {
        let data = unlabeled(&[4000], 5);
        let pp = FairPostprocessor::fit(&identity(), &data, None, cfg(1e-5, 5)).unwrap();
        let test = unlabeled(&[2000], 6);
        let out = pp.transform_batch(&identity(), &test).unwrap();
        let table = pp.ar0(GroupId(0)).unwrap().values();
        let ks = ks_two_sample(&out, table).unwrap();
        assert!(ks <= dkw_two_sample_envelope(out.len(), table.len(), 0.001), "{ks}");
    }

    #[test]
    fn batch_matches_loop_and_ignores_row_order() {
        let data = unlabeled(&[40, 60], 7);
        let pp = FairPostprocessor::fit(&identity(), &data, None, cfg(1e-5, 7)).unwrap();
        let batch = pp.transform_batch(&identity(), &data).unwrap();
        for (r, b) in data.rows().iter().zip(&batch) {
            let mut rng = stream(7, Domain::Predict, r.id);
            assert_eq!(pp.transform(&identity(), &r.x, r.s, &mut rng).unwrap(), *b);
        }
        let reversed: Vec<usize> = (0..data.len()).rev().collect();
        let mut back = pp.transform_batch(&identity(), &data.subset(&reversed)).unwrap();
        back.reverse();
        assert_eq!(back, batch);
        assert!(pp.transform_batch(&identity(), &data.empty_like()).unwrap().is_empty());
    }

    #[test]
    fn unknown_group_at_prediction() {
        let pp = FairPostprocessor::fit(&identity(), &unlabeled(&[10, 0], 0), None, cfg(1e-5, 0)).unwrap();
        assert!(matches!(
            pp.transform_row(&identity(), &[0.0], GroupId(1), 0),
            Err(Error::UnknownGroup(GroupId(1)))
        ));
    }

    #[test]
    fn model_file_round_trip() {
        let pp = FairPostprocessor::fit(&identity(), &unlabeled(&[33, 20], 2), None, cfg(1e-5, u64::MAX)).unwrap();
        let back = FairPostprocessor::from_json(&pp.to_json().unwrap()).unwrap();
        assert_eq!(back, pp);
        for &g in pp.groups() {
            let bits = |m: &EmpiricalMeasure| m.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(back.ar0(g).unwrap()), bits(pp.ar0(g).unwrap()));
        }
    }

    #[test]
    fn bad_model_files() {
        assert!(matches!(
            FairPostprocessor::from_json("\u{0}garbage"),
            Err(Error::SchemaVersionMismatch { found: None, .. })
        ));
        assert!(matches!(
            FairPostprocessor::from_json(r#"{"version": 2}"#),
            Err(Error::SchemaVersionMismatch { found: Some(2), .. })
        ));
        let pp = FairPostprocessor::fit(&identity(), &unlabeled(&[4, 4], 2), None, cfg(1e-5, 0)).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&pp.to_json().unwrap()).unwrap();
        v["p_hat"] = serde_json::json!(["0.5", "0.6"]);
        assert!(matches!(FairPostprocessor::from_json(&v.to_string()), Err(Error::Invariant(_))));
        v["p_hat"] = serde_json::json!(["0.5", "0.5"]);
        v["ar0"][0] = serde_json::json!(["2", "1"]);
        assert!(matches!(FairPostprocessor::from_json(&v.to_string()), Err(Error::Invariant(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn outputs_are_monotone_within_group_and_in_range(seed in any::<u64>(), n0 in 4usize..80, n1 in 4usize..80) {
            let data = unlabeled(&[n0, n1], seed);
            let pp = FairPostprocessor::fit(&identity(), &data, None, cfg(1e-9, seed)).unwrap();
            let (lo, hi) = pp.output_range();
            for s in [GroupId(0), GroupId(1)] {
                let mut prev = f64::NEG_INFINITY;
                // probes 0.01 apart, far wider than the jitter
                for i in 0..600 {
                    let x = -3.0 + 0.01 * i as f64;
                    let g = pp.transform_row(&identity(), &[x], s, i).unwrap();
                    prop_assert!(g >= prev);
                    prop_assert!(g >= lo - 1e-12 && g <= hi + 1e-12);
                    prev = g;
                }
            }
        }
    }
}
