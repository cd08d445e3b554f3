//! The exact risk-optimal fair predictor for analytically specified groups.
//!
//! Each group has a one-dimensional feature `X | S = s` with a standard law
//! (`N(0, 1)` for Gaussian groups, `U(0, 1)` for uniform ones) and a regression
//! function `f*(x, s)` that is an increasing affine map of it, so that
//! `f*(X, S) | S = s` follows the declared law exactly. The fair optimum is
//!
//! ```text
//! g*(x, s) = sum_{s'} p_{s'} Q_{s'}( F_s( f*(x, s) ) )
//! ```
//!
//! The own-group term uses `Q_s(F_s(v)) = v` directly, which holds for these
//! continuous, strictly increasing laws and avoids a round trip through `F`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{GroupId, GroupedDataset, Row};
use crate::error::{Error, Result};
use crate::regressors::{check_dim, Regressor};
use crate::transport::check_simplex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum GroupLaw {
    Gaussian { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
}

impl GroupLaw {
    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            GroupLaw::Gaussian { mean, std } => std_normal_cdf((t - mean) / std),
            GroupLaw::Uniform { low, high } => ((t - low) / (high - low)).clamp(0.0, 1.0),
        }
    }

    /// Inverse CDF on `(0, 1)`; the uniform law is also defined at the endpoints.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            GroupLaw::Gaussian { mean, std } => mean + std * std_normal_quantile(u),
            GroupLaw::Uniform { low, high } => low + (high - low) * u.clamp(0.0, 1.0),
        }
    }

    /// `f*` in terms of the standardized feature.
    fn regression(&self, x: f64) -> f64 {
        match *self {
            GroupLaw::Gaussian { mean, std } => mean + std * x,
            GroupLaw::Uniform { low, high } => low + (high - low) * x,
        }
    }

    /// Inverse of [`GroupLaw::regression`].
    fn feature_of(&self, v: f64) -> f64 {
        match *self {
            GroupLaw::Gaussian { mean, std } => (v - mean) / std,
            GroupLaw::Uniform { low, high } => (v - low) / (high - low),
        }
    }

    fn sample_feature<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            GroupLaw::Gaussian { .. } => rng.sample(StandardNormal),
            GroupLaw::Uniform { .. } => rng.random(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            GroupLaw::Gaussian { mean, std } => mean.is_finite() && std.is_finite() && std > 0.0,
            GroupLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && high > low,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("degenerate group law {self:?}")))
        }
    }
}

/// `Phi(z)` through the complementary error function, accurate in both tails.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// `Phi^{-1}(u)` by Wichura's rational approximation (algorithm AS 241,
/// PPND16), relative error about `1e-16` on `(0, 1)`. Returns `-inf`/`+inf`
/// at 0 and 1.
#[allow(clippy::excessive_precision)]
pub fn std_normal_quantile(u: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        133.141_667_891_784_377_45,
        1_971.590_950_306_551_442_7,
        13_731.693_765_509_461_125,
        45_921.953_931_549_871_457,
        67_265.770_927_008_700_853,
        33_430.575_583_588_128_105,
        2_509.080_928_730_122_672_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_911_252,
        687.187_007_492_057_908_3,
        5_394.196_021_424_751_107_7,
        21_213.794_301_586_595_867,
        39_307.895_800_092_710_61,
        28_729.085_735_721_942_674,
        5_226.495_278_852_545_925,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        0.241_780_725_177_450_611_77,
        0.022_723_844_989_269_184_583_3,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        0.689_767_334_985_100_004_55,
        0.148_103_976_427_480_074_59,
        0.015_198_666_563_616_457_196_6,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        0.296_560_571_828_504_891_23,
        0.026_532_189_526_576_123_093,
        0.001_242_660_947_388_078_438_6,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_937_69,
        0.136_929_880_922_735_805_31,
        0.014_875_361_290_850_614_852_5,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    let q = u - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = (-(if q < 0.0 { u } else { 1.0 - u }).ln()).sqrt();
    let z = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticGroup {
    pub name: String,
    pub weight: f64,
    #[serde(flatten)]
    pub law: GroupLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticGroupModel {
    pub groups: Vec<AnalyticGroup>,
}

impl AnalyticGroupModel {
    pub fn new(groups: Vec<AnalyticGroup>) -> Result<Self> {
        let model = Self { groups };
        model.validate()?;
        Ok(model)
    }

    /// Two Gaussian groups.
    pub fn gaussian_pair(p1: f64, (m1, s1): (f64, f64), (m2, s2): (f64, f64)) -> Result<Self> {
        Self::new(vec![
            AnalyticGroup {
                name: "g1".into(),
                weight: p1,
                law: GroupLaw::Gaussian { mean: m1, std: s1 },
            },
            AnalyticGroup {
                name: "g2".into(),
                weight: 1.0 - p1,
                law: GroupLaw::Gaussian { mean: m2, std: s2 },
            },
        ])
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::Config("analytic model has no groups".into()));
        }
        for g in &self.groups {
            g.law.validate()?;
            if g.weight.is_nan() || g.weight <= 0.0 {
                return Err(Error::Config(format!("group {:?} needs a positive weight", g.name)));
            }
        }
        check_simplex(&self.weights()).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn weights(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.weight).collect()
    }

    pub fn group_names(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.name.clone()).collect()
    }

    fn law(&self, s: GroupId) -> Result<&GroupLaw> {
        self.groups
            .get(s.index())
            .map(|g| &g.law)
            .ok_or(Error::UnknownGroup(s))
    }

    pub fn f_star(&self, x: f64, s: GroupId) -> Result<f64> {
        Ok(self.law(s)?.regression(x))
    }

    /// `F_{f*|s}(t)`.
    pub fn cdf(&self, s: GroupId, t: f64) -> Result<f64> {
        Ok(self.law(s)?.cdf(t))
    }

    /// `Q_{f*|s}(u)`.
    pub fn quantile(&self, s: GroupId, u: f64) -> Result<f64> {
        Ok(self.law(s)?.quantile(u))
    }

    pub fn g_star(&self, x: f64, s: GroupId) -> Result<f64> {
        let law = self.law(s)?;
        let v = law.regression(x);
        let u = law.cdf(v);
        Ok(self
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let q = if i == s.index() { v } else { g.law.quantile(u) };
                g.weight * q
            })
            .sum())
    }

    fn other(&self, s: GroupId) -> Result<GroupId> {
        if self.groups.len() != 2 {
            return Err(Error::NotBinary(self.groups.len()));
        }
        self.law(s)?;
        Ok(GroupId(1 - s.0))
    }

    /// Quantile-matched counterpart of `f*(x, s)` in the other group.
    pub fn t_star(&self, x: f64, s: GroupId) -> Result<f64> {
        let other = self.other(s)?;
        let law = self.law(s)?;
        Ok(self.law(other)?.quantile(law.cdf(law.regression(x))))
    }

    /// The feature value `x_bar` of the other group with the same within-group rank.
    pub fn matched_point(&self, x: f64, s: GroupId) -> Result<f64> {
        let other = self.other(s)?;
        Ok(self.law(other)?.feature_of(self.t_star(x, s)?))
    }

    /// Extra amount paid by the fair predictor over `f*` for the matched pair
    /// `(x, s)`, `(x_bar, s')`: `(p_{s'} - p_s)(f*(x_bar, s') - f*(x, s))`.
    pub fn delta_extra(&self, x: f64, s: GroupId) -> Result<f64> {
        let other = self.other(s)?;
        let gap = self.t_star(x, s)? - self.f_star(x, s)?;
        Ok((self.groups[other.index()].weight - self.groups[s.index()].weight) * gap)
    }

    pub fn sample_feature<R: Rng + ?Sized>(&self, s: GroupId, rng: &mut R) -> Result<f64> {
        Ok(self.law(s)?.sample_feature(rng))
    }

    /// Draws a group from the weights.
    pub fn sample_group<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupId {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, g) in self.groups.iter().enumerate() {
            acc += g.weight;
            if u < acc {
                return GroupId(i as u32);
            }
        }
        GroupId(self.groups.len() as u32 - 1)
    }

    /// Unlabeled 1-D rows, `counts[s]` of group `s`.
    pub fn sample_with_counts<R: Rng + ?Sized>(&self, counts: &[usize], rng: &mut R) -> Result<GroupedDataset> {
        if counts.len() != self.groups.len() {
            return Err(Error::LengthMismatch {
                left: counts.len(),
                right: self.groups.len(),
            });
        }
        let mut rows = Vec::with_capacity(counts.iter().sum());
        for (g, &c) in counts.iter().enumerate() {
            let s = GroupId(g as u32);
            for _ in 0..c {
                let x = self.sample_feature(s, rng)?;
                rows.push(Row {
                    id: rows.len() as u64,
                    x: vec![x],
                    s,
                    y: None,
                });
            }
        }
        GroupedDataset::new(1, self.group_names(), rows)
    }

    /// `sum_s p_s int_0^1 (Q_s(u) - q(u))^2 du` by the midpoint rule: the
    /// squared risk against `f*` of the fair predictor `q(F_s(f*(x, s)))`.
    pub fn fair_risk<Q: Fn(f64) -> f64>(&self, q: Q, grid: usize) -> f64 {
        (0..grid)
            .map(|i| {
                let u = (i as f64 + 0.5) / grid as f64;
                let target = q(u);
                self.groups
                    .iter()
                    .map(|g| g.weight * (g.law.quantile(u) - target).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / grid as f64
    }

    /// Quantile function of the barycenter, `sum_s p_s Q_s(u)`.
    pub fn barycenter_quantile(&self, u: f64) -> f64 {
        self.groups.iter().map(|g| g.weight * g.law.quantile(u)).sum()
    }
}

/// `f*` as a [`Regressor`] over the one-dimensional feature.
impl Regressor for AnalyticGroupModel {
    fn dim(&self) -> usize {
        1
    }

    fn predict(&self, x: &[f64], s: GroupId) -> Result<f64> {
        check_dim(1, x)?;
        self.f_star(x[0], s)
    }
}

/// `g*` as a [`Regressor`].
pub struct FairOracle<'a>(pub &'a AnalyticGroupModel);

impl Regressor for FairOracle<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn predict(&self, x: &[f64], s: GroupId) -> Result<f64> {
        check_dim(1, x)?;
        self.0.g_star(x[0], s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::EmpiricalMeasure;
    use crate::metrics::{dkw_two_sample_envelope, ks_two_sample};
    use crate::rng::{stream, Domain};
    use crate::transport::{barycenter, w2, WeightedMeasures};
    use approx::assert_abs_diff_eq;

    const G1: GroupId = GroupId(0);
    const G2: GroupId = GroupId(1);

    fn pair() -> AnalyticGroupModel {
        AnalyticGroupModel::gaussian_pair(0.3, (1.0, 2.0), (4.0, 0.5)).unwrap()
    }

    #[test]
    fn normal_helpers_round_trip() {
        for &z in &[-6.0, -2.5, -1.0, 0.0, 0.3, 1.7, 4.0] {
            assert_abs_diff_eq!(std_normal_quantile(std_normal_cdf(z)), z, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(std_normal_cdf(1.959963984540054), 0.975, epsilon = 1e-15);
    }

    #[test]
    fn quantile_matches_reference_values() {
        // reference values from an independent double-precision implementation
        let reference = [
            (1e-300, -37.0470962993612),
            (1e-20, -9.262340089798409),
            (1e-10, -6.361340902404056),
            (0.001, -3.090232306167813),
            (0.02425, -1.972961051311885),
            (0.1, -1.2815515655446004),
            (0.3, -0.5244005127080409),
            (0.5, 0.0),
            (0.7, 0.5244005127080407),
            (0.975, 1.959963984540054),
            (0.999999, 4.753424308817087),
            (1.0 - 1e-12, 7.0344869100478356),
        ];
        for (u, z) in reference {
            let got = std_normal_quantile(u);
            assert!((got - z).abs() <= 1e-14 * z.abs().max(1.0), "{u}: {got} vs {z}");
        }
        assert_eq!(std_normal_quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(std_normal_quantile(1.0), f64::INFINITY);
    }

    #[test]
    fn identical_groups_leave_f_star_unchanged() {
        let m = AnalyticGroupModel::gaussian_pair(0.4, (2.0, 1.5), (2.0, 1.5)).unwrap();
        for &x in &[-2.0, 0.0, 0.7, 3.1] {
            for s in [G1, G2] {
                assert_abs_diff_eq!(m.g_star(x, s).unwrap(), m.f_star(x, s).unwrap(), epsilon = 1e-12);
                assert_abs_diff_eq!(m.t_star(x, s).unwrap(), m.f_star(x, s).unwrap(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_closed_forms() {
        let m = pair();
        let mut rng = stream(5, Domain::Evaluation, 0);
        for _ in 0..1000 {
            let x: f64 = rng.sample(StandardNormal);
            let v = m.f_star(x, G1).unwrap();
            let t = 4.0 + 0.5 * (v - 1.0) / 2.0;
            assert_abs_diff_eq!(m.t_star(x, G1).unwrap(), t, epsilon = 1e-8);
            assert_abs_diff_eq!(m.g_star(x, G1).unwrap(), 0.3 * v + 0.7 * t, epsilon = 1e-8);
            assert_abs_diff_eq!(m.delta_extra(x, G1).unwrap(), 0.4 * (t - v), epsilon = 1e-8);
            let decomposed = 0.3 * v + 0.7 * m.t_star(x, G1).unwrap();
            assert_abs_diff_eq!(m.g_star(x, G1).unwrap(), decomposed, epsilon = 1e-12);
        }
    }

    #[test]
    fn median_point_maps_to_the_mean_of_medians() {
        let m = AnalyticGroupModel::new(vec![
            AnalyticGroup {
                name: "a".into(),
                weight: 0.5,
                law: GroupLaw::Uniform { low: 0.0, high: 10.0 },
            },
            AnalyticGroup {
                name: "b".into(),
                weight: 0.5,
                law: GroupLaw::Gaussian { mean: -3.0, std: 2.0 },
            },
        ])
        .unwrap();
        // x = 0.5 is the median feature of the uniform group
        assert_abs_diff_eq!(m.g_star(0.5, G1).unwrap(), (5.0 + -3.0) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.g_star(0.0, G2).unwrap(), (5.0 + -3.0) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn delta_sign() {
        let equal = AnalyticGroupModel::gaussian_pair(0.5, (0.0, 1.0), (3.0, 1.0)).unwrap();
        assert_eq!(equal.delta_extra(0.2, G1).unwrap(), 0.0);
        // majority group 2 is paid more at the same rank
        let m = AnalyticGroupModel::gaussian_pair(0.3, (0.0, 1.0), (3.0, 1.0)).unwrap();
        assert!(m.delta_extra(0.2, G1).unwrap() > 0.0);
        let x_bar = m.matched_point(0.2, G1).unwrap();
        assert!(m.f_star(x_bar, G2).unwrap() > m.f_star(x_bar, G1).unwrap());
        // fair cost minus unfair cost of the pair
        let fair = 2.0 * m.g_star(0.2, G1).unwrap();
        let unfair = m.f_star(0.2, G1).unwrap() + m.f_star(x_bar, G2).unwrap();
        assert_abs_diff_eq!(m.delta_extra(0.2, G1).unwrap(), fair - unfair, epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        let m = pair();
        assert!(matches!(m.g_star(0.0, GroupId(2)), Err(Error::UnknownGroup(_))));
        let three = AnalyticGroupModel::new(vec![
            AnalyticGroup { name: "a".into(), weight: 0.2, law: GroupLaw::Gaussian { mean: 0.0, std: 1.0 } },
            AnalyticGroup { name: "b".into(), weight: 0.3, law: GroupLaw::Gaussian { mean: 0.0, std: 1.0 } },
            AnalyticGroup { name: "c".into(), weight: 0.5, law: GroupLaw::Gaussian { mean: 0.0, std: 1.0 } },
        ])
        .unwrap();
        assert!(matches!(three.t_star(0.0, G1), Err(Error::NotBinary(3))));
        assert!(matches!(three.delta_extra(0.0, G1), Err(Error::NotBinary(3))));
        assert!(AnalyticGroupModel::gaussian_pair(0.3, (0.0, 0.0), (1.0, 1.0)).is_err());
        assert!(AnalyticGroupModel::gaussian_pair(1.0, (0.0, 1.0), (1.0, 1.0)).is_err());
    }

    fn oracle_samples(m: &AnalyticGroupModel, s: GroupId, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, Domain::Evaluation, s.0 as u64);
        (0..n)
            .map(|_| m.g_star(m.sample_feature(s, &mut rng).unwrap(), s).unwrap())
            .collect()
    }

    #[test]
    fn oracle_output_law_is_group_blind() {
        let m = AnalyticGroupModel::new(vec![
            AnalyticGroup { name: "a".into(), weight: 0.35, law: GroupLaw::Uniform { low: -1.0, high: 2.0 } },
            AnalyticGroup { name: "b".into(), weight: 0.65, law: GroupLaw::Gaussian { mean: 3.0, std: 1.2 } },
        ])
        .unwrap();
        let n = 100_000;
        let a = oracle_samples(&m, G1, n, 1);
        let b = oracle_samples(&m, G2, n, 2);
        assert!(ks_two_sample(&a, &b).unwrap() <= dkw_two_sample_envelope(n, n, 0.001));
        let fa: Vec<f64> = {
            let mut rng = stream(1, Domain::Evaluation, 0);
            (0..n).map(|_| m.f_star(m.sample_feature(G1, &mut rng).unwrap(), G1).unwrap()).collect()
        };
        let fb: Vec<f64> = {
            let mut rng = stream(2, Domain::Evaluation, 1);
            (0..n).map(|_| m.f_star(m.sample_feature(G2, &mut rng).unwrap(), G2).unwrap()).collect()
        };
        assert!(ks_two_sample(&fa, &fb).unwrap() > 0.5);
    }

    #[test]
    fn oracle_law_is_the_barycenter_of_group_laws() {
        let m = pair();
        let n = 20_000;
        let groups: Vec<EmpiricalMeasure> = [G1, G2]
            .iter()
            .map(|&s| {
                let mut rng = stream(3, Domain::Evaluation, s.0 as u64);
                let v = (0..n).map(|_| m.f_star(m.sample_feature(s, &mut rng).unwrap(), s).unwrap()).collect();
                EmpiricalMeasure::new(v).unwrap()
            })
            .collect();
        let bary = barycenter(&WeightedMeasures::new(groups, m.weights()).unwrap(), n).unwrap();
        // g*(X, S) over the mixture
        let mut rng = stream(4, Domain::Evaluation, 9);
        let pooled: Vec<f64> = (0..n)
            .map(|_| {
                let s = m.sample_group(&mut rng);
                m.g_star(m.sample_feature(s, &mut rng).unwrap(), s).unwrap()
            })
            .collect();
        let d = w2(&bary, &EmpiricalMeasure::new(pooled).unwrap());
        // Monte-Carlo W2 of n-samples from laws with std ~1.3 is ~ 5 n^{-1/2}
        assert!(d < 5.0 / (n as f64).sqrt() * 3.0, "{d}");
    }

    #[test]
    fn oracle_beats_other_fair_predictors() {
        let m = AnalyticGroupModel::new(vec![
            AnalyticGroup { name: "a".into(), weight: 0.25, law: GroupLaw::Uniform { low: 0.0, high: 4.0 } },
            AnalyticGroup { name: "b".into(), weight: 0.75, law: GroupLaw::Gaussian { mean: 5.0, std: 1.0 } },
        ])
        .unwrap();
        let grid = 2000;
        let best = m.fair_risk(|u| m.barycenter_quantile(u), grid);
        let mut rng = stream(8, Domain::Replication, 0);
        for _ in 0..1000 {
            let w: f64 = rng.random();
            let amp: f64 = rng.random_range(-0.5..0.5);
            let freq: f64 = rng.random_range(0.5..4.0);
            let shift: f64 = rng.random_range(-0.3..0.3);
            let q = |u: f64| {
                w * m.groups[0].law.quantile(u) + (1.0 - w) * m.groups[1].law.quantile(u)
                    + amp * (std::f64::consts::PI * freq * u).sin()
                    + shift
            };
            assert!(best <= m.fair_risk(q, grid) + 1e-12);
        }
    }
}
