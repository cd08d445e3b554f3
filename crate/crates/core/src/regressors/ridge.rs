use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_dim, Regressor, Standardizer};
use crate::data::{GroupId, GroupedDataset};
use crate::error::{Error, Result};

/// Regularized least squares on `[z(x), 1{s = 1}, ..., 1{s = K-1}]` with an
/// unpenalized intercept. Group 0 is the reference level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub lambda: f64,
    pub n_groups: usize,
    pub standardizer: Standardizer,
    /// `d` feature weights (standardized units) followed by `K - 1` group effects.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

/// Pivots of the Cholesky factor below this fraction of the largest diagonal
/// entry mark the system as singular.
const PIVOT_TOL: f64 = 1e-12;

/// Solves `(Z'Z + lambda n I) beta = Z'y` on centred columns; the intercept is
/// recovered from the means.
pub fn fit_ridge(data: &GroupedDataset, lambda: f64) -> Result<RidgeModel> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain {
            what: "lambda",
            value: lambda,
        });
    }
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let y = data
        .labels()
        .ok_or_else(|| Error::Invariant("ridge needs a labeled dataset".into()))?;
    let standardizer = Standardizer::fit(data);
    let n_groups = data.n_groups();
    let n = data.len();
    let p = data.dim() + n_groups.saturating_sub(1);

    let mut z = DMatrix::<f64>::zeros(n, p);
    for (i, r) in data.rows().iter().enumerate() {
        for (j, v) in standardizer.apply(&r.x).into_iter().enumerate() {
            z[(i, j)] = v;
        }
        if r.s.index() > 0 {
            z[(i, data.dim() + r.s.index() - 1)] = 1.0;
        }
    }
    let col_means: Vec<f64> = (0..p).map(|j| z.column(j).mean()).collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    for (j, &m) in col_means.iter().enumerate() {
        z.column_mut(j).add_scalar_mut(-m);
    }
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let mut gram = z.transpose() * &z;
    for j in 0..p {
        gram[(j, j)] += lambda * n as f64;
    }
    let rhs = z.transpose() * yc;
    let max_diag = (0..p).map(|j| gram[(j, j)]).fold(0.0, f64::max);
    let chol = gram.cholesky().ok_or(Error::SingularSystem)?;
    let l = chol.l_dirty();
    if (0..p).any(|j| l[(j, j)] * l[(j, j)] <= PIVOT_TOL * max_diag) {
        return Err(Error::SingularSystem);
    }
    let beta = chol.solve(&rhs);
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let intercept = y_mean - beta.iter().zip(&col_means).map(|(b, m)| b * m).sum::<f64>();
    Ok(RidgeModel {
        lambda,
        n_groups,
        standardizer,
        coefficients: beta.iter().copied().collect(),
        intercept,
    })
}

impl RidgeModel {
    /// Feature slopes and intercept in raw (unstandardized) units, reference group.
    pub fn raw_coefficients(&self) -> (Vec<f64>, f64) {
        let d = self.standardizer.mean.len();
        let slopes: Vec<f64> = (0..d)
            .map(|j| self.coefficients[j] / self.standardizer.scale[j])
            .collect();
        let shift: f64 = slopes.iter().zip(&self.standardizer.mean).map(|(b, m)| b * m).sum();
        (slopes, self.intercept - shift)
    }

    /// Additive effect of group `s` relative to group 0.
    pub fn group_effect(&self, s: GroupId) -> f64 {
        match s.index() {
            0 => 0.0,
            g => self.coefficients[self.dim() + g - 1],
        }
    }
}

impl Regressor for RidgeModel {
    fn dim(&self) -> usize {
        self.standardizer.mean.len()
    }

    fn predict(&self, x: &[f64], s: GroupId) -> Result<f64> {
        check_dim(self.dim(), x)?;
        if s.index() >= self.n_groups {
            return Err(Error::UnknownGroup(s));
        }
        let z = self.standardizer.apply(x);
        let linear: f64 = z.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum();
        Ok(self.intercept + linear + self.group_effect(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Row;
    use crate::rng::{stream, Domain};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn dataset(xs: &[Vec<f64>], groups: &[u32], ys: &[f64], n_groups: usize) -> GroupedDataset {
        let rows = xs
            .iter()
            .zip(groups)
            .zip(ys)
            .enumerate()
            .map(|(i, ((x, &s), &y))| Row {
                id: i as u64,
                x: x.clone(),
                s: GroupId(s),
                y: Some(y),
            })
            .collect();
        let names = (0..n_groups).map(|g| format!("g{g}")).collect();
        GroupedDataset::new(xs[0].len(), names, rows).unwrap()
    }

    fn random_problem(seed: u64, n: usize, d: usize) -> GroupedDataset {
        let mut rng = stream(seed, Domain::Synthetic, 0);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal) + 1.0).collect())
            .collect();
        let groups: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .zip(&groups)
            .map(|(x, &s)| x.iter().sum::<f64>() + s as f64 + rng.sample::<f64, _>(StandardNormal))
            .collect();
        dataset(&xs, &groups, &ys, 2)
    }

    #[test]
    fn exact_line_is_recovered() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ys: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        let model = fit_ridge(&dataset(&xs, &[0; 10], &ys, 1), 0.0).unwrap();
        let (slopes, intercept) = model.raw_coefficients();
        assert_abs_diff_eq!(slopes[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(intercept, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(model.predict(&[0.0], GroupId(0)).unwrap(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn heavy_penalty_shrinks_to_the_mean() {
        let data = random_problem(4, 40, 3);
        let model = fit_ridge(&data, 1e12).unwrap();
        let mean = data.labels().unwrap().iter().sum::<f64>() / 40.0;
        assert!(model.coefficients.iter().all(|c| c.abs() < 1e-9));
        assert_abs_diff_eq!(model.intercept, mean, epsilon = 1e-9);
    }

    #[test]
    fn reference_group_prediction_at_feature_mean_is_the_intercept() {
        let data = random_problem(8, 30, 2);
        let model = fit_ridge(&data, 0.05).unwrap();
        let at_mean = model.standardizer.mean.clone();
        assert_abs_diff_eq!(model.predict(&at_mean, GroupId(0)).unwrap(), model.intercept, epsilon = 1e-12);
        assert_abs_diff_eq!(
            model.predict(&at_mean, GroupId(1)).unwrap(),
            model.intercept + model.group_effect(GroupId(1)),
            epsilon = 1e-12
        );
    }

    /// Plain gradient descent on (1/n)|y - Xw|^2 + lambda |w_penalized|^2.
    fn gradient_descent_oracle(data: &GroupedDataset, lambda: f64) -> impl Fn(&[f64], GroupId) -> f64 {
        let std = Standardizer::fit(data);
        let design = move |x: &[f64], s: GroupId| {
            let mut row = std.apply(x);
            row.push(if s.index() == 1 { 1.0 } else { 0.0 });
            row.push(1.0);
            row
        };
        let xs: Vec<Vec<f64>> = data.rows().iter().map(|r| design(&r.x, r.s)).collect();
        let ys = data.labels().unwrap();
        let p = xs[0].len();
        let n = xs.len() as f64;
        let mut w = vec![0.0; p];
        for _ in 0..200_000 {
            let mut grad = vec![0.0; p];
            for (x, y) in xs.iter().zip(&ys) {
                let r = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - y;
                for j in 0..p {
                    grad[j] += 2.0 * r * x[j] / n;
                }
            }
            for j in 0..p - 1 {
                grad[j] += 2.0 * lambda * w[j];
            }
            for j in 0..p {
                w[j] -= 0.05 * grad[j];
            }
        }
        move |x: &[f64], s: GroupId| design(x, s).iter().zip(&w).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn matches_gradient_descent() {
        let data = random_problem(21, 50, 3);
        let model = fit_ridge(&data, 0.1).unwrap();
        let oracle = gradient_descent_oracle(&data, 0.1);
        for r in data.rows().iter().take(20) {
            assert_abs_diff_eq!(model.predict(&r.x, r.s).unwrap(), oracle(&r.x, r.s), epsilon = 1e-6);
        }
    }

    #[test]
    fn singular_without_penalty() {
        let xs = vec![vec![1.0], vec![1.0], vec![1.0]];
        let data = dataset(&xs, &[0, 0, 0], &[1.0, 2.0, 3.0], 1);
        assert!(matches!(fit_ridge(&data, 0.0), Err(Error::SingularSystem)));
        assert!(fit_ridge(&data, 0.1).is_ok());
    }

    #[test]
    fn errors() {
        let data = random_problem(1, 10, 2);
        let model = fit_ridge(&data, 0.1).unwrap();
        assert!(matches!(model.predict(&[1.0], GroupId(0)), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(model.predict(&[1.0, 2.0], GroupId(5)), Err(Error::UnknownGroup(_))));
        assert!(fit_ridge(&data.without_labels(), 0.1).is_err());
        assert!(fit_ridge(&data, -1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn predictions_are_affine(seed in any::<u64>(), lambda in 0.001f64..10.0,
            a in prop::collection::vec(-3f64..3.0, 3), b in prop::collection::vec(-3f64..3.0, 3)) {
            let model = fit_ridge(&random_problem(seed, 25, 3), lambda).unwrap();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u + v).collect();
            for s in [GroupId(0), GroupId(1)] {
                let f = |x: &[f64]| model.predict(x, s).unwrap();
                let lhs = f(&sum);
                let rhs = f(&a) + f(&b) - f(&[0.0; 3]);
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
            }
        }
    }
}
