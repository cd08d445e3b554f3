//! Inputs shared by the benchmarks.

use dpfair::data::{generate_synthetic, SyntheticSpec};
use dpfair::measures::EmpiricalMeasure;
use dpfair::regressors::fit_ridge;
use dpfair::rng::{stream, Domain};
use dpfair::{FairPostprocessor, GroupedDataset, RidgeModel};

/// `n` uniform draws on `[0, 1)` as a measure.
pub fn uniform_measure(n: usize, seed: u64) -> EmpiricalMeasure {
    use rand::Rng;
    let mut rng = stream(seed, Domain::Evaluation, 0);
    EmpiricalMeasure::new((0..n).map(|_| rng.random()).collect()).expect("nonempty")
}

/// A ridge base model and its post-processor fitted on `n` synthetic rows
/// each, plus a test set of `n` rows.
pub fn fitted_pipeline(n: usize) -> (RidgeModel, FairPostprocessor, GroupedDataset) {
    let spec = SyntheticSpec::default();
    let train = generate_synthetic(&spec.with_seed(1), n).expect("valid spec");
    let unlabeled = generate_synthetic(&spec.with_seed(2), n).expect("valid spec").without_labels();
    let test = generate_synthetic(&spec.with_seed(3), n).expect("valid spec");
    let base = fit_ridge(&train, 0.01).expect("well-posed");
    let post = FairPostprocessor::fit(&base, &unlabeled, None, Default::default()).expect("fits");
    (base, post, test)
}
