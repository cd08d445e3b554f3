use std::path::Path;

use dpfair::data::{generate_synthetic, CsvSchema};
use dpfair::rng::{derive_seed, Domain};

use super::{unlabeled_schema, write_dataset};
use crate::error::{create_dir, CliError, CliResult};
use crate::load_config;

/// Writes `train.csv`, `unlabeled.csv` and `test.csv` (the latter two only
/// when their sizes are positive). The top-level seed drives all three draws.
pub fn run(config_path: Option<&Path>, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let config_path = config_path.ok_or_else(|| CliError::Usage("generate needs --config".into()))?;
    let config = load_config(Some(config_path), seed)?;
    let gen = config
        .generate
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("{} has no [generate] section", config_path.display())))?;
    let schema = CsvSchema {
        features: (0..gen.spec.dim()).map(|j| format!("x{j}")).collect(),
        group: "group".into(),
        label: Some("y".into()),
    };
    create_dir(out)?;
    let draw = |tag: u64, n: usize| generate_synthetic(&gen.spec.with_seed(derive_seed(config.seed, Domain::Synthetic, tag)), n);
    write_dataset(&out.join("train.csv"), &draw(0, gen.n_train)?, &schema)?;
    if gen.n_unlabeled > 0 {
        write_dataset(&out.join("unlabeled.csv"), &draw(1, gen.n_unlabeled)?, &unlabeled_schema(&schema))?;
    }
    if gen.n_test > 0 {
        write_dataset(&out.join("test.csv"), &draw(2, gen.n_test)?, &schema)?;
    }
    println!("wrote synthetic data to {}", out.display());
    Ok(())
}
