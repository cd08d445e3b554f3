use std::path::Path;

use dpfair::experiments::{self, ExperimentName};

use crate::error::{create_dir, write_file, CliResult};
use crate::load_config;

/// Runs one experiment (or all) and writes `<name>.json` plus one
/// `<name>.<table>.csv` per table. Returns whether every check passed.
pub fn run(name: &str, config: Option<&Path>, seed: Option<u64>, out: &Path) -> CliResult<bool> {
    let names: Vec<ExperimentName> = if name == "all" {
        ExperimentName::ALL.to_vec()
    } else {
        vec![name.parse()?]
    };
    let config = load_config(config, seed)?;
    create_dir(out)?;
    let mut all_passed = true;
    for name in names {
        let report = experiments::run(name, &config.experiments, config.seed)?;
        write_file(&out.join(format!("{name}.json")), report.to_json()?)?;
        for table in &report.tables {
            write_file(&out.join(format!("{name}.{}.csv", table.name)), table.to_csv()?)?;
        }
        for c in &report.checks {
            println!(
                "{} {name}/{}: value={} bound={} ({})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.bound,
                c.detail
            );
        }
        all_passed &= report.passed;
    }
    Ok(all_passed)
}
