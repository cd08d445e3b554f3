use std::path::PathBuf;

use clap::Args;
use dpfair::metrics::report;
use dpfair::{EvalReport, Regressor};
use serde::Serialize;

use super::{load_base, load_post, read_dataset};
use crate::error::{create_dir, write_file, CliError, CliResult};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Base model JSON written by `fit`.
    #[arg(long)]
    pub base: PathBuf,
    /// Post-processor JSON; without it only the base model is scored.
    #[arg(long)]
    pub post: Option<PathBuf>,
    /// Labeled CSV in the model's schema.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for evaluation.json and evaluation.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Evaluation {
    unfair: EvalReport,
    fair: Option<EvalReport>,
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let base = load_base(&args.base)?;
    if base.schema.label.is_none() {
        return Err(CliError::Usage("the model schema names no label column".into()));
    }
    let data = read_dataset(&args.input, &base.schema, Some(&base.group_names))?;
    let labels = data
        .labels()
        .ok_or_else(|| CliError::Usage("evaluation needs labeled rows".into()))?;
    let unfair = report(&base.model.predict_all(&data)?, &labels, &data)?;
    let fair = match &args.post {
        Some(p) => Some(report(&load_post(p)?.transform_batch(&base.model, &data)?, &labels, &data)?),
        None => None,
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    let mut header = vec!["predictor".to_string()];
    header.extend(unfair.csv_header());
    w.write_record(&header).map_err(csv_err)?;
    for (name, r) in [("unfair", Some(&unfair)), ("fair", fair.as_ref())] {
        if let Some(r) = r {
            println!("{name}: mse={} ks_max={}", r.mse, r.ks_max);
            let mut row = vec![name.to_string()];
            row.extend(r.csv_row());
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    let csv_bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;

    create_dir(&args.out)?;
    let json = serde_json::to_string_pretty(&Evaluation { unfair, fair }).map_err(dpfair::Error::from)?;
    write_file(&args.out.join("evaluation.json"), json)?;
    write_file(&args.out.join("evaluation.csv"), csv_bytes)?;
    Ok(())
}
