use std::path::PathBuf;

use clap::{ArgGroup, Args};
use dpfair::Regressor;

use super::{load_base, load_post, read_dataset, unlabeled_schema};
use crate::error::{write_file, CliError, CliResult};

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["fair", "unfair"])))]
pub struct PredictArgs {
    /// Base model JSON written by `fit`.
    #[arg(long)]
    pub base: PathBuf,
    /// Post-processor JSON written by `fit` (needed with --fair).
    #[arg(long)]
    pub post: Option<PathBuf>,
    /// CSV with the model's feature and group columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV with columns row_id, group, prediction.
    #[arg(long)]
    pub output: PathBuf,
    /// Emit the post-processed fair predictions.
    #[arg(long)]
    pub fair: bool,
    /// Emit the raw base-model predictions.
    #[arg(long)]
    pub unfair: bool,
}

pub fn run(args: &PredictArgs) -> CliResult<()> {
    let base = load_base(&args.base)?;
    let data = read_dataset(&args.input, &unlabeled_schema(&base.schema), Some(&base.group_names))?;
    let preds = if args.fair {
        let path = args
            .post
            .as_ref()
            .ok_or_else(|| CliError::Usage("--fair needs --post".into()))?;
        load_post(path)?.transform_batch(&base.model, &data)?
    } else {
        base.model.predict_all(&data)?
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(["row_id", "group", "prediction"]).map_err(csv_err)?;
    for (r, p) in data.rows().iter().zip(&preds) {
        w.write_record([r.id.to_string(), base.group_names[r.s.index()].clone(), p.to_string()])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    write_file(&args.output, bytes)?;
    println!("wrote {} predictions to {}", preds.len(), args.output.display());
    Ok(())
}
