use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use dpfair::config::{FitConfig, ModelConfig};
use dpfair::data::{select_hyperparams, train_test_split, CvScore};
use dpfair::metrics::report;
use dpfair::postprocess::{PostprocessConfig, MODEL_VERSION};
use dpfair::regressors::{fit_knn, fit_ridge, BaseModelFile, MODEL_FILE_VERSION};
use dpfair::rng::{derive_seed, Domain};
use dpfair::{BaseModel, FairPostprocessor, GroupedDataset};
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{read_dataset, unlabeled_schema};
use crate::error::{create_dir, write_file, CliError, CliResult};
use crate::load_config;

pub const BASE_FILE: &str = "base_model.json";
pub const POST_FILE: &str = "postprocessor.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Choice {
    Ridge { lambda: f64 },
    Knn { k: usize, group_scale: f64 },
}

impl Choice {
    fn fit(&self, data: &GroupedDataset) -> dpfair::Result<BaseModel> {
        Ok(match *self {
            Choice::Ridge { lambda } => BaseModel::Ridge(fit_ridge(data, lambda)?),
            Choice::Knn { k, group_scale } => BaseModel::Knn(fit_knn(data, k, group_scale)?),
        })
    }
}

#[derive(Serialize)]
struct CvSummary {
    grid: Vec<Choice>,
    scores: Vec<CvScore>,
    shortlist: Vec<usize>,
    selected: usize,
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    config_sha256: String,
    dpfair_version: &'static str,
    cli_version: &'static str,
    base_model_file_version: u32,
    postprocessor_file_version: u32,
    /// Input file name to SHA-256 of its contents.
    inputs: BTreeMap<String, String>,
    n_base_rows: usize,
    n_unlabeled_rows: usize,
    group_names: Vec<String>,
    model: Choice,
    cv: Option<CvSummary>,
    sigma: f64,
}

fn sha256_of(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::reading(path)(dpfair::Error::Io {
        path: path.to_path_buf(),
        source: e,
    }))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn grid(fit: &FitConfig, n_rows: usize) -> Vec<Choice> {
    match fit.model {
        ModelConfig::Ridge { lambda: Some(lambda) } => vec![Choice::Ridge { lambda }],
        ModelConfig::Ridge { lambda: None } => fit.cv.lambdas.iter().map(|&lambda| Choice::Ridge { lambda }).collect(),
        ModelConfig::Knn { k: Some(k), group_scale } => vec![Choice::Knn { k, group_scale }],
        ModelConfig::Knn { k: None, group_scale } => {
            // every training fold must hold at least k rows
            let smallest_fold = n_rows - n_rows.div_ceil(fit.cv.folds);
            fit.cv
                .neighbors
                .iter()
                .filter(|&&k| k <= smallest_fold)
                .map(|&k| Choice::Knn { k, group_scale })
                .collect()
        }
    }
}

pub fn run(config_path: Option<&Path>, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let config_path = config_path.ok_or_else(|| CliError::Usage("fit needs --config".into()))?;
    let config = load_config(Some(config_path), seed)?;
    let fit = config
        .fit
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("{} has no [fit] section", config_path.display())))?;
    let seed = config.seed;

    let train = read_dataset(&fit.train, &fit.schema, None)?;
    let mut inputs = BTreeMap::new();
    inputs.insert(file_name(&fit.train), sha256_of(&fit.train)?);
    let (base_data, unlabeled) = match &fit.unlabeled {
        Some(path) => {
            let u = read_dataset(path, &unlabeled_schema(&fit.schema), Some(train.group_names()))?;
            inputs.insert(file_name(path), sha256_of(path)?);
            (train, u)
        }
        None => {
            let (a, b) = train_test_split(&train, 0.5, derive_seed(seed, Domain::TrainTest, 0))?;
            (a, b.without_labels())
        }
    };
    if base_data.is_empty() {
        return Err(CliError::Core(dpfair::Error::EmptyInput));
    }

    let grid = grid(fit, base_data.len());
    if grid.is_empty() {
        return Err(CliError::Usage("no hyperparameter candidates fit the training data".into()));
    }
    let post_config = PostprocessConfig { sigma: fit.sigma, seed };
    let (choice, cv) = if grid.len() == 1 {
        (grid[0], None)
    } else {
        let mut cv_config = fit.cv.clone();
        cv_config.seed = seed;
        let selection = select_hyperparams(&grid, &base_data, &cv_config, |h, tr, va, fold| {
            let model = h.fit(tr)?;
            let post = FairPostprocessor::fit(
                &model,
                &tr.without_labels(),
                None,
                PostprocessConfig {
                    seed: derive_seed(seed, Domain::Folds, fold as u64),
                    ..post_config
                },
            )?;
            let preds = post.transform_batch(&model, va)?;
            report(&preds, &va.labels().expect("training data is labeled"), va)
        })?;
        log::info!("cross-validation selected {:?}", selection.params);
        let summary = CvSummary {
            grid: grid.clone(),
            scores: selection.scores,
            shortlist: selection.shortlist,
            selected: selection.index,
        };
        (selection.params, Some(summary))
    };

    let model = choice.fit(&base_data)?;
    let post = FairPostprocessor::fit(&model, &unlabeled, None, post_config)?;
    let base_file = BaseModelFile::new(fit.schema.clone(), base_data.group_names().to_vec(), model);

    let config_bytes = fs::read(config_path).map_err(|e| CliError::Core(dpfair::Error::Io {
        path: config_path.to_path_buf(),
        source: e,
    }))?;
    let manifest = Manifest {
        seed,
        config_sha256: hex::encode(Sha256::digest(&config_bytes)),
        dpfair_version: dpfair::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        base_model_file_version: MODEL_FILE_VERSION,
        postprocessor_file_version: MODEL_VERSION,
        inputs,
        n_base_rows: base_data.len(),
        n_unlabeled_rows: unlabeled.len(),
        group_names: base_data.group_names().to_vec(),
        model: choice,
        cv,
        sigma: fit.sigma,
    };

    create_dir(out)?;
    write_file(&out.join(BASE_FILE), base_file.to_json()?)?;
    write_file(&out.join(POST_FILE), post.to_json()?)?;
    write_file(
        &out.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest).map_err(dpfair::Error::from)?,
    )?;
    println!(
        "fitted {choice:?} on {} rows, post-processor on {} rows; wrote {}",
        base_data.len(),
        unlabeled.len(),
        out.display()
    );
    Ok(())
}
