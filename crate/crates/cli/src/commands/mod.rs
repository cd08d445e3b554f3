pub mod evaluate;
pub mod experiment;
pub mod fit;
pub mod generate;
pub mod predict;

use std::path::Path;

use dpfair::data::{load_csv, write_csv, CsvSchema};
use dpfair::regressors::BaseModelFile;
use dpfair::{FairPostprocessor, GroupedDataset};

use crate::error::{write_file, CliError, CliResult};

pub(crate) fn read_dataset(path: &Path, schema: &CsvSchema, vocabulary: Option<&[String]>) -> CliResult<GroupedDataset> {
    load_csv(path, schema, vocabulary).map_err(CliError::reading(path))
}

pub(crate) fn write_dataset(path: &Path, data: &GroupedDataset, schema: &CsvSchema) -> CliResult<()> {
    let mut buf = Vec::new();
    write_csv(&mut buf, data, schema)?;
    write_file(path, buf)
}

pub(crate) fn load_base(path: &Path) -> CliResult<BaseModelFile> {
    BaseModelFile::load(path).map_err(CliError::reading(path))
}

pub(crate) fn load_post(path: &Path) -> CliResult<FairPostprocessor> {
    FairPostprocessor::load(path).map_err(CliError::reading(path))
}

/// The schema of a model file without its label column.
pub(crate) fn unlabeled_schema(schema: &CsvSchema) -> CsvSchema {
    CsvSchema {
        label: None,
        ..schema.clone()
    }
}
