//! Loading and validation of registries, plans, taxonomies and engine
//! configuration, plus the synthetic instance generator.

mod config;
mod registry;
mod synthetic;
mod taxonomy;
mod training;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cba::CbaError;
use crate::composer::ComposeError;
use crate::leveling::LevelError;
use crate::ontology::MatchError;
use crate::qos::QosError;

pub use config::EngineConfig;
pub use registry::{parse_registry, write_registry, Registry, RegistryRecord};
pub use synthetic::{generate_synthetic, qws_attribute, synthetic_request, SyntheticInstance};
pub use taxonomy::{parse_taxonomy, write_taxonomy};
pub use training::{parse_training_csv, write_training_csv};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown attribute column `{0}`; expected `name:+` or `name:-`")]
    UnknownAttribute(String),
    #[error("line {line}: non-finite value for `{attribute}`")]
    NonFiniteValue { line: usize, attribute: String },
    #[error("registry has no service rows")]
    EmptyRegistry,
    #[error("service `{service}` references unknown task `{task}`")]
    UnknownTask { service: String, task: String },
    #[error("edge {edge}: parameter pair ({out_index}, {in_index}) out of range for `{from}` -> `{to}`")]
    UnknownParameter {
        edge: String,
        from: String,
        to: String,
        out_index: usize,
        in_index: usize,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Qos(#[from] QosError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Plan(#[from] ComposeError),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Cba(#[from] CbaError),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), DataError> {
    fs::write(path, contents).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_registry(path: &Path) -> Result<Registry, DataError> {
    parse_registry(&read_to_string(path)?)
}

pub fn load_plan(path: &Path) -> Result<crate::composer::CompositionPlan, DataError> {
    Ok(serde_json::from_str(&read_to_string(path)?)?)
}

pub fn write_plan(plan: &crate::composer::CompositionPlan) -> String {
    let mut s = serde_json::to_string_pretty(plan).expect("plan serializes");
    s.push('\n');
    s
}

pub fn load_taxonomy(path: &Path) -> Result<crate::ontology::Taxonomy, DataError> {
    parse_taxonomy(&read_to_string(path)?)
}

pub fn load_config(path: &Path) -> Result<EngineConfig, DataError> {
    let config: EngineConfig = serde_json::from_str(&read_to_string(path)?)?;
    config.validate()?;
    Ok(config)
}
