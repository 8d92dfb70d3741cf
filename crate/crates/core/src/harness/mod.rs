//! Datasets, experiment files, and the studies behind the CLI.

mod compare;
mod dataset;
mod density;
mod experiment;

use std::path::Path;

use serde_json::{json, Value as Json};
use thiserror::Error;

pub use compare::{policy_compare, run_one, Comparison, RunOutcome};
pub use dataset::{embedded_names, load_dataset, load_dataset_with, parse_csv, DatasetError, DEFAULT_LABEL_COLUMN};
pub use density::{density_study, DensityMode, DensityResult, DensityRow, EXHAUSTIVE_LIMIT};
pub use experiment::{Experiment, ExperimentConfig, LearnerConfig, OptimizerConfig, SCHEMA_VERSION};

use crate::configspace::SpaceError;
use crate::learners::LearnerError;
use crate::nmad::{self, NmadError, NmadReport, OptimalSet};
use crate::pipeline::PrototypeError;
use crate::twostage::{ObjectiveError, PolicyError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("experiment file: {0}")]
    Config(String),
    #[error("unsupported schema version {0}; this build reads version {SCHEMA_VERSION}")]
    Schema(u32),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Prototype(#[from] PrototypeError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Nmad(#[from] NmadError),
    #[error("space has {0} configurations, above the exhaustive limit {EXHAUSTIVE_LIMIT}; use a budget instead")]
    TooLarge(u128),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// Loads an optimal-set fixture: `echr` and `newsgroup` name the embedded
/// ones, anything else is a path.
pub fn load_optimal_set(name_or_path: &str) -> Result<OptimalSet, HarnessError> {
    let text = match name_or_path {
        "echr" => nmad::ECHR_FIXTURE.to_string(),
        "newsgroup" => nmad::NEWSGROUP_FIXTURE.to_string(),
        path => std::fs::read_to_string(path).map_err(|e| HarnessError::io(Path::new(path), e))?,
    };
    Ok(OptimalSet::from_json_str(&text)?)
}

pub fn nmad_report(name_or_path: &str) -> Result<(OptimalSet, NmadReport), HarnessError> {
    let set = load_optimal_set(name_or_path)?;
    let report = nmad::report(&set)?;
    Ok((set, report))
}

/// Cardinalities of the pipeline space (overall, per slot including EMPTY,
/// and per layer), the learner grid, and their product.
pub fn space_summary(exp: &Experiment) -> Json {
    let ps = exp.pipeline_space();
    let slots: serde_json::Map<String, Json> = exp
        .prototype
        .slots()
        .into_iter()
        .map(|s| (s.to_string(), json!(ps.slot_options(s).unwrap_or(0) as u64)))
        .collect();
    let layers: serde_json::Map<String, Json> = exp
        .prototype
        .doc()
        .layers
        .iter()
        .map(|l| {
            let n: u128 = l.slots.iter().map(|s| ps.slot_options(&s.id).unwrap_or(0)).product();
            (l.name.clone(), json!(n as u64))
        })
        .collect();
    let pipelines = ps.space().cardinality();
    let algorithms = exp.learner.config_space().cardinality();
    json!({
        "dataset": exp.dataset.name,
        "pipeline_configurations": pipelines as u64,
        "slots": slots,
        "layers": layers,
        "learner": exp.learner.kind().name(),
        "learner_configurations": algorithms as u64,
        "joint_configurations": (pipelines.saturating_mul(algorithms)).to_string(),
    })
}
