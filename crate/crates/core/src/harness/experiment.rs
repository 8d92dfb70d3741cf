use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value as Json};

use crate::configspace::ConfigSpace;
use crate::data::Dataset;
use crate::exec::Execution;
use crate::learners::{LearnerKind, LearnerSpec};
use crate::metaopt::{OptimizerKind, TpeParams};
use crate::operators::{standard_catalog, Catalog};
use crate::pipeline::{PipelinePrototype, PipelineSpace};
use crate::twostage::{Budget, CvObjective, Optimizers, Policy, RunSettings, DEFAULT_EPSILON};

use super::dataset::{load_dataset_with, DEFAULT_LABEL_COLUMN};
use super::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

fn default_label() -> String {
    DEFAULT_LABEL_COLUMN.to_string()
}

fn default_folds() -> usize {
    5
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_policy() -> Policy {
    Policy::Split { omega: 0.5 }
}

fn tpe_kind() -> OptimizerKind {
    OptimizerKind::Tpe
}

/// `+inf` is written as the string `"inf"`.
mod epsilon {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Json::deserialize(d)? {
            Json::Number(n) => n
                .as_f64()
                .filter(|v| *v >= 0.0)
                .ok_or_else(|| serde::de::Error::custom("epsilon must be non-negative")),
            Json::String(s) if s == "inf" => Ok(f64::INFINITY),
            other => Err(serde::de::Error::custom(format!(
                "epsilon must be a number or \"inf\", got {other}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// Replaces the built-in grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<ConfigSpace>,
    /// Named values; defaults to the built-in default restricted to the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Map<String, Json>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default = "tpe_kind")]
    pub pipeline: OptimizerKind,
    #[serde(default = "tpe_kind")]
    pub algorithm: OptimizerKind,
    #[serde(default = "tpe_kind")]
    pub joint: OptimizerKind,
    #[serde(default)]
    pub tpe: TpeParams,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            pipeline: OptimizerKind::Tpe,
            algorithm: OptimizerKind::Tpe,
            joint: OptimizerKind::Tpe,
            tpe: TpeParams::default(),
        }
    }
}

/// Declarative experiment file. Every random component derives its seed
/// from `seed` and a fixed label, so the file plus the seed fixes a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    /// Embedded name (`iris`, `wine`, `breast`) or CSV path.
    pub dataset: String,
    #[serde(default = "default_label")]
    pub label_column: String,
    /// Defaults to the rebalance / normalize / features prototype.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prototype: Option<PipelinePrototype>,
    /// Parameter-space overrides keyed by operator name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub catalog: BTreeMap<String, ConfigSpace>,
    pub learner: LearnerConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_policy")]
    pub policy: Policy,
    pub budget: Budget,
    #[serde(default = "default_epsilon", with = "epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(HarnessError::Schema(cfg.schema));
        }
        cfg.policy.validate()?;
        if cfg.budget.total.is_nan() || cfg.budget.total < 0.0 {
            return Err(HarnessError::Config("budget total must be non-negative".into()));
        }
        if cfg.folds < 2 {
            return Err(HarnessError::Config("at least two folds are required".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Loads the dataset and resolves the prototype, catalog and learner.
    pub fn build(self) -> Result<Experiment, HarnessError> {
        let dataset = load_dataset_with(&self.dataset, &self.label_column)?;
        let prototype = self.prototype.clone().unwrap_or_else(PipelinePrototype::standard);
        let mut catalog = standard_catalog(dataset.n_features());
        for (op, space) in &self.catalog {
            catalog
                .override_space(op, space.clone())
                .map_err(|_| HarnessError::Config(format!("catalog override for unknown operator `{op}`")))?;
        }
        PipelineSpace::new(&prototype, &catalog)?;
        let l = &self.learner;
        let learner = match (&l.space, &l.default) {
            (None, None) => LearnerSpec::new(l.kind),
            (space, default) => {
                let space = space
                    .clone()
                    .unwrap_or_else(|| LearnerSpec::new(l.kind).config_space().clone());
                let default = match default {
                    Some(m) => space.from_json(m)?,
                    None => LearnerSpec::default_in(l.kind, &space),
                };
                LearnerSpec::with_space(l.kind, space, default)?
            }
        };
        Ok(Experiment {
            config: self,
            dataset,
            prototype,
            catalog,
            learner,
        })
    }
}

/// A resolved experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub dataset: Dataset,
    pub prototype: PipelinePrototype,
    pub catalog: Catalog,
    pub learner: LearnerSpec,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        ExperimentConfig::load(path)?.build()
    }

    pub fn pipeline_space(&self) -> PipelineSpace {
        PipelineSpace::new(&self.prototype, &self.catalog).expect("validated in build")
    }

    /// Fold assignment and pipeline/learner randomness derive from `seed`.
    pub fn objective(&self, seed: u64, exec: Execution) -> Result<CvObjective, HarnessError> {
        Ok(CvObjective::new(
            self.prototype.clone(),
            self.catalog.clone(),
            self.learner.clone(),
            self.dataset.clone(),
            self.config.folds,
            seed,
            exec,
        )?)
    }

    pub fn settings(&self, policy: Policy, seed: u64) -> RunSettings {
        let o = &self.config.optimizer;
        RunSettings {
            policy,
            budget: self.config.budget,
            epsilon: self.config.epsilon,
            optimizers: Optimizers {
                pipeline: o.pipeline,
                algorithm: o.algorithm,
                joint: o.joint,
            },
            tpe: o.tpe.clone(),
            seed,
        }
    }
}
