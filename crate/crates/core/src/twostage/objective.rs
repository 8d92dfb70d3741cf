use std::sync::{Arc, Mutex};

use crate::configspace::{ConfigSpace, Configuration};
use crate::data::Dataset;
use crate::exec::Execution;
use crate::learners::{CrossValidator, FoldData, LearnerError, LearnerSpec};
use crate::operators::Catalog;
use crate::pipeline::{PipelinePrototype, PipelineSpace, PrototypeError};

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// `+inf` when the pair is incompatible.
    pub loss: f64,
    pub note: Option<String>,
}

impl Evaluation {
    pub fn scored(loss: f64) -> Self {
        Self { loss, note: None }
    }

    pub fn incompatible(reason: impl Into<String>) -> Self {
        Self {
            loss: f64::INFINITY,
            note: Some(reason.into()),
        }
    }
}

/// Loss of a (pipeline configuration, algorithm configuration) pair.
pub trait Objective: Sync {
    fn pipeline_space(&self) -> &ConfigSpace;
    fn algorithm_space(&self) -> &ConfigSpace;
    /// The all-empty pipeline.
    fn baseline_pipeline(&self) -> Configuration;
    fn default_algorithm(&self) -> Configuration;
    fn evaluate(&self, pipeline: &Configuration, algorithm: &Configuration) -> Evaluation;
}

type FoldCache = Option<(Configuration, Arc<Result<Vec<FoldData>, String>>)>;

/// Cross-validated `1 - accuracy` of a pipeline plus learner on a dataset.
///
/// The folds transformed by the most recent pipeline are cached, so an
/// inner loop over learner configurations fits its pipeline once per fold.
pub struct CvObjective {
    proto: PipelinePrototype,
    catalog: Catalog,
    space: PipelineSpace,
    spec: LearnerSpec,
    data: Dataset,
    cv: CrossValidator,
    cache: Mutex<FoldCache>,
}

#[derive(Debug, thiserror::Error)]
pub enum ObjectiveError {
    #[error(transparent)]
    Prototype(#[from] PrototypeError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

impl CvObjective {
    pub fn new(
        proto: PipelinePrototype,
        catalog: Catalog,
        spec: LearnerSpec,
        data: Dataset,
        folds: usize,
        seed: u64,
        exec: Execution,
    ) -> Result<Self, ObjectiveError> {
        let space = PipelineSpace::new(&proto, &catalog)?;
        let cv = CrossValidator::new(&data, folds, seed, exec)?;
        Ok(Self {
            proto,
            catalog,
            space,
            spec,
            data,
            cv,
            cache: Mutex::new(None),
        })
    }

    pub fn pipelines(&self) -> &PipelineSpace {
        &self.space
    }

    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    fn folds(&self, pipeline: &Configuration) -> Arc<Result<Vec<FoldData>, String>> {
        if let Some((c, f)) = self.cache.lock().expect("cache lock").as_ref() {
            if c == pipeline {
                return Arc::clone(f);
            }
        }
        let folds = match self.space.decode(pipeline) {
            Err(e) => Err(e.to_string()),
            Ok(inst) => self
                .cv
                .transform(&self.proto, &self.catalog, &inst, &self.data)
                .map_err(|f| match f.fold {
                    Some(k) => format!("fold {k}: {}", f.error),
                    None => f.error.to_string(),
                }),
        };
        let folds = Arc::new(folds);
        *self.cache.lock().expect("cache lock") = Some((pipeline.clone(), Arc::clone(&folds)));
        folds
    }
}

impl Objective for CvObjective {
    fn pipeline_space(&self) -> &ConfigSpace {
        self.space.space()
    }

    fn algorithm_space(&self) -> &ConfigSpace {
        self.spec.config_space()
    }

    fn baseline_pipeline(&self) -> Configuration {
        self.space.empty_config()
    }

    fn default_algorithm(&self) -> Configuration {
        self.spec.default_config().clone()
    }

    fn evaluate(&self, pipeline: &Configuration, algorithm: &Configuration) -> Evaluation {
        match self.folds(pipeline).as_ref() {
            Err(reason) => Evaluation::incompatible(reason.clone()),
            Ok(folds) => match self.cv.score(folds, &self.spec, algorithm, self.data.n_classes()) {
                Ok(r) => Evaluation::scored(r.loss()),
                Err(e) => Evaluation::incompatible(e.to_string()),
            },
        }
    }
}

/// An objective given by a closure, for synthetic benchmarks.
pub struct FnObjective<F> {
    pipeline: ConfigSpace,
    algorithm: ConfigSpace,
    baseline: Configuration,
    default: Configuration,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&Configuration, &Configuration) -> f64 + Sync,
{
    /// Baseline and default are the first configurations of each space.
    pub fn new(pipeline: ConfigSpace, algorithm: ConfigSpace, f: F) -> Self {
        Self {
            baseline: pipeline.first(),
            default: algorithm.first(),
            pipeline,
            algorithm,
            f,
        }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&Configuration, &Configuration) -> f64 + Sync,
{
    fn pipeline_space(&self) -> &ConfigSpace {
        &self.pipeline
    }

    fn algorithm_space(&self) -> &ConfigSpace {
        &self.algorithm
    }

    fn baseline_pipeline(&self) -> Configuration {
        self.baseline.clone()
    }

    fn default_algorithm(&self) -> Configuration {
        self.default.clone()
    }

    fn evaluate(&self, pipeline: &Configuration, algorithm: &Configuration) -> Evaluation {
        let loss = (self.f)(pipeline, algorithm);
        if loss.is_finite() {
            Evaluation::scored(loss)
        } else {
            Evaluation::incompatible("objective returned a non-finite loss")
        }
    }
}
