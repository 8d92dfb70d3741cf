//! Stratified k-fold cross-validation of a pipeline plus learner.
//!
//! The pipeline is fitted on each training part only and applied to the
//! matching validation part. Any fold failing to fit or apply makes the
//! whole evaluation incompatible, scored as `+inf` loss.

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::configspace::Configuration;
use crate::data::{Dataset, Matrix};
use crate::exec::Execution;
use crate::operators::Catalog;
use crate::pipeline::{
    check_compatibility, fit_transform, FittedPipeline, PipelineError, PipelineInstance, PipelinePrototype,
};
use crate::rng::component_rng;

use super::{train_with, LearnerError, LearnerSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub wall_time: f64,
}

impl CvResult {
    pub fn loss(&self) -> f64 {
        1.0 - self.mean_accuracy
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CvOutcome {
    Scored(CvResult),
    /// `fold` is `None` for static incompatibility.
    Incompatible {
        fold: Option<usize>,
        reason: String,
    },
}

impl CvOutcome {
    pub fn loss(&self) -> f64 {
        match self {
            CvOutcome::Scored(r) => r.loss(),
            CvOutcome::Incompatible { .. } => f64::INFINITY,
        }
    }
}

/// One fold after the pipeline has been fitted on its training part.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldData {
    pub fold: usize,
    pub train: Dataset,
    pub val_x: Matrix,
    pub val_y: Vec<usize>,
    pub fitted: FittedPipeline,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineFailure {
    pub fold: Option<usize>,
    pub error: PipelineError,
}

impl From<PipelineFailure> for CvOutcome {
    fn from(f: PipelineFailure) -> Self {
        CvOutcome::Incompatible {
            fold: f.fold,
            reason: f.error.to_string(),
        }
    }
}

/// Fold assignment plus the seed that drives per-fold fitting.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossValidator {
    k: usize,
    seed: u64,
    fold_of: Vec<usize>,
    exec: Execution,
}

/// Deals each class's shuffled members round-robin over the folds,
/// continuing the rotation across classes so fold sizes differ by at most 1.
pub fn stratified_folds(y: &[usize], k: usize, seed: u64) -> Result<Vec<usize>, LearnerError> {
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        members[c].push(i);
    }
    for (class, m) in members.iter().enumerate() {
        if k < 2 || (!m.is_empty() && m.len() < k) {
            return Err(LearnerError::Stratification {
                k,
                class,
                count: m.len(),
            });
        }
    }
    let mut rng = component_rng(seed, "cv/folds");
    let mut fold_of = vec![0; y.len()];
    let mut next = 0;
    for m in &mut members {
        m.shuffle(&mut rng);
        for &i in m.iter() {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(fold_of)
}

impl CrossValidator {
    pub fn new(data: &Dataset, k: usize, seed: u64, exec: Execution) -> Result<Self, LearnerError> {
        Ok(Self {
            k,
            seed,
            fold_of: stratified_folds(&data.y, k, seed)?,
            exec,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_assignment(&self) -> &[usize] {
        &self.fold_of
    }

    /// `(train rows, validation rows)` of a fold, in row order.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.fold_of.len()).partition(|&i| self.fold_of[i] != fold)
    }

    pub fn transform(
        &self,
        proto: &PipelinePrototype,
        catalog: &Catalog,
        inst: &PipelineInstance,
        data: &Dataset,
    ) -> Result<Vec<FoldData>, PipelineFailure> {
        check_compatibility(proto, catalog, inst).map_err(|e| PipelineFailure {
            fold: None,
            error: e.into(),
        })?;
        let folds = self.exec.map_range(self.k, |f| {
            let (tr, va) = self.split(f);
            let train = data.subset(&tr);
            let mut rng = component_rng(self.seed, &format!("pipeline/fold{f}"));
            let fail = |error| PipelineFailure { fold: Some(f), error };
            let (train, fitted) = fit_transform(proto, catalog, inst, &train, &mut rng).map_err(fail)?;
            let val_x = fitted.apply(&data.x.select_rows(&va)).map_err(fail)?;
            Ok(FoldData {
                fold: f,
                train,
                val_x,
                val_y: va.iter().map(|&i| data.y[i]).collect(),
                fitted,
            })
        });
        folds.into_iter().collect()
    }

    /// Trains and scores the learner on already-transformed folds.
    pub fn score(
        &self,
        folds: &[FoldData],
        spec: &LearnerSpec,
        config: &Configuration,
        n_classes: usize,
    ) -> Result<CvResult, LearnerError> {
        let start = Instant::now();
        let accs = self.exec.map(folds, |fd| {
            let mut rng = component_rng(self.seed, &format!("learner/fold{}", fd.fold));
            let model = train_with(
                spec,
                config,
                &fd.train.x,
                &fd.train.y,
                n_classes,
                &mut rng,
                Execution::Sequential,
            )?;
            let pred = model.predict(&fd.val_x)?;
            let hits = pred.iter().zip(&fd.val_y).filter(|(a, b)| a == b).count();
            Ok(hits as f64 / fd.val_y.len().max(1) as f64)
        });
        let fold_accuracies = accs.into_iter().collect::<Result<Vec<f64>, LearnerError>>()?;
        let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
        Ok(CvResult {
            mean_accuracy,
            fold_accuracies,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }

    pub fn cross_val_score(
        &self,
        proto: &PipelinePrototype,
        catalog: &Catalog,
        inst: &PipelineInstance,
        spec: &LearnerSpec,
        config: &Configuration,
        data: &Dataset,
    ) -> Result<CvOutcome, LearnerError> {
        let start = Instant::now();
        match self.transform(proto, catalog, inst, data) {
            Err(f) => Ok(f.into()),
            Ok(folds) => {
                let mut r = self.score(&folds, spec, config, data.n_classes())?;
                r.wall_time = start.elapsed().as_secs_f64();
                Ok(CvOutcome::Scored(r))
            }
        }
    }
}
