use std::time::Instant;

use serde_json::Value as Json;

use crate::configspace::{ConfigSpace, Configuration};
use crate::exec::Execution;
use crate::metaopt::{History, Optimizer, Phase, Trial};
use crate::twostage::{fingerprint, Objective};

use super::HarnessError;

/// Largest space the exhaustive mode will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityMode {
    Exhaustive,
    /// The baseline plus this many optimizer suggestions.
    Budget(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityRow {
    pub trial: usize,
    pub config: Configuration,
    pub loss: f64,
    pub note: Option<String>,
}

impl DensityRow {
    pub fn accuracy(&self) -> Option<f64> {
        self.loss.is_finite().then_some(1.0 - self.loss)
    }
}

/// Pipeline configurations scored with the learner at its default.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityResult {
    pub mode: DensityMode,
    pub rows: Vec<DensityRow>,
    /// Row of the all-empty pipeline.
    pub baseline: usize,
    /// First row attaining the minimum loss.
    pub best: usize,
    /// First row strictly better than the baseline.
    pub first_improvement: Option<usize>,
}

/// Scores pipeline configurations of `obj` at its default algorithm.
///
/// Exhaustive mode scores every configuration in enumeration order.
/// Budget mode scores the baseline as trial 0 and then `n` suggestions
/// of `optimizer`, which sees every earlier trial.
pub fn density_study(
    obj: &dyn Objective,
    mode: DensityMode,
    optimizer: &Optimizer,
    exec: Execution,
) -> Result<DensityResult, HarnessError> {
    let space = obj.pipeline_space();
    let algorithm = obj.default_algorithm();
    let baseline_config = obj.baseline_pipeline();
    let rows = match mode {
        DensityMode::Exhaustive => {
            let n = space.cardinality();
            if n > EXHAUSTIVE_LIMIT {
                return Err(HarnessError::TooLarge(n));
            }
            let configs: Vec<Configuration> = space.enumerate().collect();
            exec.map(&configs, |c| obj.evaluate(c, &algorithm))
                .into_iter()
                .zip(configs)
                .enumerate()
                .map(|(trial, (e, config))| DensityRow {
                    trial,
                    config,
                    loss: e.loss,
                    note: e.note,
                })
                .collect::<Vec<_>>()
        }
        DensityMode::Budget(n) => {
            let mut history = History::new();
            let mut rows = Vec::with_capacity(n + 1);
            let started = Instant::now();
            for trial in 0..=n {
                let config = if trial == 0 {
                    baseline_config.clone()
                } else {
                    optimizer.suggest(space, &history)
                };
                let e = obj.evaluate(&config, &algorithm);
                history.observe(Trial {
                    eval_index: trial,
                    phase: Phase::Pipeline,
                    clock: started.elapsed().as_secs_f64(),
                    config: config.clone(),
                    loss: e.loss,
                });
                rows.push(DensityRow {
                    trial,
                    config,
                    loss: e.loss,
                    note: e.note,
                });
            }
            rows
        }
    };
    let baseline = rows
        .iter()
        .position(|r| r.config == baseline_config)
        .ok_or_else(|| HarnessError::Config("baseline pipeline is not in the space".into()))?;
    let base_loss = rows[baseline].loss;
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.loss < rows[best].loss {
            best = i;
        }
    }
    let first_improvement = rows.iter().position(|r| r.loss < base_loss);
    Ok(DensityResult {
        mode,
        rows,
        baseline,
        best,
        first_improvement,
    })
}

impl DensityResult {
    pub fn baseline_loss(&self) -> f64 {
        self.rows[self.baseline].loss
    }

    pub fn best_loss(&self) -> f64 {
        self.rows[self.best].loss
    }

    pub fn n_incompatible(&self) -> usize {
        self.rows.iter().filter(|r| !r.loss.is_finite()).count()
    }

    /// Accuracies of compatible rows, in row order.
    pub fn accuracies(&self) -> Vec<f64> {
        self.rows.iter().filter_map(DensityRow::accuracy).collect()
    }

    /// Mean accuracy over compatible rows, excluding the baseline row in
    /// budget mode so that only the optimizer's own choices count.
    pub fn mean_visited_accuracy(&self) -> Option<f64> {
        let skip = usize::from(matches!(self.mode, DensityMode::Budget(_)));
        let acc: Vec<f64> = self.rows[skip..].iter().filter_map(DensityRow::accuracy).collect();
        (!acc.is_empty()).then(|| acc.iter().sum::<f64>() / acc.len() as f64)
    }

    /// `(lower edge, upper edge, count)` over compatible accuracies; the
    /// last bin is closed.
    pub fn histogram(&self, bins: usize) -> Vec<(f64, f64, usize)> {
        let acc = self.accuracies();
        if acc.is_empty() || bins == 0 {
            return Vec::new();
        }
        let lo = acc.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = acc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for a in acc {
            let b = (((a - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
            .collect()
    }

    /// `trial,config_id,accuracy,status,config`; incompatible rows have an
    /// empty accuracy.
    pub fn to_csv(&self, space: &ConfigSpace) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["trial", "config_id", "accuracy", "status", "config"])?;
        for r in &self.rows {
            let acc = r.accuracy().map_or(String::new(), |a| a.to_string());
            let status = if r.loss.is_finite() { "ok" } else { "incompatible" };
            let config = Json::Object(space.to_json(&r.config)).to_string();
            w.write_record([
                r.trial.to_string(),
                format!("{:016x}", fingerprint(&r.config)),
                acc,
                status.to_string(),
                config,
            ])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
    }

    pub fn histogram_csv(&self, bins: usize) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["lower", "upper", "count"])?;
        for (lo, hi, c) in self.histogram(bins) {
            w.write_record([lo.to_string(), hi.to_string(), c.to_string()])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
    }

    pub fn summary(&self, space: &ConfigSpace) -> Json {
        let acc = |l: f64| if l.is_finite() { Json::from(1.0 - l) } else { Json::Null };
        serde_json::json!({
            "mode": match self.mode {
                DensityMode::Exhaustive => "exhaustive".to_string(),
                DensityMode::Budget(n) => format!("budget:{n}"),
            },
            "rows": self.rows.len(),
            "incompatible": self.n_incompatible(),
            "baseline_accuracy": acc(self.baseline_loss()),
            "best_accuracy": acc(self.best_loss()),
            "best_config": Json::Object(space.to_json(&self.rows[self.best].config)),
            "first_improvement": self.first_improvement,
            "evals_to_best": self.best,
        })
    }
}
