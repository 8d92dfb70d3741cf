//! Trial history and black-box optimizers over a [`ConfigSpace`].
//!
//! Optimizers are stateless: a suggestion is a pure function of the seed,
//! the space and the history, so replaying a history replays suggestions.

mod tpe;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configspace::{ConfigSpace, Configuration};
use crate::rng::component_rng;

pub use tpe::{DimDensity, TpeParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetaoptError {
    #[error("history has no finite-loss trial")]
    NoFiniteTrial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Pipeline,
    Algorithm,
    Joint,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Pipeline => "pipeline",
            Phase::Algorithm => "algorithm",
            Phase::Joint => "joint",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub eval_index: usize,
    pub phase: Phase,
    /// Budget consumed when the evaluation finished.
    pub clock: f64,
    pub config: Configuration,
    /// `+inf` exactly when the evaluation was incompatible.
    pub loss: f64,
}

/// Append-only trial list tracking the first minimum-loss finite trial.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    trials: Vec<Trial>,
    best: Option<usize>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, trial: Trial) {
        let i = self.trials.len();
        if trial.loss.is_finite() && self.best.is_none_or(|b| trial.loss < self.trials[b].loss) {
            self.best = Some(i);
        }
        self.trials.push(trial);
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn best_index(&self) -> Option<usize> {
        self.best
    }

    pub fn best(&self) -> Result<&Trial, MetaoptError> {
        self.best.map(|b| &self.trials[b]).ok_or(MetaoptError::NoFiniteTrial)
    }

    /// Best finite loss, `+inf` while there is none.
    pub fn best_loss(&self) -> f64 {
        self.best.map_or(f64::INFINITY, |b| self.trials[b].loss)
    }

    pub fn n_finite(&self) -> usize {
        self.trials.iter().filter(|t| t.loss.is_finite()).count()
    }

    pub fn contains(&self, config: &Configuration) -> bool {
        self.trials.iter().any(|t| &t.config == config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Random,
    Tpe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    #[serde(default)]
    pub tpe: TpeParams,
    pub seed: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, seed: u64) -> Self {
        Self {
            kind,
            tpe: TpeParams::default(),
            seed,
        }
    }

    pub fn random(seed: u64) -> Self {
        Self::new(OptimizerKind::Random, seed)
    }

    pub fn tpe(seed: u64) -> Self {
        Self::new(OptimizerKind::Tpe, seed)
    }

    /// The next configuration to evaluate; always valid in `space`.
    pub fn suggest(&self, space: &ConfigSpace, history: &History) -> Configuration {
        let mut rng = component_rng(self.seed, &format!("suggest/{}", history.len()));
        match self.kind {
            OptimizerKind::Random => space.sample(&mut rng),
            OptimizerKind::Tpe => tpe::suggest(&self.tpe, space, history, &mut rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::{Condition, ParamDomain, Value};

    fn trial(i: usize, loss: f64) -> Trial {
        Trial {
            eval_index: i,
            phase: Phase::Pipeline,
            clock: i as f64,
            config: Configuration(vec![Some(i)]),
            loss,
        }
    }

    #[test]
    fn best_follows_first_minimum() {
        let mut h = History::new();
        h.observe(trial(0, f64::INFINITY));
        assert_eq!(h.best(), Err(MetaoptError::NoFiniteTrial));
        h.observe(trial(1, 0.3));
        assert_eq!(h.best_index(), Some(1));
        h.observe(trial(2, 0.1));
        h.observe(trial(3, 0.1));
        assert_eq!(h.best_index(), Some(2));
        h.observe(trial(4, f64::INFINITY));
        assert_eq!(h.best().unwrap().loss, 0.1);
    }

    fn conditional() -> ConfigSpace {
        ConfigSpace::new(
            "c",
            vec![
                ParamDomain::categorical("op", ["none", "a", "b"]),
                ParamDomain::int_grid("a.k", [1, 2, 3, 4]),
                ParamDomain::real_grid("b.r", [0.1, 0.2, 0.4]),
            ],
            vec![
                Condition::new("a.k", "op", [Value::Cat("a".into())]),
                Condition::new("b.r", "op", [Value::Cat("b".into())]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn suggestions_are_deterministic_given_seed_and_history() {
        let space = conditional();
        let mut h = History::new();
        for (i, opt) in [Optimizer::tpe(3), Optimizer::random(3)].iter().enumerate() {
            let a = opt.suggest(&space, &h);
            let b = opt.suggest(&space, &h);
            assert_eq!(a, b);
            h.observe(Trial {
                eval_index: i,
                phase: Phase::Joint,
                clock: 0.0,
                config: a,
                loss: 0.5,
            });
        }
    }

    #[test]
    fn all_infinite_history_still_yields_valid_configs() {
        let space = conditional();
        let opt = Optimizer::tpe(1);
        let mut h = History::new();
        for i in 0..30 {
            let c = opt.suggest(&space, &h);
            assert!(space.is_valid(&c));
            h.observe(Trial {
                eval_index: i,
                phase: Phase::Joint,
                clock: 0.0,
                config: c,
                loss: f64::INFINITY,
            });
        }
    }
}
