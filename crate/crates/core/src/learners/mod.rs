//! Classifier portfolio and cross-validated scoring.
//!
//! Each learner kind has a default hyperparameter grid. Custom grids may
//! declare any subset of a kind's parameters; undeclared or inactive
//! parameters take the kind's default value.

pub mod cv;
pub mod forest;
pub mod mlp;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configspace::{ConfigSpace, Configuration, ParamDomain, SpaceError, Value};
use crate::data::{class_counts, Matrix};
use crate::exec::Execution;

pub use cv::{CrossValidator, CvOutcome, CvResult, FoldData};
pub use forest::{ForestParams, RandomForest};
pub use mlp::{LrSchedule, Mlp, MlpParams};
pub use svm::{LinearSvm, StepSchedule, SvmParams};
pub use tree::{DecisionTree, MaxFeatures, Splitter, TreeParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error(transparent)]
    Config(#[from] SpaceError),
    #[error("invalid hyperparameter `{name}`: {reason}")]
    BadParam { name: String, reason: String },
    #[error("training set is empty")]
    Empty,
    #[error("{rows} rows but {labels} labels")]
    Inconsistent { rows: usize, labels: usize },
    #[error("model expects {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("cannot build {k} stratified folds: class {class} has {count} samples")]
    Stratification { k: usize, class: usize, count: usize },
    #[error("unknown learner kind `{0}`")]
    UnknownKind(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    #[serde(alias = "dt")]
    DecisionTree,
    #[serde(alias = "rf")]
    RandomForest,
    #[serde(alias = "svm")]
    LinearSvm,
    #[serde(alias = "nn")]
    Mlp,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::DecisionTree,
        LearnerKind::RandomForest,
        LearnerKind::LinearSvm,
        LearnerKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::DecisionTree => "decision-tree",
            LearnerKind::RandomForest => "random-forest",
            LearnerKind::LinearSvm => "linear-svm",
            LearnerKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = LearnerError;
    fn from_str(s: &str) -> Result<Self, LearnerError> {
        match s.to_ascii_lowercase().as_str() {
            "decision-tree" | "dt" => Ok(LearnerKind::DecisionTree),
            "random-forest" | "rf" => Ok(LearnerKind::RandomForest),
            "linear-svm" | "svm" => Ok(LearnerKind::LinearSvm),
            "mlp" | "nn" => Ok(LearnerKind::Mlp),
            _ => Err(LearnerError::UnknownKind(s.to_string())),
        }
    }
}

/// Default grid and default configuration of a kind, as `(dims, defaults)`.
fn default_grid(kind: LearnerKind) -> (Vec<ParamDomain>, Vec<(&'static str, Value)>) {
    use Value::*;
    match kind {
        // max_depth 0 means unbounded.
        LearnerKind::DecisionTree => (
            vec![
                ParamDomain::int_grid("max_depth", [0, 2, 3, 4, 5, 6, 8, 10, 15, 20]),
                ParamDomain::int_grid("min_samples_split", [2, 4, 6, 8, 10, 15]),
                ParamDomain::int_grid("min_samples_leaf", [1, 2, 3, 4, 5, 6, 8, 10]),
                ParamDomain::categorical("max_features", ["all", "sqrt", "log2", "0.5", "0.75"]),
                ParamDomain::categorical("splitter", ["best", "random"]),
            ],
            vec![
                ("max_depth", Int(0)),
                ("min_samples_split", Int(2)),
                ("min_samples_leaf", Int(1)),
                ("max_features", Cat("all".into())),
                ("splitter", Cat("best".into())),
            ],
        ),
        LearnerKind::RandomForest => (
            vec![
                ParamDomain::int_grid("n_estimators", [5, 10, 20, 30, 50]),
                ParamDomain::int_grid("max_depth", [0, 2, 4, 6, 8, 10]),
                ParamDomain::int_grid("min_samples_split", [2, 4, 8, 16]),
                ParamDomain::int_grid("min_samples_leaf", [1, 2, 4, 8]),
                ParamDomain::categorical("max_features", ["sqrt", "log2", "0.5", "0.75", "all"]),
                ParamDomain::boolean("bootstrap"),
            ],
            vec![
                ("n_estimators", Int(10)),
                ("max_depth", Int(0)),
                ("min_samples_split", Int(2)),
                ("min_samples_leaf", Int(1)),
                ("max_features", Cat("sqrt".into())),
                ("bootstrap", Bool(true)),
            ],
        ),
        LearnerKind::LinearSvm => (
            vec![
                ParamDomain::real_grid("c", [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1e3, 1e4]),
                ParamDomain::int_grid("max_epochs", [20, 50, 100, 200]),
                ParamDomain::real_grid("eta0", [0.001, 0.01, 0.1, 1.0]),
                ParamDomain::categorical("schedule", ["constant", "inv_sqrt", "inv_t"]),
                ParamDomain::boolean("fit_intercept"),
            ],
            vec![
                ("c", Real(1.0)),
                ("max_epochs", Int(50)),
                ("eta0", Real(0.01)),
                ("schedule", Cat("inv_sqrt".into())),
                ("fit_intercept", Bool(true)),
            ],
        ),
        LearnerKind::Mlp => (
            vec![
                ParamDomain::int_grid("hidden", [8, 16, 32]),
                ParamDomain::real_grid("learning_rate", [0.001, 0.01, 0.1]),
                ParamDomain::real_grid("alpha", [1e-5, 1e-4, 1e-3]),
                ParamDomain::int_grid("batch_size", [16, 32, 64]),
                ParamDomain::real_grid("momentum", [0.0, 0.5, 0.9]),
                ParamDomain::int_grid("epochs", [50, 100]),
                ParamDomain::categorical("lr_schedule", ["constant", "inv_scaling"]),
                ParamDomain::boolean("shuffle"),
            ],
            vec![
                ("hidden", Int(16)),
                ("learning_rate", Real(0.01)),
                ("alpha", Real(1e-4)),
                ("batch_size", Int(32)),
                ("momentum", Real(0.9)),
                ("epochs", Int(50)),
                ("lr_schedule", Cat("constant".into())),
                ("shuffle", Bool(true)),
            ],
        ),
    }
}

/// A learner kind with its hyperparameter space and default configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerSpec {
    kind: LearnerKind,
    space: ConfigSpace,
    default: Configuration,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind) -> Self {
        let (dims, defaults) = default_grid(kind);
        let space = ConfigSpace::product(kind.name(), dims).expect("static grid");
        let default = space.configure(defaults).expect("static default");
        Self { kind, space, default }
    }

    /// A custom grid; `default` must be valid in `space` and decodable.
    pub fn with_space(kind: LearnerKind, space: ConfigSpace, default: Configuration) -> Result<Self, LearnerError> {
        space.validate(&default)?;
        let spec = Self { kind, space, default };
        spec.decode(&spec.default)?;
        Ok(spec)
    }

    /// The built-in default configuration restricted to `space`, with the
    /// first grid value wherever the built-in default is not on the grid.
    pub fn default_in(kind: LearnerKind, space: &ConfigSpace) -> Configuration {
        let (_, defaults) = default_grid(kind);
        let mut config = space.first();
        for (name, v) in defaults {
            if let Some(i) = space.dim_index(name) {
                if let Some(idx) = space.dims()[i].domain.index_of(&v) {
                    let mut trial = config.clone();
                    trial.0[i] = Some(idx);
                    if space.is_valid(&trial) {
                        config = trial;
                    }
                }
            }
        }
        config
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn config_space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn default_config(&self) -> &Configuration {
        &self.default
    }

    /// Resolves a configuration into typed parameters.
    pub fn decode(&self, config: &Configuration) -> Result<LearnerParams, LearnerError> {
        self.space.validate(config)?;
        let (_, defaults) = default_grid(self.kind);
        let view = self.space.view(config);
        let get = |name: &str| -> Result<Value, LearnerError> {
            match view.value(name) {
                Ok(v) => Ok(v),
                Err(SpaceError::UnknownDim(_) | SpaceError::MissingValue(_)) => Ok(defaults
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, v)| v.clone())
                    .expect("every parameter has a default")),
                Err(e) => Err(e.into()),
            }
        };
        let bad = |name: &str, reason: &str| LearnerError::BadParam {
            name: name.to_string(),
            reason: reason.to_string(),
        };
        let int = |name: &str, min: i64| -> Result<usize, LearnerError> {
            match get(name)? {
                Value::Int(i) if i >= min => Ok(i as usize),
                v => Err(bad(name, &format!("expected integer >= {min}, got {v}"))),
            }
        };
        let real = |name: &str| -> Result<f64, LearnerError> {
            match get(name)? {
                Value::Real(r) if r.is_finite() => Ok(r),
                Value::Int(i) => Ok(i as f64),
                v => Err(bad(name, &format!("expected real, got {v}"))),
            }
        };
        let flag = |name: &str| -> Result<bool, LearnerError> {
            match get(name)? {
                Value::Bool(b) => Ok(b),
                v => Err(bad(name, &format!("expected boolean, got {v}"))),
            }
        };
        let cat = |name: &str| -> Result<String, LearnerError> {
            match get(name)? {
                Value::Cat(s) => Ok(s),
                v => Err(bad(name, &format!("expected category, got {v}"))),
            }
        };
        let tree = |with_splitter: bool| -> Result<TreeParams, LearnerError> {
            let mf = cat("max_features")?;
            Ok(TreeParams {
                max_depth: Some(int("max_depth", 0)?).filter(|&d| d > 0),
                min_samples_split: int("min_samples_split", 2)?,
                min_samples_leaf: int("min_samples_leaf", 1)?,
                max_features: MaxFeatures::parse(&mf).ok_or_else(|| bad("max_features", &mf))?,
                splitter: if with_splitter {
                    match cat("splitter")?.as_str() {
                        "best" => Splitter::Best,
                        "random" => Splitter::Random,
                        s => return Err(bad("splitter", s)),
                    }
                } else {
                    Splitter::Best
                },
            })
        };
        Ok(match self.kind {
            LearnerKind::DecisionTree => LearnerParams::Tree(tree(true)?),
            LearnerKind::RandomForest => LearnerParams::Forest(ForestParams {
                n_estimators: int("n_estimators", 1)?,
                tree: tree(false)?,
                bootstrap: flag("bootstrap")?,
            }),
            LearnerKind::LinearSvm => {
                let c = real("c")?;
                if c <= 0.0 {
                    return Err(bad("c", "must be positive"));
                }
                LearnerParams::Svm(SvmParams {
                    c,
                    max_epochs: int("max_epochs", 1)?,
                    eta0: real("eta0")?,
                    schedule: match cat("schedule")?.as_str() {
                        "constant" => StepSchedule::Constant,
                        "inv_sqrt" => StepSchedule::InvSqrt,
                        "inv_t" => StepSchedule::InvT,
                        s => return Err(bad("schedule", s)),
                    },
                    fit_intercept: flag("fit_intercept")?,
                })
            }
            LearnerKind::Mlp => LearnerParams::Mlp(MlpParams {
                hidden: int("hidden", 1)?,
                learning_rate: real("learning_rate")?,
                alpha: real("alpha")?,
                batch_size: int("batch_size", 1)?,
                momentum: real("momentum")?,
                epochs: int("epochs", 0)?,
                schedule: match cat("lr_schedule")?.as_str() {
                    "constant" => LrSchedule::Constant,
                    "inv_scaling" => LrSchedule::InvScaling,
                    s => return Err(bad("lr_schedule", s)),
                },
                shuffle: flag("shuffle")?,
            }),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LearnerParams {
    Tree(TreeParams),
    Forest(ForestParams),
    Svm(SvmParams),
    Mlp(MlpParams),
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainedModel {
    /// Fallback for training sets with a single class.
    Constant {
        class: usize,
        n_features: usize,
    },
    Tree(DecisionTree),
    Forest(RandomForest),
    Svm(LinearSvm),
    Mlp(Mlp),
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Constant { n_features, .. } => *n_features,
            TrainedModel::Tree(t) => t.n_features(),
            TrainedModel::Forest(f) => f.n_features(),
            TrainedModel::Svm(s) => s.n_features(),
            TrainedModel::Mlp(m) => m.n_features(),
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        match self {
            TrainedModel::Constant { class, .. } => *class,
            TrainedModel::Tree(t) => t.predict_row(row),
            TrainedModel::Forest(f) => f.predict_row(row),
            TrainedModel::Svm(s) => s.predict_row(row),
            TrainedModel::Mlp(m) => m.predict_row(row),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>, LearnerError> {
        if x.cols() != self.n_features() {
            return Err(LearnerError::Dimension {
                expected: self.n_features(),
                got: x.cols(),
            });
        }
        Ok((0..x.rows()).map(|r| self.predict_row(x.row(r))).collect())
    }
}

/// Trains `spec` at `config` on `(x, y)` with labels in `0..n_classes`.
pub fn train<R: Rng + ?Sized>(
    spec: &LearnerSpec,
    config: &Configuration,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    rng: &mut R,
) -> Result<TrainedModel, LearnerError> {
    train_with(spec, config, x, y, n_classes, rng, Execution::Sequential)
}

/// As [`train`], with forest trees built under `exec`.
pub fn train_with<R: Rng + ?Sized>(
    spec: &LearnerSpec,
    config: &Configuration,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    rng: &mut R,
    exec: Execution,
) -> Result<TrainedModel, LearnerError> {
    let params = spec.decode(config)?;
    if x.rows() == 0 {
        return Err(LearnerError::Empty);
    }
    if x.rows() != y.len() {
        return Err(LearnerError::Inconsistent {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    let n_classes = n_classes.max(y.iter().max().map_or(0, |m| m + 1));
    let counts = class_counts(y, n_classes);
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Ok(TrainedModel::Constant {
            class: y[0],
            n_features: x.cols(),
        });
    }
    let all: Vec<usize> = (0..x.rows()).collect();
    Ok(match params {
        LearnerParams::Tree(p) => TrainedModel::Tree(DecisionTree::fit(x, y, n_classes, &all, &p, rng)),
        LearnerParams::Forest(p) => TrainedModel::Forest(RandomForest::fit(x, y, n_classes, &p, rng, exec)),
        LearnerParams::Svm(p) => TrainedModel::Svm(LinearSvm::fit(x, y, n_classes, &p, rng)),
        LearnerParams::Mlp(p) => TrainedModel::Mlp(Mlp::fit(x, y, n_classes, &p, rng)),
    })
}
