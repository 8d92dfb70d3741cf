//! Data pipeline selection and hyperparameter optimization.

pub mod configspace;
pub mod data;
pub mod exec;
pub mod harness;
pub mod learners;
pub mod metaopt;
pub mod nmad;
pub mod operators;
pub mod pipeline;
pub mod rng;
pub mod twostage;
