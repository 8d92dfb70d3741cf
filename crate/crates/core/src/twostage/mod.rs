//! Two-loop optimization of a pipeline configuration and a learner
//! configuration under a shared budget.
//!
//! The outer (pipeline) phase searches pipeline configurations with the
//! learner fixed at its current best configuration. The inner (algorithm)
//! phase searches learner configurations on the data produced by the
//! current best pipeline, starting from the previous best learner
//! configuration. Policies decide how the budget is divided between the
//! phases.

mod budget;
mod objective;
mod policy;
mod report;
mod run;

pub use budget::{Budget, BudgetClock, BudgetMode, PhaseLedger};
pub use objective::{CvObjective, Evaluation, FnObjective, Objective, ObjectiveError};
pub use policy::{adaptive_bounds, adaptive_update, slice_length, split_schedule, AdaptiveState, Policy, PolicyError};
pub use report::{RunReport, TraceRecord};
pub use run::{fingerprint, run, Optimizers, RunSettings, DEFAULT_EPSILON};
