use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::configspace::{ConfigSpace, Configuration};
use crate::metaopt::{History, Optimizer, OptimizerKind, Phase, TpeParams, Trial};
use crate::rng::{derive_seed, fnv1a64};

use super::budget::{Budget, BudgetClock};
use super::objective::Objective;
use super::policy::{adaptive_bounds, adaptive_update, slice_length, split_schedule, AdaptiveState, Policy};
use super::report::{RunReport, TraceRecord};

/// Cauchy threshold on the loss scale.
pub const DEFAULT_EPSILON: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Optimizers {
    pub pipeline: OptimizerKind,
    pub algorithm: OptimizerKind,
    /// Used by the joint policy.
    pub joint: OptimizerKind,
}

impl Default for Optimizers {
    fn default() -> Self {
        Self {
            pipeline: OptimizerKind::Tpe,
            algorithm: OptimizerKind::Tpe,
            joint: OptimizerKind::Tpe,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub policy: Policy,
    pub budget: Budget,
    pub epsilon: f64,
    pub optimizers: Optimizers,
    pub tpe: TpeParams,
    pub seed: u64,
}

impl RunSettings {
    pub fn new(policy: Policy, budget: Budget, seed: u64) -> Self {
        Self {
            policy,
            budget,
            epsilon: DEFAULT_EPSILON,
            optimizers: Optimizers::default(),
            tpe: TpeParams::default(),
            seed,
        }
    }
}

/// Stable hash of a pipeline configuration.
pub fn fingerprint(pipeline: &Configuration) -> u64 {
    let bytes: Vec<u8> = pipeline
        .0
        .iter()
        .flat_map(|v| v.map_or(u64::MAX, |i| i as u64).to_le_bytes())
        .collect();
    fnv1a64(&bytes)
}

struct Runner<'a> {
    obj: &'a dyn Objective,
    settings: &'a RunSettings,
    clock: BudgetClock,
    trace: Vec<TraceRecord>,
    pipe_hist: History,
    algo_hist: History,
    joint_hist: History,
    pipe_opt: Optimizer,
    algo_opt: Optimizer,
    joint_opt: Optimizer,
    best_pipeline: Configuration,
    best_algorithm: Configuration,
    best_loss: f64,
    best_index: usize,
    slice: usize,
}

impl<'a> Runner<'a> {
    fn new(obj: &'a dyn Objective, settings: &'a RunSettings) -> Self {
        let opt = |kind, label| Optimizer {
            kind,
            tpe: settings.tpe.clone(),
            seed: derive_seed(settings.seed, label),
        };
        Self {
            obj,
            settings,
            clock: BudgetClock::new(settings.budget),
            trace: Vec::new(),
            pipe_hist: History::new(),
            algo_hist: History::new(),
            joint_hist: History::new(),
            pipe_opt: opt(settings.optimizers.pipeline, "optimizer/pipeline"),
            algo_opt: opt(settings.optimizers.algorithm, "optimizer/algorithm"),
            joint_opt: opt(settings.optimizers.joint, "optimizer/joint"),
            best_pipeline: obj.baseline_pipeline(),
            best_algorithm: obj.default_algorithm(),
            best_loss: f64::INFINITY,
            best_index: 0,
            slice: 0,
        }
    }

    /// Evaluates one pair, charges it and records it everywhere. `started`
    /// marks when the suggestion began so its cost is charged too.
    fn step(
        &mut self,
        phase: Phase,
        pipeline: Configuration,
        algorithm: Configuration,
        started: Instant,
        baseline: bool,
    ) -> (f64, f64) {
        let e = self.obj.evaluate(&pipeline, &algorithm);
        let units = self.clock.charge(phase, started.elapsed().as_secs_f64());
        let eval_index = self.trace.len();
        let clock = self.clock.consumed();
        let trial = |config: Configuration| Trial {
            eval_index,
            phase,
            clock,
            config,
            loss: e.loss,
        };
        if phase == Phase::Pipeline || baseline {
            self.pipe_hist.observe(trial(pipeline.clone()));
        }
        if phase == Phase::Algorithm || baseline {
            self.algo_hist.observe(trial(algorithm.clone()));
        }
        if phase == Phase::Joint {
            self.joint_hist
                .observe(trial(Configuration::concat(&pipeline, &algorithm)));
        }
        if e.loss < self.best_loss {
            self.best_loss = e.loss;
            self.best_index = eval_index;
            self.best_pipeline = pipeline.clone();
            self.best_algorithm = algorithm.clone();
        }
        self.trace.push(TraceRecord {
            eval_index,
            phase,
            slice: self.slice,
            clock,
            fingerprint: fingerprint(&pipeline),
            pipeline,
            algorithm,
            loss: e.loss,
            note: e.note,
        });
        (e.loss, units)
    }

    fn baseline(&mut self, phase: Phase) -> f64 {
        let start = Instant::now();
        let (p, a) = (self.obj.baseline_pipeline(), self.obj.default_algorithm());
        self.step(phase, p, a, start, true).1
    }

    /// Pipeline-phase slice with the learner fixed at the current best.
    fn pipeline_slice(&mut self, limit: f64, mut used: f64) {
        while used < limit && self.clock.has_remaining() {
            let start = Instant::now();
            let p = self.pipe_opt.suggest(self.obj.pipeline_space(), &self.pipe_hist);
            let a = self.best_algorithm.clone();
            used += self.step(Phase::Pipeline, p, a, start, false).1;
        }
    }

    /// Algorithm-phase slice on the data of the current best pipeline. The
    /// first evaluation is the current best learner configuration unless
    /// `first` reports it as already evaluated. Stops on the Cauchy rule
    /// after the second evaluation.
    fn inner_loop(&mut self, limit: f64, epsilon: f64, first: Option<(f64, f64)>) {
        let pipeline = self.best_pipeline.clone();
        let (mut loop_best, mut used) = match first {
            Some(done) => done,
            None => {
                if limit <= 0.0 || !self.clock.has_remaining() {
                    return;
                }
                let start = Instant::now();
                let prior = self.best_algorithm.clone();
                self.step(Phase::Algorithm, pipeline.clone(), prior, start, false)
            }
        };
        while used < limit && self.clock.has_remaining() {
            let start = Instant::now();
            let a = self.algo_opt.suggest(self.obj.algorithm_space(), &self.algo_hist);
            let (loss, units) = self.step(Phase::Algorithm, pipeline.clone(), a, start, false);
            used += units;
            let next = loop_best.min(loss);
            let diff = if next == loop_best {
                0.0
            } else {
                (next - loop_best).abs()
            };
            loop_best = next;
            if epsilon == f64::INFINITY || diff < epsilon {
                break;
            }
        }
    }

    fn split(&mut self, omega: f64) {
        let (t1, t2) = split_schedule(omega, self.settings.budget.total);
        if t1 > 0.0 {
            let used = self.baseline(Phase::Pipeline);
            self.pipeline_slice(t1, used);
            self.slice += 1;
            // A single inner loop that uses its whole share.
            self.inner_loop(t2, 0.0, None);
        } else {
            // The baseline doubles as the first evaluation of the inner loop.
            let used = self.baseline(Phase::Algorithm);
            self.inner_loop(t2, 0.0, Some((self.trace[0].loss, used)));
        }
    }

    /// Alternates slices starting with the pipeline phase. `next_len`
    /// yields the length of the next slice of a phase; `after` sees whether
    /// that slice improved the best loss.
    fn alternate(&mut self, mut next_len: impl FnMut(Phase) -> f64, mut after: impl FnMut(Phase, bool)) {
        let mut phase = Phase::Pipeline;
        let mut first = true;
        while first || self.clock.has_remaining() {
            let len = next_len(phase);
            let before = self.best_loss;
            if phase == Phase::Pipeline {
                let used = if first { self.baseline(Phase::Pipeline) } else { 0.0 };
                self.pipeline_slice(len, used);
            } else {
                self.inner_loop(len, self.settings.epsilon, None);
            }
            let reference = if first { self.trace[0].loss } else { before };
            after(phase, self.best_loss < reference);
            first = false;
            self.slice += 1;
            phase = match phase {
                Phase::Pipeline => Phase::Algorithm,
                _ => Phase::Pipeline,
            };
        }
    }

    fn joint(&mut self) {
        let space = ConfigSpace::union("joint", self.obj.pipeline_space(), self.obj.algorithm_space())
            .expect("pipeline and algorithm dimension names are disjoint");
        let n = self.obj.pipeline_space().num_dims();
        let start = Instant::now();
        let (p, a) = (self.obj.baseline_pipeline(), self.obj.default_algorithm());
        self.step(Phase::Joint, p, a, start, false);
        while self.clock.has_remaining() {
            let start = Instant::now();
            let c = self.joint_opt.suggest(&space, &self.joint_hist);
            let (p, a) = c.split_at(n);
            self.step(Phase::Joint, p, a, start, false);
        }
    }
}

/// Runs one policy to budget exhaustion. The baseline (empty pipeline,
/// default learner configuration) is always evaluated first, charged to the
/// policy's first phase.
pub fn run(obj: &dyn Objective, settings: &RunSettings) -> RunReport {
    let wall = Instant::now();
    let mut r = Runner::new(obj, settings);
    match settings.policy {
        Policy::Split { omega } => r.split(omega),
        Policy::Iterative { slice } => r.alternate(|_| slice, |_, _| {}),
        Policy::Adaptive { initial_slice } => {
            let (lo, hi) = adaptive_bounds(initial_slice, settings.budget.total);
            let states = std::cell::RefCell::new([AdaptiveState::default(); 2]);
            let at = |p: Phase| usize::from(p == Phase::Algorithm);
            r.alternate(
                |p| slice_length(initial_slice, states.borrow()[at(p)].exponent),
                |p, improved| {
                    let mut s = states.borrow_mut();
                    s[at(p)] = adaptive_update(s[at(p)], improved, lo, hi);
                },
            );
        }
        Policy::Joint => r.joint(),
    }
    RunReport {
        policy: settings.policy,
        seed: settings.seed,
        budget: settings.budget,
        epsilon: settings.epsilon,
        best_index: r.best_index,
        ledgers: r.clock.ledgers().clone(),
        trace: r.trace,
        elapsed_seconds: wall.elapsed().as_secs_f64(),
    }
}
