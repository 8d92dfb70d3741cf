use std::collections::BTreeMap;

use serde_json::{json, Map, Value as Json};

use crate::configspace::{ConfigSpace, Configuration};
use crate::metaopt::Phase;

use super::budget::{Budget, BudgetMode, PhaseLedger};
use super::policy::Policy;

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub eval_index: usize,
    pub phase: Phase,
    /// Ordinal of the slice (maximal same-phase run) the trial belongs to.
    pub slice: usize,
    /// Budget consumed after this evaluation.
    pub clock: f64,
    pub pipeline: Configuration,
    pub algorithm: Configuration,
    pub loss: f64,
    /// Identifies the transformed data the learner was trained on.
    pub fingerprint: u64,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub policy: Policy,
    pub seed: u64,
    pub budget: Budget,
    pub epsilon: f64,
    pub trace: Vec<TraceRecord>,
    /// Index into `trace`; the baseline when nothing finite beat it.
    pub best_index: usize,
    pub ledgers: BTreeMap<Phase, PhaseLedger>,
    pub elapsed_seconds: f64,
}

fn loss_json(loss: f64) -> Json {
    if loss.is_finite() {
        json!(loss)
    } else {
        Json::Null
    }
}

fn config_json(p: &ConfigSpace, a: &ConfigSpace, pc: &Configuration, ac: &Configuration) -> Json {
    json!({ "pipeline": p.to_json(pc), "algorithm": a.to_json(ac) })
}

impl RunReport {
    pub fn best(&self) -> &TraceRecord {
        &self.trace[self.best_index]
    }

    pub fn baseline(&self) -> &TraceRecord {
        &self.trace[0]
    }

    /// `(clock, best loss so far)` after every trial.
    pub fn best_curve(&self) -> Vec<(f64, f64)> {
        let mut best = f64::INFINITY;
        self.trace
            .iter()
            .map(|t| {
                best = best.min(t.loss);
                (t.clock, best)
            })
            .collect()
    }

    pub fn trace_line(&self, t: &TraceRecord, p: &ConfigSpace, a: &ConfigSpace) -> Json {
        let mut m = Map::new();
        m.insert("eval_index".into(), json!(t.eval_index));
        m.insert("phase".into(), json!(t.phase.name()));
        m.insert("slice".into(), json!(t.slice));
        m.insert("clock".into(), json!(t.clock));
        m.insert("config".into(), config_json(p, a, &t.pipeline, &t.algorithm));
        m.insert("loss".into(), loss_json(t.loss));
        m.insert(
            "status".into(),
            json!(if t.loss.is_finite() { "ok" } else { "incompatible" }),
        );
        m.insert("fingerprint".into(), json!(format!("{:016x}", t.fingerprint)));
        if let Some(n) = &t.note {
            m.insert("note".into(), json!(n));
        }
        Json::Object(m)
    }

    /// One JSON object per trial, newline-terminated.
    pub fn to_jsonl(&self, p: &ConfigSpace, a: &ConfigSpace) -> String {
        let mut out = String::new();
        for t in &self.trace {
            out.push_str(&self.trace_line(t, p, a).to_string());
            out.push('\n');
        }
        out
    }

    /// Run summary; wall time is included only in wall-clock mode so that
    /// eval-count summaries are reproducible.
    pub fn summary(&self, p: &ConfigSpace, a: &ConfigSpace) -> Json {
        let best = self.best();
        let base = self.baseline();
        let ledgers: Map<String, Json> = self
            .ledgers
            .iter()
            .map(|(ph, l)| {
                (
                    ph.name().to_string(),
                    json!({ "consumed": l.consumed, "evals": l.evals }),
                )
            })
            .collect();
        let mut m = Map::new();
        m.insert("policy".into(), json!(self.policy.to_string()));
        m.insert("seed".into(), json!(self.seed));
        m.insert(
            "budget".into(),
            json!({ "mode": self.budget.mode, "total": self.budget.total }),
        );
        m.insert(
            "epsilon".into(),
            if self.epsilon.is_finite() {
                json!(self.epsilon)
            } else {
                json!("inf")
            },
        );
        m.insert("evaluations".into(), json!(self.trace.len()));
        m.insert("ledgers".into(), Json::Object(ledgers));
        m.insert("baseline_loss".into(), loss_json(base.loss));
        m.insert(
            "best".into(),
            json!({
                "eval_index": best.eval_index,
                "loss": loss_json(best.loss),
                "accuracy": if best.loss.is_finite() { json!(1.0 - best.loss) } else { Json::Null },
                "config": config_json(p, a, &best.pipeline, &best.algorithm),
            }),
        );
        if self.budget.mode == BudgetMode::Wall {
            m.insert("elapsed_seconds".into(), json!(self.elapsed_seconds));
        }
        Json::Object(m)
    }
}
