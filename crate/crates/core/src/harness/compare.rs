use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::configspace::ConfigSpace;
use crate::exec::Execution;
use crate::metaopt::Phase;
use crate::twostage::{run, BudgetMode, Policy, RunReport};

use super::experiment::Experiment;
use super::HarnessError;

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub policy: Policy,
    pub seed: u64,
    pub report: RunReport,
}

impl RunOutcome {
    /// File stem such as `split-0.5_seed3`.
    pub fn stem(&self) -> String {
        let p: String = self
            .policy
            .to_string()
            .chars()
            .map(|c| if c == ':' { '-' } else { c })
            .collect();
        format!("{p}_seed{}", self.seed)
    }

    pub fn visited_pipelines(&self) -> usize {
        self.report
            .trace
            .iter()
            .map(|t| &t.pipeline)
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn visited_algorithms(&self) -> usize {
        self.report
            .trace
            .iter()
            .map(|t| &t.algorithm)
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// All runs of a comparison, in (policy, seed) order.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub pipeline_space: ConfigSpace,
    pub algorithm_space: ConfigSpace,
    pub runs: Vec<RunOutcome>,
}

/// One two-stage run of the experiment with the given policy and seed.
pub fn run_one(exp: &Experiment, policy: Policy, seed: u64, exec: Execution) -> Result<RunOutcome, HarnessError> {
    let obj = exp.objective(seed, exec)?;
    let report = run(&obj, &exp.settings(policy, seed));
    Ok(RunOutcome { policy, seed, report })
}

/// Runs every (policy, seed) pair. Eval-count runs execute concurrently;
/// wall-clock runs execute one at a time so they do not contend for cores.
pub fn policy_compare(
    exp: &Experiment,
    policies: &[Policy],
    seeds: &[u64],
    exec: Execution,
) -> Result<Comparison, HarnessError> {
    for p in policies {
        p.validate()?;
    }
    let pairs: Vec<(Policy, u64)> = policies
        .iter()
        .flat_map(|&p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let runs = if exp.config.budget.mode == BudgetMode::Evals {
        exec.map(&pairs, |&(p, s)| run_one(exp, p, s, Execution::Sequential))
    } else {
        pairs.iter().map(|&(p, s)| run_one(exp, p, s, exec)).collect()
    };
    let pipeline_space = exp.pipeline_space().space().clone();
    Ok(Comparison {
        pipeline_space,
        algorithm_space: exp.learner.config_space().clone(),
        runs: runs.into_iter().collect::<Result<_, _>>()?,
    })
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
}

fn accuracy(loss: f64) -> String {
    if loss.is_finite() {
        (1.0 - loss).to_string()
    } else {
        String::new()
    }
}

impl Comparison {
    /// Best accuracy so far after every trial of every run.
    pub fn curves_csv(&self) -> Result<String, csv::Error> {
        let mut rows = vec![["policy", "seed", "eval_index", "clock", "best_accuracy"]
            .map(String::from)
            .to_vec()];
        for r in &self.runs {
            for (t, (clock, best)) in r.report.trace.iter().zip(r.report.best_curve()) {
                rows.push(vec![
                    r.policy.to_string(),
                    r.seed.to_string(),
                    t.eval_index.to_string(),
                    clock.to_string(),
                    accuracy(best),
                ]);
            }
        }
        csv_string(rows)
    }

    /// One row per run with budget split and visited counts.
    pub fn summary_csv(&self) -> Result<String, csv::Error> {
        let mut rows = vec![[
            "policy",
            "seed",
            "evaluations",
            "visited_pipelines",
            "visited_algorithms",
            "pipeline_consumed",
            "algorithm_consumed",
            "joint_consumed",
            "baseline_accuracy",
            "best_accuracy",
        ]
        .map(String::from)
        .to_vec()];
        for r in &self.runs {
            let used = |p: Phase| r.report.ledgers.get(&p).map_or(0.0, |l| l.consumed).to_string();
            rows.push(vec![
                r.policy.to_string(),
                r.seed.to_string(),
                r.report.trace.len().to_string(),
                r.visited_pipelines().to_string(),
                r.visited_algorithms().to_string(),
                used(Phase::Pipeline),
                used(Phase::Algorithm),
                used(Phase::Joint),
                accuracy(r.report.baseline().loss),
                accuracy(r.report.best().loss),
            ]);
        }
        csv_string(rows)
    }

    pub fn jsonl(&self, run: &RunOutcome) -> String {
        run.report.to_jsonl(&self.pipeline_space, &self.algorithm_space)
    }

    pub fn summary_json(&self, run: &RunOutcome) -> String {
        let mut s = serde_json::to_string_pretty(&run.report.summary(&self.pipeline_space, &self.algorithm_space))
            .expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes `<stem>.jsonl` and `<stem>.summary.json` per run plus
    /// `curves.csv` and `comparison.csv`; returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> Result<(), HarnessError> {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| HarnessError::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        for r in &self.runs {
            put(format!("{}.jsonl", r.stem()), self.jsonl(r))?;
            put(format!("{}.summary.json", r.stem()), self.summary_json(r))?;
        }
        put("curves.csv".into(), self.curves_csv()?)?;
        put("comparison.csv".into(), self.summary_csv()?)?;
        Ok(written)
    }
}
