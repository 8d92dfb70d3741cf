use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::metaopt::Phase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetMode {
    /// Seconds of wall time spent suggesting and evaluating.
    Wall,
    /// One unit per evaluation; fully deterministic.
    Evals,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub mode: BudgetMode,
    pub total: f64,
}

impl Budget {
    pub fn evals(total: usize) -> Self {
        Self {
            mode: BudgetMode::Evals,
            total: total as f64,
        }
    }

    pub fn wall(seconds: f64) -> Self {
        Self {
            mode: BudgetMode::Wall,
            total: seconds,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseLedger {
    pub consumed: f64,
    pub evals: usize,
}

/// Running budget consumption. Evaluations start only while
/// `consumed < total`; one that starts is always charged in full.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetClock {
    budget: Budget,
    consumed: f64,
    ledger: BTreeMap<Phase, PhaseLedger>,
}

impl BudgetClock {
    pub fn new(budget: Budget) -> Self {
        Self {
            budget,
            consumed: 0.0,
            ledger: BTreeMap::new(),
        }
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn consumed(&self) -> f64 {
        self.consumed
    }

    pub fn has_remaining(&self) -> bool {
        self.consumed < self.budget.total
    }

    /// Charges one evaluation that took `seconds`; returns the units charged.
    pub fn charge(&mut self, phase: Phase, seconds: f64) -> f64 {
        let units = match self.budget.mode {
            BudgetMode::Evals => 1.0,
            BudgetMode::Wall => seconds,
        };
        self.consumed += units;
        let l = self.ledger.entry(phase).or_default();
        l.consumed += units;
        l.evals += 1;
        units
    }

    pub fn ledger(&self, phase: Phase) -> PhaseLedger {
        self.ledger.get(&phase).copied().unwrap_or_default()
    }

    pub fn ledgers(&self) -> &BTreeMap<Phase, PhaseLedger> {
        &self.ledger
    }
}
