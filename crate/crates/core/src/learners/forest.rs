//! Bagged CART trees with per-split feature subsampling. Predictions average
//! the leaf class proportions of all trees.

use rand::{Rng, SeedableRng};

use crate::data::Matrix;
use crate::exec::Execution;
use crate::rng::Rng as StreamRng;

use super::tree::{argmax, DecisionTree, TreeParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_classes: usize,
}

impl RandomForest {
    /// Per-tree seeds are drawn from `rng` up front, so the result does not
    /// depend on `exec`.
    pub fn fit<R: Rng + ?Sized>(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        params: &ForestParams,
        rng: &mut R,
        exec: Execution,
    ) -> Self {
        let seeds: Vec<u64> = (0..params.n_estimators.max(1)).map(|_| rng.gen()).collect();
        let n = x.rows();
        let trees = exec.map(&seeds, |&s| {
            let mut r = StreamRng::seed_from_u64(s);
            let idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| r.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            DecisionTree::fit(x, y, n_classes, &idx, &params.tree, &mut r)
        });
        Self { trees, n_classes }
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut acc = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, p) in acc.iter_mut().zip(t.proba_row(row)) {
                *a += p;
            }
        }
        argmax(&acc)
    }
}
