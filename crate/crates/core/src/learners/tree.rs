//! CART classification tree with Gini impurity.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::Matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
    Fraction(f64),
}

impl MaxFeatures {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(Self::All),
            "sqrt" => Some(Self::Sqrt),
            "log2" => Some(Self::Log2),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|f| *f > 0.0 && *f <= 1.0)
                .map(Self::Fraction),
        }
    }

    /// Number of features examined per split, at least 1.
    pub fn count(self, d: usize) -> usize {
        let k = match self {
            Self::All => d,
            Self::Sqrt => (d as f64).sqrt().floor() as usize,
            Self::Log2 => (d as f64).log2().floor() as usize,
            Self::Fraction(f) => (f * d as f64).floor() as usize,
        };
        k.clamp(1, d.max(1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Splitter {
    /// Exhaustive threshold search.
    Best,
    /// One uniform threshold per examined feature.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub splitter: Splitter,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            splitter: Splitter::Best,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    /// Class proportions of the training rows that reached the leaf.
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
    n_classes: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    /// Σ c_l²/n_l + Σ c_r²/n_r; larger means lower weighted Gini.
    purity: f64,
}

impl DecisionTree {
    /// Fits on the rows `idx` of `x` (repeats allowed, as in bootstrap
    /// samples).
    pub fn fit<R: Rng + ?Sized>(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        idx: &[usize],
        params: &TreeParams,
        rng: &mut R,
    ) -> Self {
        let mut tree = Self {
            nodes: Vec::new(),
            n_features: x.cols(),
            n_classes,
        };
        tree.build(x, y, idx.to_vec(), 0, params, rng);
        tree
    }

    fn distribution(&self, y: &[usize], idx: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.n_classes];
        for &i in idx {
            counts[y[i]] += 1.0;
        }
        let n = idx.len().max(1) as f64;
        counts.iter_mut().for_each(|c| *c /= n);
        counts
    }

    fn build<R: Rng + ?Sized>(
        &mut self,
        x: &Matrix,
        y: &[usize],
        idx: Vec<usize>,
        depth: usize,
        params: &TreeParams,
        rng: &mut R,
    ) -> usize {
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(self.distribution(y, &idx)));
        let pure = idx.iter().all(|&i| y[i] == y[idx[0]]);
        let depth_ok = params.max_depth.is_none_or(|m| depth < m);
        if pure || !depth_ok || idx.len() < params.min_samples_split.max(2) {
            return at;
        }
        let Some(c) = self.best_split(x, y, &idx, params, rng) else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| x.get(i, c.feature) <= c.threshold);
        let left = self.build(x, y, l, depth + 1, params, rng);
        let right = self.build(x, y, r, depth + 1, params, rng);
        self.nodes[at] = Node::Split {
            feature: c.feature,
            threshold: c.threshold,
            left,
            right,
        };
        at
    }

    fn best_split<R: Rng + ?Sized>(
        &self,
        x: &Matrix,
        y: &[usize],
        idx: &[usize],
        params: &TreeParams,
        rng: &mut R,
    ) -> Option<Candidate> {
        let d = x.cols();
        let k = params.max_features.count(d);
        let mut order: Vec<usize> = (0..d).collect();
        if k < d || params.splitter == Splitter::Random {
            order.shuffle(rng);
        }
        let mut best: Option<Candidate> = None;
        // Examine at least `k` features, continuing past `k` only while no
        // valid split has been found.
        for (visited, &f) in order.iter().enumerate() {
            if visited >= k && best.is_some() {
                break;
            }
            let found = match params.splitter {
                Splitter::Best => self.scan_feature(x, y, idx, f, params.min_samples_leaf),
                Splitter::Random => self.random_threshold(x, y, idx, f, params.min_samples_leaf, rng),
            };
            if let Some(c) = found {
                if best.as_ref().is_none_or(|b| c.purity > b.purity) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn scan_feature(&self, x: &Matrix, y: &[usize], idx: &[usize], f: usize, min_leaf: usize) -> Option<Candidate> {
        let mut sorted: Vec<(f64, usize)> = idx.iter().map(|&i| (x.get(i, f), y[i])).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len();
        let mut left = vec![0usize; self.n_classes];
        let mut right = vec![0usize; self.n_classes];
        for &(_, c) in &sorted {
            right[c] += 1;
        }
        let sq = |v: &[usize]| v.iter().map(|&c| (c * c) as f64).sum::<f64>();
        let (mut sl, mut sr) = (0.0, sq(&right));
        let mut best: Option<Candidate> = None;
        for p in 0..n - 1 {
            let c = sorted[p].1;
            sl += (2 * left[c] + 1) as f64;
            sr -= (2 * right[c] - 1) as f64;
            left[c] += 1;
            right[c] -= 1;
            let (nl, nr) = (p + 1, n - p - 1);
            if nl < min_leaf || nr < min_leaf || sorted[p].0 >= sorted[p + 1].0 {
                continue;
            }
            let purity = sl / nl as f64 + sr / nr as f64;
            if best.as_ref().is_none_or(|b| purity > b.purity) {
                let (a, b) = (sorted[p].0, sorted[p + 1].0);
                let mid = a + (b - a) / 2.0;
                best = Some(Candidate {
                    feature: f,
                    threshold: if mid < b { mid } else { a },
                    purity,
                });
            }
        }
        best
    }

    fn random_threshold<R: Rng + ?Sized>(
        &self,
        x: &Matrix,
        y: &[usize],
        idx: &[usize],
        f: usize,
        min_leaf: usize,
        rng: &mut R,
    ) -> Option<Candidate> {
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = x.get(i, f);
            (lo.min(v), hi.max(v))
        });
        if lo >= hi {
            return None;
        }
        let threshold = rng.gen_range(lo..hi);
        let mut left = vec![0usize; self.n_classes];
        let mut right = vec![0usize; self.n_classes];
        for &i in idx {
            if x.get(i, f) <= threshold {
                left[y[i]] += 1;
            } else {
                right[y[i]] += 1;
            }
        }
        let (nl, nr) = (left.iter().sum::<usize>(), right.iter().sum::<usize>());
        if nl < min_leaf.max(1) || nr < min_leaf.max(1) {
            return None;
        }
        let sq = |v: &[usize]| v.iter().map(|&c| (c * c) as f64).sum::<f64>();
        Some(Candidate {
            feature: f,
            threshold,
            purity: sq(&left) / nl as f64 + sq(&right) / nr as f64,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn proba_row(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        argmax(self.proba_row(row))
    }
}

/// Index of the largest value; ties go to the lower index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
