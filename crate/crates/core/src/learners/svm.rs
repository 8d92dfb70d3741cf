//! Linear SVM: L2-regularized hinge loss minimized by stochastic
//! subgradient descent, one-vs-rest for more than two classes.
//!
//! Objective per binary problem, with `lambda = 1 / (C n)`:
//!
//! ```text
//! lambda/2 |w|^2 + (1/n) sum_i max(0, 1 - y_i (w.x_i + b))
//! ```

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::Matrix;

use super::tree::argmax;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepSchedule {
    Constant,
    /// `eta0 / sqrt(1 + t)`
    InvSqrt,
    /// `eta0 / (1 + lambda eta0 t)`
    InvT,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub max_epochs: usize,
    pub eta0: f64,
    pub schedule: StepSchedule,
    pub fit_intercept: bool,
}

/// One weight row per binary problem. With a single row the model is
/// binary: class 1 when the score is positive, class 0 otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvm {
    weights: Matrix,
    bias: Vec<f64>,
}

impl LinearSvm {
    pub fn from_weights(weights: Matrix, bias: Vec<f64>) -> Self {
        assert_eq!(weights.rows(), bias.len());
        Self { weights, bias }
    }

    pub fn fit<R: Rng + ?Sized>(x: &Matrix, y: &[usize], n_classes: usize, params: &SvmParams, rng: &mut R) -> Self {
        let problems: Vec<usize> = if n_classes == 2 {
            vec![1]
        } else {
            (0..n_classes).collect()
        };
        let d = x.cols();
        let mut weights = Matrix::zeros(problems.len(), d);
        let mut bias = vec![0.0; problems.len()];
        let n = x.rows();
        let lambda = 1.0 / (params.c * n as f64);
        let mut order: Vec<usize> = (0..n).collect();
        for (p, &positive) in problems.iter().enumerate() {
            let w = weights.row_mut(p);
            let mut b = 0.0;
            let mut t = 0usize;
            for _ in 0..params.max_epochs {
                order.shuffle(rng);
                for &i in &order {
                    let eta = match params.schedule {
                        StepSchedule::Constant => params.eta0,
                        StepSchedule::InvSqrt => params.eta0 / ((1 + t) as f64).sqrt(),
                        StepSchedule::InvT => params.eta0 / (1.0 + lambda * params.eta0 * t as f64),
                    };
                    t += 1;
                    let label = if y[i] == positive { 1.0 } else { -1.0 };
                    let row = x.row(i);
                    let margin = label * (dot(w, row) + b);
                    // Shrink factor clamped at 0 so huge steps cannot flip signs.
                    let shrink = (1.0 - eta * lambda).max(0.0);
                    w.iter_mut().for_each(|v| *v *= shrink);
                    if margin < 1.0 {
                        for (v, xv) in w.iter_mut().zip(row) {
                            *v += eta * label * xv;
                        }
                        if params.fit_intercept {
                            b += eta * label;
                        }
                    }
                }
            }
            if !(w.iter().all(|v| v.is_finite()) && b.is_finite()) {
                w.iter_mut().for_each(|v| *v = 0.0);
                b = 0.0;
            }
            bias[p] = b;
        }
        Self { weights, bias }
    }

    pub fn n_features(&self) -> usize {
        self.weights.cols()
    }

    pub fn decision(&self, row: &[f64]) -> Vec<f64> {
        (0..self.weights.rows())
            .map(|p| dot(self.weights.row(p), row) + self.bias[p])
            .collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        let s = self.decision(row);
        if s.len() == 1 {
            usize::from(s[0] > 0.0)
        } else {
            argmax(&s)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
