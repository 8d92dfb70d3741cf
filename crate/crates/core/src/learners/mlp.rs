//! One-hidden-layer perceptron: ReLU hidden units, softmax output,
//! cross-entropy loss with L2 penalty, mini-batch gradient descent with
//! momentum.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::Matrix;

use super::tree::argmax;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrSchedule {
    Constant,
    /// `lr / sqrt(1 + epoch)`
    InvScaling,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlpParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub alpha: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub epochs: usize,
    pub schedule: LrSchedule,
    pub shuffle: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    /// `d x h`
    w1: Matrix,
    b1: Vec<f64>,
    /// `h x k`
    w2: Matrix,
    b2: Vec<f64>,
}

impl Mlp {
    pub fn from_weights(w1: Matrix, b1: Vec<f64>, w2: Matrix, b2: Vec<f64>) -> Self {
        assert_eq!(w1.cols(), b1.len());
        assert_eq!(w1.cols(), w2.rows());
        assert_eq!(w2.cols(), b2.len());
        Self { w1, b1, w2, b2 }
    }

    pub fn n_features(&self) -> usize {
        self.w1.rows()
    }

    fn hidden(&self, row: &[f64]) -> Vec<f64> {
        let mut h = self.b1.clone();
        for (j, &xv) in row.iter().enumerate() {
            if xv != 0.0 {
                for (hv, w) in h.iter_mut().zip(self.w1.row(j)) {
                    *hv += xv * w;
                }
            }
        }
        h.iter_mut().for_each(|v| *v = v.max(0.0));
        h
    }

    fn logits(&self, h: &[f64]) -> Vec<f64> {
        let mut o = self.b2.clone();
        for (j, &hv) in h.iter().enumerate() {
            if hv != 0.0 {
                for (ov, w) in o.iter_mut().zip(self.w2.row(j)) {
                    *ov += hv * w;
                }
            }
        }
        o
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.logits(&self.hidden(row)))
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        argmax(&self.logits(&self.hidden(row)))
    }

    pub fn fit<R: Rng + ?Sized>(x: &Matrix, y: &[usize], n_classes: usize, params: &MlpParams, rng: &mut R) -> Self {
        let (n, d) = x.shape();
        let (h, k) = (params.hidden.max(1), n_classes);
        let init = |rows: usize, cols: usize, rng: &mut R| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
            Matrix::from_vec(rows, cols, data).expect("sized")
        };
        let w1 = init(d, h, rng);
        let w2 = init(h, k, rng);
        let mut model = Self {
            w1,
            b1: vec![0.0; h],
            w2,
            b2: vec![0.0; k],
        };
        let mut vel = Self {
            w1: Matrix::zeros(d, h),
            b1: vec![0.0; h],
            w2: Matrix::zeros(h, k),
            b2: vec![0.0; k],
        };
        let mut order: Vec<usize> = (0..n).collect();
        let batch = params.batch_size.max(1);
        for epoch in 0..params.epochs {
            let snapshot = model.clone();
            if params.shuffle {
                order.shuffle(rng);
            }
            let lr = match params.schedule {
                LrSchedule::Constant => params.learning_rate,
                LrSchedule::InvScaling => params.learning_rate / ((1 + epoch) as f64).sqrt(),
            };
            for chunk in order.chunks(batch) {
                let g = model.gradient(x, y, chunk, params.alpha);
                vel.step(&g, params.momentum, lr);
                model.add(&vel);
            }
            if !model.is_finite() {
                // Diverged: keep the last finite weights.
                model = snapshot;
                break;
            }
        }
        model
    }

    fn gradient(&self, x: &Matrix, y: &[usize], batch: &[usize], alpha: f64) -> Self {
        let (d, h, k) = (self.w1.rows(), self.w1.cols(), self.w2.cols());
        let mut g = Self {
            w1: Matrix::zeros(d, h),
            b1: vec![0.0; h],
            w2: Matrix::zeros(h, k),
            b2: vec![0.0; k],
        };
        let m = batch.len() as f64;
        for &i in batch {
            let row = x.row(i);
            let hid = self.hidden(row);
            let mut delta = softmax(&self.logits(&hid));
            delta[y[i]] -= 1.0;
            delta.iter_mut().for_each(|v| *v /= m);
            let mut dh = vec![0.0; h];
            for j in 0..h {
                if hid[j] > 0.0 {
                    let w2row = self.w2.row(j);
                    dh[j] = delta.iter().zip(w2row).map(|(a, b)| a * b).sum();
                    for (gv, dv) in g.w2.row_mut(j).iter_mut().zip(&delta) {
                        *gv += hid[j] * dv;
                    }
                }
            }
            for (gb, dv) in g.b2.iter_mut().zip(&delta) {
                *gb += dv;
            }
            for (j, &xv) in row.iter().enumerate() {
                if xv != 0.0 {
                    for (gv, dv) in g.w1.row_mut(j).iter_mut().zip(&dh) {
                        *gv += xv * dv;
                    }
                }
            }
            for (gb, dv) in g.b1.iter_mut().zip(&dh) {
                *gb += dv;
            }
        }
        for (gv, wv) in g.w1.as_mut_slice().iter_mut().zip(self.w1.as_slice()) {
            *gv += alpha * wv;
        }
        for (gv, wv) in g.w2.as_mut_slice().iter_mut().zip(self.w2.as_slice()) {
            *gv += alpha * wv;
        }
        g
    }

    /// `self = momentum * self - lr * g`
    fn step(&mut self, g: &Self, momentum: f64, lr: f64) {
        let upd = |v: &mut f64, gv: f64| *v = momentum * *v - lr * gv;
        for (v, gv) in self.w1.as_mut_slice().iter_mut().zip(g.w1.as_slice()) {
            upd(v, *gv);
        }
        for (v, gv) in self.w2.as_mut_slice().iter_mut().zip(g.w2.as_slice()) {
            upd(v, *gv);
        }
        for (v, gv) in self.b1.iter_mut().zip(&g.b1) {
            upd(v, *gv);
        }
        for (v, gv) in self.b2.iter_mut().zip(&g.b2) {
            upd(v, *gv);
        }
    }

    fn add(&mut self, other: &Self) {
        for (v, o) in self.w1.as_mut_slice().iter_mut().zip(other.w1.as_slice()) {
            *v += o;
        }
        for (v, o) in self.w2.as_mut_slice().iter_mut().zip(other.w2.as_slice()) {
            *v += o;
        }
        for (v, o) in self.b1.iter_mut().zip(&other.b1) {
            *v += o;
        }
        for (v, o) in self.b2.iter_mut().zip(&other.b2) {
            *v += o;
        }
    }

    fn is_finite(&self) -> bool {
        self.w1
            .as_slice()
            .iter()
            .chain(self.w2.as_slice())
            .chain(&self.b1)
            .chain(&self.b2)
            .all(|v| v.is_finite())
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
