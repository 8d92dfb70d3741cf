//! Per-column scalers and the Yeo-Johnson power transform.

use crate::data::Matrix;

use super::{FittedFunctor, FunctorParams};

pub fn standard_scaler_fit(x: &Matrix, with_mean: bool, with_std: bool) -> FittedFunctor {
    let cols = x.cols();
    let shift = if with_mean { x.column_means() } else { vec![0.0; cols] };
    let scale = if with_std {
        x.column_stds()
            .into_iter()
            .map(|s| if s > 0.0 { s } else { 1.0 })
            .collect()
    } else {
        vec![1.0; cols]
    };
    affine("standard_scaler", shift, scale)
}

/// Quantile of sorted data with linear interpolation between order
/// statistics: position `h = (n - 1) * q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn robust_scaler_fit(
    x: &Matrix,
    with_centering: bool,
    with_scaling: bool,
    quantile_range: (f64, f64),
) -> FittedFunctor {
    let mut shift = vec![0.0; x.cols()];
    let mut scale = vec![1.0; x.cols()];
    for c in 0..x.cols() {
        let mut col = x.column(c);
        col.sort_by(f64::total_cmp);
        if with_centering {
            shift[c] = quantile_sorted(&col, 0.5);
        }
        if with_scaling {
            let iqr = quantile_sorted(&col, quantile_range.1 / 100.0) - quantile_sorted(&col, quantile_range.0 / 100.0);
            if iqr > 0.0 {
                scale[c] = iqr;
            }
        }
    }
    affine("robust_scaler", shift, scale)
}

pub fn minmax_fit(x: &Matrix) -> FittedFunctor {
    let mut shift = vec![0.0; x.cols()];
    let mut scale = vec![1.0; x.cols()];
    for c in 0..x.cols() {
        let col = x.column(c);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        shift[c] = lo;
        if hi > lo {
            scale[c] = hi - lo;
        }
    }
    affine("minmax_scaler", shift, scale)
}

fn affine(kind: &str, shift: Vec<f64>, scale: Vec<f64>) -> FittedFunctor {
    if shift.iter().all(|&s| s == 0.0) && scale.iter().all(|&s| s == 1.0) {
        return FittedFunctor::identity(kind);
    }
    FittedFunctor {
        kind: kind.to_string(),
        params: FunctorParams::Affine { shift, scale },
    }
}

pub fn yeo_johnson(y: f64, lambda: f64) -> f64 {
    const EPS: f64 = 1e-12;
    if y >= 0.0 {
        if lambda.abs() < EPS {
            y.ln_1p()
        } else {
            ((y + 1.0).powf(lambda) - 1.0) / lambda
        }
    } else if (lambda - 2.0).abs() < EPS {
        -(-y).ln_1p()
    } else {
        -((1.0 - y).powf(2.0 - lambda) - 1.0) / (2.0 - lambda)
    }
}

/// Gaussian profile log-likelihood of the transformed column.
fn yeo_johnson_llf(col: &[f64], lambda: f64) -> f64 {
    let n = col.len() as f64;
    let t: Vec<f64> = col.iter().map(|&y| yeo_johnson(y, lambda)).collect();
    let mean = t.iter().sum::<f64>() / n;
    let var = t.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if !var.is_finite() || var <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let jac: f64 = col.iter().map(|&y| y.signum() * y.abs().ln_1p()).sum();
    -0.5 * n * var.ln() + (lambda - 1.0) * jac
}

const GOLDEN_ITERS: usize = 64;
const LAMBDA_BOUNDS: (f64, f64) = (-5.0, 5.0);

/// Golden-section maximization of the Yeo-Johnson log-likelihood.
pub fn yeo_johnson_lambda(col: &[f64]) -> f64 {
    let first = col[0];
    if col.iter().all(|&v| v == first) {
        return 1.0;
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = LAMBDA_BOUNDS;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = yeo_johnson_llf(col, c);
    let mut fd = yeo_johnson_llf(col, d);
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = yeo_johnson_llf(col, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = yeo_johnson_llf(col, d);
        }
    }
    (a + b) / 2.0
}

pub fn power_transform_fit(x: &Matrix) -> FittedFunctor {
    let lambdas = (0..x.cols()).map(|c| yeo_johnson_lambda(&x.column(c))).collect();
    FittedFunctor {
        kind: "power_transform".to_string(),
        params: FunctorParams::YeoJohnson { lambdas },
    }
}
