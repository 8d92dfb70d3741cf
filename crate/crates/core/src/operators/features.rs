//! ANOVA F-score selection and PCA.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::{class_counts, Matrix};

use super::{FittedFunctor, FunctorParams, OperatorError};

/// One-way ANOVA F statistic of a feature against class labels.
///
/// Zero within-group variance yields `+inf` when the group means differ and
/// `0` when they do not.
pub fn f_score(column: &[f64], y: &[usize]) -> Result<f64, OperatorError> {
    let counts = class_counts(y, 0);
    let groups: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    if groups.len() < 2 {
        return Err(OperatorError::TooFewClasses(groups.len()));
    }
    let n = column.len() as f64;
    let grand = column.iter().sum::<f64>() / n;
    let mut sums = vec![0.0; counts.len()];
    for (&v, &c) in column.iter().zip(y) {
        sums[c] += v;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let ssb: f64 = groups
        .iter()
        .map(|&g| counts[g] as f64 * (means[g] - grand).powi(2))
        .sum();
    let ssw: f64 = column.iter().zip(y).map(|(&v, &c)| (v - means[c]).powi(2)).sum();
    let df_between = (groups.len() - 1) as f64;
    let df_within = n - groups.len() as f64;
    // Relative tolerance keeps round-off from turning identical means into
    // a spurious positive between-group term.
    let scale = column.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let ssb = if ssb <= 1e-14 * scale { 0.0 } else { ssb };
    if ssw <= 1e-14 * scale || df_within <= 0.0 {
        return Ok(if ssb > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok((ssb / df_between) / (ssw / df_within))
}

/// Keeps the `k` highest-scoring columns, ties broken by lower index, and
/// emits them in original column order.
pub fn select_k_best_fit(x: &Matrix, y: &[usize], k: usize) -> Result<FittedFunctor, OperatorError> {
    if k == 0 || k > x.cols() {
        return Err(OperatorError::Incompatible(format!(
            "select_k_best k={k} with {} columns",
            x.cols()
        )));
    }
    let scores = (0..x.cols())
        .map(|c| f_score(&x.column(c), y))
        .collect::<Result<Vec<_>, _>>()?;
    let mut order: Vec<usize> = (0..x.cols()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut indices = order[..k].to_vec();
    indices.sort_unstable();
    Ok(FittedFunctor {
        kind: "select_k_best".into(),
        params: FunctorParams::Select { indices },
    })
}

/// Principal components of the centered data, largest variance first.
pub fn pca_fit(x: &Matrix, k: usize) -> Result<FittedFunctor, OperatorError> {
    let (n, d) = x.shape();
    if k == 0 || n < 2 || k > d.min(n - 1) {
        return Err(OperatorError::Incompatible(format!("pca k={k} on a {n}x{d} matrix")));
    }
    let mean = x.column_means();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for r in 0..n {
        let row = x.row(r);
        for i in 0..d {
            let ci = row[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += ci * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (n - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = Matrix::zeros(k, d);
    let mut explained = Vec::with_capacity(k);
    for (row, &e) in order[..k].iter().enumerate() {
        let v = eig.eigenvectors.column(e);
        // Sign convention: the largest-magnitude loading is positive.
        let pivot = (0..d)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components.set(row, j, sign * v[j]);
        }
        explained.push(eig.eigenvalues[e].max(0.0));
    }
    Ok(FittedFunctor {
        kind: "pca".into(),
        params: FunctorParams::Projection {
            mean,
            components,
            explained_variance: explained,
        },
    })
}
