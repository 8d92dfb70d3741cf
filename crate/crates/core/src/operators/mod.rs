//! Concrete preprocessing operators and their fitted functors.
//!
//! Fitting an operator on a training set yields the transformed training
//! set plus a [`FittedFunctor`] that maps unseen rows the same way.
//! Rebalancing operators only act on the training set; their functor is the
//! identity.

mod catalog;
pub mod features;
pub mod resample;
pub mod scale;

use rand::Rng;
use thiserror::Error;

use crate::configspace::{ConfigSpace, Configuration, SpaceError};
use crate::data::{Dataset, Matrix};

pub use catalog::{feature_k_grid, standard_catalog, Catalog, FEATURE_FRACTIONS};
pub use features::{f_score, pca_fit, select_k_best_fit};
pub use resample::{cnn_fit, nearmiss_fit, smote_fit};
pub use scale::{minmax_fit, power_transform_fit, robust_scaler_fit, standard_scaler_fit};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum OperatorError {
    /// The operator cannot run on this data; the caller scores it `+inf`.
    #[error("runtime incompatibility: {0}")]
    Incompatible(String),
    #[error("operator needs at least two classes, found {0}")]
    TooFewClasses(usize),
    #[error("functor expects {expected} columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("unknown operator `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Config(#[from] SpaceError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum FunctorParams {
    Identity,
    /// `(x - shift) / scale`, per column.
    Affine {
        shift: Vec<f64>,
        scale: Vec<f64>,
    },
    YeoJohnson {
        lambdas: Vec<f64>,
    },
    /// Centered projection onto orthonormal rows of `components`.
    Projection {
        mean: Vec<f64>,
        components: Matrix,
        explained_variance: Vec<f64>,
    },
    /// Sorted, unique column indices.
    Select {
        indices: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FittedFunctor {
    pub kind: String,
    pub params: FunctorParams,
}

impl FittedFunctor {
    pub fn identity(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            params: FunctorParams::Identity,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.params == FunctorParams::Identity
    }

    fn expected_cols(&self) -> Option<usize> {
        match &self.params {
            FunctorParams::Identity => None,
            FunctorParams::Affine { shift, .. } => Some(shift.len()),
            FunctorParams::YeoJohnson { lambdas } => Some(lambdas.len()),
            FunctorParams::Projection { mean, .. } => Some(mean.len()),
            FunctorParams::Select { .. } => None,
        }
    }

    pub fn output_cols(&self, input_cols: usize) -> usize {
        match &self.params {
            FunctorParams::Projection { components, .. } => components.rows(),
            FunctorParams::Select { indices } => indices.len(),
            _ => input_cols,
        }
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix, OperatorError> {
        if let Some(expected) = self.expected_cols() {
            if expected != x.cols() {
                return Err(OperatorError::ColumnMismatch {
                    expected,
                    got: x.cols(),
                });
            }
        }
        Ok(match &self.params {
            FunctorParams::Identity => x.clone(),
            FunctorParams::Affine { shift, scale } => {
                let mut out = x.clone();
                out.map_columns(|c, v| (v - shift[c]) / scale[c]);
                out
            }
            FunctorParams::YeoJohnson { lambdas } => {
                let mut out = x.clone();
                out.map_columns(|c, v| scale::yeo_johnson(v, lambdas[c]));
                out
            }
            FunctorParams::Projection { mean, components, .. } => {
                let k = components.rows();
                let mut out = Matrix::zeros(x.rows(), k);
                for r in 0..x.rows() {
                    let row = x.row(r);
                    for j in 0..k {
                        let comp = components.row(j);
                        let v = row.iter().zip(mean).zip(comp).map(|((a, m), w)| (a - m) * w).sum();
                        out.set(r, j, v);
                    }
                }
                out
            }
            FunctorParams::Select { indices } => {
                if let Some(&bad) = indices.iter().find(|&&i| i >= x.cols()) {
                    return Err(OperatorError::ColumnMismatch {
                        expected: bad + 1,
                        got: x.cols(),
                    });
                }
                x.select_cols(indices)
            }
        })
    }
}

/// Fully-resolved operator settings.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorConfig {
    NearMiss {
        version: u8,
    },
    CondensedNearestNeighbour {
        n_neighbors: usize,
    },
    Smote {
        k_neighbors: usize,
    },
    StandardScaler {
        with_mean: bool,
        with_std: bool,
    },
    PowerTransform,
    MinMaxScaler,
    RobustScaler {
        with_centering: bool,
        with_scaling: bool,
        quantile_range: (f64, f64),
    },
    Pca {
        k: usize,
    },
    SelectKBest {
        k: usize,
    },
}

fn parse_quantile_range(s: &str) -> Result<(f64, f64), OperatorError> {
    let bad = || OperatorError::Incompatible(format!("quantile range `{s}`"));
    let (a, b) = s.split_once('-').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(0.0..b).contains(&a) || b > 100.0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn positive(name: &str, v: i64) -> Result<usize, OperatorError> {
    usize::try_from(v)
        .ok()
        .filter(|&v| v > 0)
        .ok_or_else(|| OperatorError::Incompatible(format!("{name} must be positive, got {v}")))
}

impl OperatorConfig {
    pub fn from_config(name: &str, space: &ConfigSpace, config: &Configuration) -> Result<Self, OperatorError> {
        let v = space.view(config);
        Ok(match name {
            "near_miss" => {
                let version = v.int("version")?;
                OperatorConfig::NearMiss {
                    version: u8::try_from(version).unwrap_or(0),
                }
            }
            "condensed_nearest_neighbour" => OperatorConfig::CondensedNearestNeighbour {
                n_neighbors: positive("n_neighbors", v.int("n_neighbors")?)?,
            },
            "smote" => OperatorConfig::Smote {
                k_neighbors: positive("k_neighbors", v.int("k_neighbors")?)?,
            },
            "standard_scaler" => OperatorConfig::StandardScaler {
                with_mean: v.boolean("with_mean")?,
                with_std: v.boolean("with_std")?,
            },
            "power_transform" => OperatorConfig::PowerTransform,
            "minmax_scaler" => OperatorConfig::MinMaxScaler,
            "robust_scaler" => OperatorConfig::RobustScaler {
                with_centering: v.boolean("with_centering")?,
                with_scaling: v.boolean("with_scaling")?,
                quantile_range: parse_quantile_range(&v.cat("quantile_range")?)?,
            },
            "pca" => OperatorConfig::Pca {
                k: positive("k", v.int("k")?)?,
            },
            "select_k_best" => OperatorConfig::SelectKBest {
                k: positive("k", v.int("k")?)?,
            },
            other => return Err(OperatorError::Unknown(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            OperatorConfig::NearMiss { .. } => "near_miss",
            OperatorConfig::CondensedNearestNeighbour { .. } => "condensed_nearest_neighbour",
            OperatorConfig::Smote { .. } => "smote",
            OperatorConfig::StandardScaler { .. } => "standard_scaler",
            OperatorConfig::PowerTransform => "power_transform",
            OperatorConfig::MinMaxScaler => "minmax_scaler",
            OperatorConfig::RobustScaler { .. } => "robust_scaler",
            OperatorConfig::Pca { .. } => "pca",
            OperatorConfig::SelectKBest { .. } => "select_k_best",
        }
    }

    pub fn is_train_only(&self) -> bool {
        matches!(
            self,
            OperatorConfig::NearMiss { .. }
                | OperatorConfig::CondensedNearestNeighbour { .. }
                | OperatorConfig::Smote { .. }
        )
    }

    /// Fits on `data`, returning the transformed training set and the functor.
    pub fn fit<R: Rng + ?Sized>(&self, data: &Dataset, rng: &mut R) -> Result<(Dataset, FittedFunctor), OperatorError> {
        let functor = match self {
            OperatorConfig::NearMiss { version } => {
                return Ok((nearmiss_fit(data, *version)?, FittedFunctor::identity(self.name())))
            }
            OperatorConfig::CondensedNearestNeighbour { n_neighbors } => {
                return Ok((cnn_fit(data, *n_neighbors, rng)?, FittedFunctor::identity(self.name())))
            }
            OperatorConfig::Smote { k_neighbors } => {
                return Ok((
                    smote_fit(data, *k_neighbors, rng)?,
                    FittedFunctor::identity(self.name()),
                ))
            }
            OperatorConfig::StandardScaler { with_mean, with_std } => {
                standard_scaler_fit(&data.x, *with_mean, *with_std)
            }
            OperatorConfig::PowerTransform => power_transform_fit(&data.x),
            OperatorConfig::MinMaxScaler => minmax_fit(&data.x),
            OperatorConfig::RobustScaler {
                with_centering,
                with_scaling,
                quantile_range,
            } => robust_scaler_fit(&data.x, *with_centering, *with_scaling, *quantile_range),
            OperatorConfig::Pca { k } => pca_fit(&data.x, *k)?,
            OperatorConfig::SelectKBest { k } => select_k_best_fit(&data.x, &data.y, *k)?,
        };
        let x = functor.transform(&data.x)?;
        let feature_names = match &functor.params {
            FunctorParams::Select { indices } => indices.iter().map(|&i| data.feature_names[i].clone()).collect(),
            FunctorParams::Projection { components, .. } => (0..components.rows()).map(|i| format!("pc{i}")).collect(),
            _ => data.feature_names.clone(),
        };
        let out = Dataset {
            name: data.name.clone(),
            x,
            y: data.y.clone(),
            feature_names,
            class_names: data.class_names.clone(),
        };
        Ok((out, functor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> Dataset {
        let x = Matrix::from_rows(&[
            vec![1.0, 10.0, 0.3],
            vec![2.0, 11.0, 0.1],
            vec![1.5, 30.0, 0.2],
            vec![3.0, 32.0, 0.9],
            vec![2.5, 29.0, 0.4],
            vec![0.5, 12.0, 0.8],
        ])
        .unwrap();
        Dataset::from_parts(x, vec![0, 0, 1, 1, 1, 0]).unwrap()
    }

    fn all_configs() -> Vec<OperatorConfig> {
        vec![
            OperatorConfig::NearMiss { version: 1 },
            OperatorConfig::CondensedNearestNeighbour { n_neighbors: 1 },
            OperatorConfig::Smote { k_neighbors: 1 },
            OperatorConfig::StandardScaler {
                with_mean: true,
                with_std: true,
            },
            OperatorConfig::PowerTransform,
            OperatorConfig::MinMaxScaler,
            OperatorConfig::RobustScaler {
                with_centering: true,
                with_scaling: true,
                quantile_range: (10.0, 90.0),
            },
            OperatorConfig::Pca { k: 2 },
            OperatorConfig::SelectKBest { k: 2 },
        ]
    }

    #[test]
    fn train_only_operators_return_identity() {
        for op in all_configs() {
            let (_, f) = op.fit(&small(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            if op.is_train_only() {
                assert!(f.is_identity(), "{}", op.name());
            }
        }
    }

    #[test]
    fn row_wise_transform_equals_batch_transform() {
        let d = small();
        for op in all_configs().into_iter().filter(|o| !o.is_train_only()) {
            let (batch, f) = op.fit(&d, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            for r in 0..d.n_rows() {
                let one = Matrix::from_rows(&[d.x.row(r).to_vec()]).unwrap();
                let t = f.transform(&one).unwrap();
                for (a, b) in t.row(0).iter().zip(batch.x.row(r)) {
                    assert!((a - b).abs() <= 1e-12, "{}", op.name());
                }
            }
        }
    }

    #[test]
    fn fits_are_deterministic_given_seed() {
        let d = small();
        for op in all_configs() {
            let a = op.fit(&d, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            let b = op.fit(&d, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            assert_eq!(a, b, "{}", op.name());
        }
    }

    #[test]
    fn functor_rejects_wrong_width() {
        let d = small();
        let (_, f) = OperatorConfig::MinMaxScaler
            .fit(&d, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        let narrow = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(
            f.transform(&narrow),
            Err(OperatorError::ColumnMismatch { expected: 3, got: 1 })
        );
    }

    #[test]
    fn quantile_ranges_parse() {
        assert_eq!(parse_quantile_range("25-75").unwrap(), (25.0, 75.0));
        assert!(parse_quantile_range("75-25").is_err());
        assert!(parse_quantile_range("x").is_err());
    }
}
