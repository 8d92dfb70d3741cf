use std::collections::BTreeMap;

use crate::configspace::{ConfigSpace, ParamDomain, SpaceError};
use crate::pipeline::{DataKind, OperatorSignature};

/// Fractions of the feature count used for the PCA and SelectKBest `k` grids.
pub const FEATURE_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Operator signatures addressable by name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Catalog {
    entries: BTreeMap<String, OperatorSignature>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, signature: OperatorSignature) {
        self.entries.insert(signature.name.clone(), signature);
    }

    pub fn get(&self, name: &str) -> Option<&OperatorSignature> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Size of the operator's own configuration space, counting a
    /// parameterless operator as 0.
    pub fn grid_size(&self, name: &str) -> Option<u128> {
        self.get(name).map(|s| {
            if s.config_space.num_dims() == 0 {
                0
            } else {
                s.config_space.cardinality()
            }
        })
    }

    /// Replaces an operator's parameter space, keeping its types.
    pub fn override_space(&mut self, name: &str, space: ConfigSpace) -> Result<(), SpaceError> {
        let entry = self
            .entries
            .get_mut(name)
            .ok_or_else(|| SpaceError::UnknownDim(name.to_string()))?;
        entry.config_space = space;
        Ok(())
    }
}

fn numeric(name: &str, train_only: bool, dims: Vec<ParamDomain>) -> OperatorSignature {
    OperatorSignature {
        name: name.to_string(),
        input: DataKind::NumericMatrix,
        output: DataKind::NumericMatrix,
        config_space: ConfigSpace::product(name, dims).expect("static grid is valid"),
        train_only,
    }
}

/// `ceil(f * n)` for each fraction, deduplicated.
pub fn feature_k_grid(n_features: usize) -> Vec<i64> {
    let mut ks: Vec<i64> = FEATURE_FRACTIONS
        .iter()
        .map(|f| ((f * n_features as f64).ceil() as i64).max(1))
        .collect();
    ks.dedup();
    ks
}

/// The rebalance / normalize / features operators of the reference search
/// space, with `k` grids sized for `n_features` input columns.
pub fn standard_catalog(n_features: usize) -> Catalog {
    let ks = feature_k_grid(n_features);
    let mut c = Catalog::new();
    c.insert(numeric(
        "near_miss",
        true,
        vec![ParamDomain::int_grid("version", [1, 2, 3])],
    ));
    c.insert(numeric(
        "condensed_nearest_neighbour",
        true,
        vec![ParamDomain::int_grid("n_neighbors", [1, 3, 5])],
    ));
    c.insert(numeric(
        "smote",
        true,
        vec![ParamDomain::int_grid("k_neighbors", [1, 3, 5])],
    ));
    c.insert(numeric(
        "standard_scaler",
        false,
        vec![ParamDomain::boolean("with_mean"), ParamDomain::boolean("with_std")],
    ));
    c.insert(numeric("power_transform", false, vec![]));
    c.insert(numeric("minmax_scaler", false, vec![]));
    c.insert(numeric(
        "robust_scaler",
        false,
        vec![
            ParamDomain::boolean("with_centering"),
            ParamDomain::boolean("with_scaling"),
            ParamDomain::categorical("quantile_range", ["25-75", "10-90", "5-95"]),
        ],
    ));
    c.insert(numeric("pca", false, vec![ParamDomain::int_grid("k", ks.clone())]));
    c.insert(numeric("select_k_best", false, vec![ParamDomain::int_grid("k", ks)]));
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes_match_reference_table() {
        let c = standard_catalog(13);
        let sizes: Vec<u128> = [
            "near_miss",
            "condensed_nearest_neighbour",
            "smote",
            "standard_scaler",
            "power_transform",
            "minmax_scaler",
            "robust_scaler",
            "pca",
            "select_k_best",
        ]
        .iter()
        .map(|n| c.grid_size(n).unwrap())
        .collect();
        assert_eq!(sizes, vec![3, 3, 3, 4, 0, 0, 12, 4, 4]);
        // PCA ∪ SelectKBest pairs every PCA setting with every SelectKBest one.
        assert_eq!(c.grid_size("pca").unwrap() * c.grid_size("select_k_best").unwrap(), 16);
    }

    #[test]
    fn k_grids_for_reference_datasets() {
        assert_eq!(feature_k_grid(4), vec![1, 2, 3, 4]);
        assert_eq!(feature_k_grid(13), vec![4, 7, 10, 13]);
        assert_eq!(feature_k_grid(30), vec![8, 15, 23, 30]);
        assert_eq!(feature_k_grid(2), vec![1, 2]);
    }
}
