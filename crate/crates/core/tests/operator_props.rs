mod common;

use dpsh::data::{Dataset, Matrix};
use dpsh::operators::{
    minmax_fit, nearmiss_fit, pca_fit, select_k_best_fit, smote_fit, standard_scaler_fit, FunctorParams,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::top_k_oracle;

fn matrix(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> impl Strategy<Value = Matrix> {
    (rows, cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-1e3f64..1e3, r * c).prop_map(move |v| Matrix::from_vec(r, c, v).unwrap())
    })
}

/// Labels with every class present at least twice, in class-count order.
fn labels(n_classes: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..15, n_classes).prop_map(|counts| {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| std::iter::repeat_n(c, k))
            .collect()
    })
}

fn labelled(n_classes: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> impl Strategy<Value = Dataset> {
    (n_classes.prop_flat_map(labels), cols).prop_flat_map(|(y, c)| {
        let n = y.len();
        prop::collection::vec(-10f64..10.0, n * c)
            .prop_map(move |v| Dataset::from_parts(Matrix::from_vec(n, c, v).unwrap(), y.clone()).unwrap())
    })
}

fn column_spread(x: &Matrix) -> f64 {
    (0..x.cols())
        .map(|c| {
            let col = x.column(c);
            col.iter().copied().fold(f64::NEG_INFINITY, f64::max) - col.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #[test]
    fn standard_scaler_standardizes(x in matrix(2..40, 1..6)) {
        prop_assume!(column_spread(&x) > 1e-3);
        let out = standard_scaler_fit(&x, true, true).transform(&x).unwrap();
        for m in out.column_means() {
            prop_assert!(m.abs() <= 1e-9, "mean {}", m);
        }
        for s in out.column_stds() {
            prop_assert!((s - 1.0).abs() <= 1e-9, "std {}", s);
        }
    }

    #[test]
    fn minmax_maps_into_unit_interval(x in matrix(2..40, 1..6)) {
        prop_assume!(column_spread(&x) > 1e-3);
        let out = minmax_fit(&x).transform(&x).unwrap();
        for c in 0..out.cols() {
            let col = out.column(c);
            prop_assert!(col.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        }
    }

    #[test]
    fn pca_components_are_orthonormal(x in matrix(3..40, 1..7), frac in 0.0f64..1.0) {
        let d = x.cols().min(x.rows() - 1);
        let k = 1 + ((d - 1) as f64 * frac) as usize;
        let f = pca_fit(&x, k).unwrap();
        let FunctorParams::Projection { components, explained_variance, .. } = &f.params else {
            panic!("pca yields a projection");
        };
        prop_assert_eq!(components.rows(), k);
        for i in 0..k {
            for j in 0..k {
                let dot: f64 = components.row(i).iter().zip(components.row(j)).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() <= 1e-8, "gram[{}][{}] = {}", i, j, dot);
            }
        }
        prop_assert!(explained_variance.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(f.transform(&x).unwrap().cols(), k);
    }

    #[test]
    fn pca_rejects_k_above_rank_bound(x in matrix(3..20, 1..5)) {
        prop_assert!(pca_fit(&x, x.cols() + 1).is_err());
    }

    #[test]
    fn smote_balances_inside_minority_boxes(data in labelled(2..4, 1..4), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = smote_fit(&data, 3, &mut rng).unwrap();
        let counts = out.class_counts();
        let target = *data.class_counts().iter().max().unwrap();
        prop_assert!(counts.iter().all(|&c| c == target));
        prop_assert_eq!(out.x.select_rows(&(0..data.n_rows()).collect::<Vec<_>>()), data.x.clone());
        for r in data.n_rows()..out.n_rows() {
            let c = out.y[r];
            for f in 0..data.n_features() {
                let members: Vec<f64> = (0..data.n_rows()).filter(|&i| data.y[i] == c).map(|i| data.x.get(i, f)).collect();
                let lo = members.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = members.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let v = out.x.get(r, f);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn nearmiss_balances_to_minority(data in labelled(2..4, 1..4), version in 1u8..=3) {
        let out = nearmiss_fit(&data, version).unwrap();
        let target = *data.class_counts().iter().min().unwrap();
        prop_assert!(out.class_counts().iter().all(|&c| c == target));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn select_k_best_matches_brute_force(data in labelled(2..5, 1..8), frac in 0.0f64..1.0) {
        let d = data.n_features();
        let k = 1 + ((d - 1) as f64 * frac).round() as usize;
        let cols: Vec<Vec<f64>> = (0..d).map(|c| data.x.column(c)).collect();
        let f = select_k_best_fit(&data.x, &data.y, k).unwrap();
        let FunctorParams::Select { indices } = &f.params else {
            panic!("select_k_best yields a selection");
        };
        prop_assert_eq!(indices, &top_k_oracle(&cols, &data.y, k));
    }
}
