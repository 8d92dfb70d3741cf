//! Train-only rebalancing operators: SMOTE, NearMiss and Hart's condensed
//! nearest neighbour. Each returns a resampled training set; their functor
//! on unseen data is the identity.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::{squared_distance, Dataset, Matrix};

use super::OperatorError;

fn present_classes(counts: &[usize]) -> Vec<usize> {
    (0..counts.len()).filter(|&c| counts[c] > 0).collect()
}

fn rows_of(y: &[usize], class: usize) -> Vec<usize> {
    (0..y.len()).filter(|&i| y[i] == class).collect()
}

/// Indices of the `k` rows of `pool` nearest to `point` (ties by position).
fn nearest(x: &Matrix, point: &[f64], pool: &[usize], k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = pool.iter().map(|&i| (squared_distance(x.row(i), point), i)).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Oversamples every non-majority class up to the majority count by convex
/// interpolation towards one of the `k_neighbors` nearest same-class points.
pub fn smote_fit<R: Rng + ?Sized>(data: &Dataset, k_neighbors: usize, rng: &mut R) -> Result<Dataset, OperatorError> {
    let counts = data.class_counts();
    let classes = present_classes(&counts);
    if classes.len() < 2 {
        return Err(OperatorError::TooFewClasses(classes.len()));
    }
    let target = counts.iter().copied().max().unwrap_or(0);
    let mut out = data.clone();
    for &c in &classes {
        let need = target - counts[c];
        if need == 0 {
            continue;
        }
        if counts[c] < 2 {
            return Err(OperatorError::Incompatible(format!(
                "smote needs at least 2 samples of class {c}, found {}",
                counts[c]
            )));
        }
        let members = rows_of(&data.y, c);
        let k = k_neighbors.min(members.len() - 1);
        let neighbours: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let others: Vec<usize> = members.iter().copied().filter(|&j| j != i).collect();
                nearest(&data.x, data.x.row(i), &others, k)
            })
            .collect();
        for _ in 0..need {
            let m = rng.gen_range(0..members.len());
            let base = data.x.row(members[m]);
            let nb = data.x.row(*neighbours[m].choose(rng).expect("k >= 1"));
            let u: f64 = rng.gen();
            let synthetic: Vec<f64> = base.iter().zip(nb).map(|(a, b)| a + u * (b - a)).collect();
            out.x.push_row(&synthetic);
            out.y.push(c);
        }
    }
    Ok(out)
}

const NEARMISS_NEIGHBORS: usize = 3;
const NEARMISS3_SHORTLIST: usize = 3;

/// Undersamples every class above the minority count, keeping the points
/// closest to the minority class according to the NearMiss `version` rule.
pub fn nearmiss_fit(data: &Dataset, version: u8) -> Result<Dataset, OperatorError> {
    if !(1..=3).contains(&version) {
        return Err(OperatorError::Incompatible(format!("nearmiss version {version}")));
    }
    let counts = data.class_counts();
    let classes = present_classes(&counts);
    if classes.len() < 2 {
        return Err(OperatorError::TooFewClasses(classes.len()));
    }
    let minority = *classes.iter().min_by_key(|&&c| (counts[c], c)).expect("two classes");
    let target = counts[minority];
    let minority_rows = rows_of(&data.y, minority);
    let k = NEARMISS_NEIGHBORS.min(minority_rows.len());
    let mut keep: Vec<usize> = Vec::with_capacity(target * classes.len());
    for &c in &classes {
        let members = rows_of(&data.y, c);
        if members.len() <= target {
            keep.extend(&members);
            continue;
        }
        // Mean distance to the k nearest (v1, v3) or farthest (v2) minority points.
        let score = |i: usize| -> f64 {
            let mut d: Vec<f64> = minority_rows
                .iter()
                .map(|&j| squared_distance(data.x.row(i), data.x.row(j)).sqrt())
                .collect();
            d.sort_by(f64::total_cmp);
            let picked: &[f64] = if version == 2 { &d[d.len() - k..] } else { &d[..k] };
            picked.iter().sum::<f64>() / k as f64
        };
        let scored: Vec<(f64, usize)> = members.iter().map(|&i| (score(i), i)).collect();
        let chosen: Vec<usize> = if version == 3 {
            let mut short: Vec<usize> = minority_rows
                .iter()
                .flat_map(|&j| nearest(&data.x, data.x.row(j), &members, NEARMISS3_SHORTLIST))
                .collect();
            short.sort_unstable();
            short.dedup();
            let by_desc = |v: &mut Vec<(f64, usize)>| {
                v.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            };
            let (mut inside, mut outside): (Vec<_>, Vec<_>) = scored
                .iter()
                .copied()
                .partition(|(_, i)| short.binary_search(i).is_ok());
            by_desc(&mut inside);
            by_desc(&mut outside);
            inside.into_iter().chain(outside).take(target).map(|(_, i)| i).collect()
        } else {
            let mut s = scored;
            s.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            s.into_iter().take(target).map(|(_, i)| i).collect()
        };
        keep.extend(chosen);
    }
    keep.sort_unstable();
    Ok(data.subset(&keep))
}

/// Majority vote of the `k` nearest kept points; vote ties go to the class
/// of the nearest tied neighbour.
pub fn knn_vote(x: &Matrix, y: &[usize], pool: &[usize], point: &[f64], k: usize) -> usize {
    let nb = nearest(x, point, pool, k.min(pool.len()));
    let mut votes: Vec<(usize, usize)> = Vec::new();
    for &i in &nb {
        match votes.iter_mut().find(|(c, _)| *c == y[i]) {
            Some(v) => v.1 += 1,
            None => votes.push((y[i], 1)),
        }
    }
    let best = votes.iter().map(|v| v.1).max().unwrap_or(0);
    // `votes` is in order of first appearance, i.e. by distance.
    votes
        .into_iter()
        .find(|v| v.1 == best)
        .map(|v| v.0)
        .expect("non-empty pool")
}

/// Hart's condensation: start from one random point per class and keep
/// adding points the current store misclassifies until a full pass adds
/// nothing. Returns the kept subset in original row order.
pub fn cnn_fit<R: Rng + ?Sized>(data: &Dataset, n_neighbors: usize, rng: &mut R) -> Result<Dataset, OperatorError> {
    let counts = data.class_counts();
    let classes = present_classes(&counts);
    if classes.len() < 2 {
        return Err(OperatorError::TooFewClasses(classes.len()));
    }
    let kept = cnn_indices(data, n_neighbors, rng);
    Ok(data.subset(&kept))
}

pub(crate) fn cnn_indices<R: Rng + ?Sized>(data: &Dataset, n_neighbors: usize, rng: &mut R) -> Vec<usize> {
    let n = data.n_rows();
    let mut in_store = vec![false; n];
    let mut store = Vec::new();
    for c in present_classes(&data.class_counts()) {
        let members = rows_of(&data.y, c);
        let seed = *members.choose(rng).expect("class present");
        in_store[seed] = true;
        store.push(seed);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    loop {
        let mut added = false;
        for &i in &order {
            if in_store[i] {
                continue;
            }
            if knn_vote(&data.x, &data.y, &store, data.x.row(i), n_neighbors) != data.y[i] {
                in_store[i] = true;
                store.push(i);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    store.sort_unstable();
    store
}
