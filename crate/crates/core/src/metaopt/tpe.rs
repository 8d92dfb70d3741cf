//! Tree-structured Parzen estimator over finite grids.
//!
//! Finite-loss trials are split at the `gamma` quantile into a good and a
//! bad set; `+inf` trials always join the bad set. Each dimension gets a
//! discrete density over its grid indices for both sets (`l` and `g`),
//! mixed with a uniform prior. Candidates are drawn dimension by dimension
//! from `l`, skipping inactive dimensions, and scored by
//! `sum(log l - log g)` over their active dimensions.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::configspace::{ConfigSpace, Configuration, Domain};

use super::History;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpeParams {
    /// Fraction of finite trials forming the good set, in `(0, 1)`.
    pub gamma: f64,
    pub n_candidates: usize,
    /// Uniform sampling until this many finite trials exist.
    pub min_finite: usize,
    /// Numeric bandwidth is `max(mean grid step, range * bandwidth_fraction)`.
    pub bandwidth_fraction: f64,
    /// Weight of the uniform prior, in units of observations.
    pub prior_weight: f64,
}

impl Default for TpeParams {
    fn default() -> Self {
        Self {
            gamma: 0.25,
            n_candidates: 24,
            min_finite: 8,
            bandwidth_fraction: 0.05,
            prior_weight: 1.0,
        }
    }
}

/// A probability mass function over a dimension's grid indices.
#[derive(Clone, Debug, PartialEq)]
pub struct DimDensity {
    probs: Vec<f64>,
}

/// Kernel coordinates of a numeric grid: log10 for positive grids spanning
/// at least two decades, raw values otherwise.
fn coordinates(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = (values[0], values[values.len() - 1]);
    if lo > 0.0 && hi / lo >= 100.0 {
        values.iter().map(|v| v.log10()).collect()
    } else {
        values.to_vec()
    }
}

impl DimDensity {
    pub fn fit(domain: &Domain, observations: &[usize], params: &TpeParams) -> Self {
        let m = domain.len();
        let mut mass = vec![params.prior_weight / m as f64; m];
        let numeric = match domain {
            Domain::IntGrid { .. } | Domain::RealGrid { .. } if m > 1 => domain.numeric_values(),
            _ => None,
        };
        match numeric {
            Some(values) => {
                let x = coordinates(&values);
                let range = x[m - 1] - x[0];
                let bw = (range / (m - 1) as f64).max(range * params.bandwidth_fraction);
                for &o in observations {
                    let k: Vec<f64> = x.iter().map(|v| (-0.5 * ((v - x[o]) / bw).powi(2)).exp()).collect();
                    let s: f64 = k.iter().sum();
                    for (mv, kv) in mass.iter_mut().zip(k) {
                        *mv += kv / s;
                    }
                }
            }
            None => {
                for &o in observations {
                    mass[o] += 1.0;
                }
            }
        }
        let total: f64 = mass.iter().sum();
        Self {
            probs: mass.into_iter().map(|v| v / total).collect(),
        }
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

fn densities<'a>(
    space: &ConfigSpace,
    configs: impl Iterator<Item = &'a Configuration> + Clone,
    params: &TpeParams,
) -> Vec<DimDensity> {
    space
        .dims()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let obs: Vec<usize> = configs.clone().filter_map(|c| c.0[i]).collect();
            DimDensity::fit(&d.domain, &obs, params)
        })
        .collect()
}

pub(super) fn suggest<R: Rng + ?Sized>(
    params: &TpeParams,
    space: &ConfigSpace,
    history: &History,
    rng: &mut R,
) -> Configuration {
    let mut finite: Vec<&super::Trial> = history.trials().iter().filter(|t| t.loss.is_finite()).collect();
    if finite.len() < params.min_finite.max(1) {
        return space.sample(rng);
    }
    // Stable sort: equal losses keep evaluation order.
    finite.sort_by(|a, b| a.loss.total_cmp(&b.loss));
    let n_good = ((params.gamma * finite.len() as f64).ceil() as usize).clamp(1, finite.len());
    let good = finite[..n_good].iter().map(|t| &t.config);
    let bad = finite[n_good..].iter().map(|t| &t.config).chain(
        history
            .trials()
            .iter()
            .filter(|t| !t.loss.is_finite())
            .map(|t| &t.config),
    );
    let l = densities(space, good, params);
    let g = densities(space, bad, params);
    let seen: HashSet<&Configuration> = history.trials().iter().map(|t| &t.config).collect();

    let mut best_new: Option<(f64, Configuration)> = None;
    let mut best_any: Option<(f64, Configuration)> = None;
    for _ in 0..params.n_candidates.max(1) {
        let mut slots = vec![None; space.num_dims()];
        let mut score = 0.0;
        for i in 0..space.num_dims() {
            if space.active_given(i, &slots) {
                let v = l[i].sample(rng);
                score += l[i].prob(v).ln() - g[i].prob(v).ln();
                slots[i] = Some(v);
            }
        }
        let c = Configuration(slots);
        let better = |cur: &Option<(f64, Configuration)>| cur.as_ref().is_none_or(|(s, _)| score > *s);
        if !seen.contains(&c) && better(&best_new) {
            best_new = Some((score, c.clone()));
        }
        if better(&best_any) {
            best_any = Some((score, c));
        }
    }
    best_new.or(best_any).expect("at least one candidate").1
}
