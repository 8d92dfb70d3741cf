//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use dpsh::configspace::{ConfigSpace, Configuration, ParamDomain};
use dpsh::metaopt::{History, Optimizer, Phase, Trial};

/// One-way ANOVA F statistic written from the textbook definition.
pub fn f_score_oracle(col: &[f64], y: &[usize]) -> f64 {
    let classes: Vec<usize> = {
        let mut c = y.to_vec();
        c.sort_unstable();
        c.dedup();
        c
    };
    let n = col.len() as f64;
    let g = classes.len() as f64;
    let grand = col.iter().sum::<f64>() / n;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for &c in &classes {
        let members: Vec<f64> = col.iter().zip(y).filter(|(_, &l)| l == c).map(|(v, _)| *v).collect();
        let m = members.iter().sum::<f64>() / members.len() as f64;
        ssb += members.len() as f64 * (m - grand).powi(2);
        ssw += members.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    (ssb / (g - 1.0)) / (ssw / (n - g))
}

/// Column indices of the `k` largest F scores, ascending.
pub fn top_k_oracle(cols: &[Vec<f64>], y: &[usize], k: usize) -> Vec<usize> {
    let scores: Vec<f64> = cols.iter().map(|c| f_score_oracle(c, y)).collect();
    let mut chosen = Vec::new();
    let mut left: Vec<usize> = (0..cols.len()).collect();
    for _ in 0..k {
        let mut best = 0;
        for (pos, &i) in left.iter().enumerate() {
            if scores[i] > scores[left[best]] {
                best = pos;
            }
        }
        chosen.push(left.remove(best));
    }
    chosen.sort_unstable();
    chosen
}

/// NMAD from raw coordinates: `points[alg]` lists optimal points, `bounds`
/// gives each dimension's `(min, max)`.
pub fn nmad_oracle(points: &[Vec<Vec<f64>>], r: &[f64], bounds: &[(f64, f64)]) -> f64 {
    let norm = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .zip(bounds)
            .map(|(x, (lo, hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
            .collect()
    };
    let rn = norm(r);
    let mut total = 0.0;
    for alg in points {
        let mut best = f64::INFINITY;
        for p in alg {
            let d: f64 = norm(p).iter().zip(&rn).map(|(a, b)| (a - b).abs()).sum();
            best = best.min(d);
        }
        total += best;
    }
    total / (bounds.len() as f64 * points.len() as f64)
}

/// Straight-line replay of the adaptive rules: an improving slice doubles
/// the next slice of its phase, two non-improving slices in a row halve it,
/// and the multiplier stays within `[2^lo, 2^hi]`. Returns the length used
/// for every slice of one phase.
pub fn adaptive_oracle(t0: f64, lo: i32, hi: i32, improved: &[bool]) -> Vec<f64> {
    let mut lengths = vec![t0];
    let mut factor = 1.0f64;
    let mut misses = 0;
    for &imp in improved {
        if imp {
            misses = 0;
            if factor * 2.0 <= 2f64.powi(hi) {
                factor *= 2.0;
            }
        } else {
            misses += 1;
            if misses == 2 {
                misses = 0;
                if factor / 2.0 >= 2f64.powi(lo) {
                    factor /= 2.0;
                }
            }
        }
        lengths.push(t0 * factor);
    }
    lengths
}

/// An 8x8 integer grid.
pub fn grid_8x8() -> ConfigSpace {
    ConfigSpace::product(
        "grid",
        vec![ParamDomain::int_grid("a", 0..8), ParamDomain::int_grid("b", 0..8)],
    )
    .unwrap()
}

/// Zero only at `(5, 2)`; grows with L1 distance from it.
pub fn planted_loss(c: &Configuration) -> f64 {
    let a = c.0[0].unwrap() as f64;
    let b = c.0[1].unwrap() as f64;
    ((a - 5.0).abs() + (b - 2.0).abs()) / 14.0
}

/// Suggestions needed until `f` first returns zero, capped at `cap`.
pub fn evals_to_optimum(opt: &Optimizer, space: &ConfigSpace, f: impl Fn(&Configuration) -> f64, cap: usize) -> usize {
    let mut h = History::new();
    for i in 0..cap {
        let c = opt.suggest(space, &h);
        let loss = f(&c);
        if loss == 0.0 {
            return i + 1;
        }
        h.observe(Trial {
            eval_index: i,
            phase: Phase::Pipeline,
            clock: i as f64,
            config: c,
            loss,
        });
    }
    cap
}

pub fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Pipeline and algorithm spaces for synthetic two-stage runs.
pub fn synthetic_spaces() -> (ConfigSpace, ConfigSpace) {
    let p = ConfigSpace::product(
        "pipe",
        vec![
            ParamDomain::categorical("scaler", ["none", "a", "b", "c"]),
            ParamDomain::int_grid("k", 1..=6),
        ],
    )
    .unwrap();
    let a = ConfigSpace::product(
        "algo",
        vec![
            ParamDomain::real_grid("c", [0.01, 0.1, 1.0, 10.0, 100.0]),
            ParamDomain::int_grid("depth", 1..=8),
        ],
    )
    .unwrap();
    (p, a)
}

/// Separable loss with its minimum at scaler `b`, k 4, c 1.0, depth 6.
pub fn synthetic_loss(p: &Configuration, a: &Configuration) -> f64 {
    let s = [0.3, 0.2, 0.0, 0.25][p.0[0].unwrap()];
    let k = (p.0[1].unwrap() as f64 - 3.0).abs() * 0.03;
    let c = (a.0[0].unwrap() as f64 - 2.0).abs() * 0.05;
    let d = (a.0[1].unwrap() as f64 - 5.0).abs() * 0.02;
    0.05 + s + k + c + d
}
