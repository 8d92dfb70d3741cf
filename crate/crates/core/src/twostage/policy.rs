use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("unknown policy `{0}`; expected split:<w>, iterative:<t>, adaptive:<t0> or joint")]
    Unknown(String),
    #[error("split weight must lie in [0, 1], got {0}")]
    Omega(f64),
    #[error("slice must be positive, got {0}")]
    Slice(f64),
}

/// Budget allocation between the pipeline and the algorithm phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Policy {
    /// `(1 - omega) T` on the pipeline phase, then `omega T` on the
    /// algorithm phase.
    Split { omega: f64 },
    /// Alternating slices of fixed length, pipeline first.
    Iterative { slice: f64 },
    /// Alternating slices whose lengths adapt per phase.
    Adaptive { initial_slice: f64 },
    /// One optimizer over the product space.
    Joint,
}

impl Policy {
    pub fn validate(self) -> Result<Self, PolicyError> {
        match self {
            Policy::Split { omega } if !(0.0..=1.0).contains(&omega) => Err(PolicyError::Omega(omega)),
            Policy::Iterative { slice: t } | Policy::Adaptive { initial_slice: t } if !(t > 0.0 && t.is_finite()) => {
                Err(PolicyError::Slice(t))
            }
            p => Ok(p),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Split { omega } => write!(f, "split:{omega}"),
            Policy::Iterative { slice } => write!(f, "iterative:{slice}"),
            Policy::Adaptive { initial_slice } => write!(f, "adaptive:{initial_slice}"),
            Policy::Joint => f.write_str("joint"),
        }
    }
}

impl FromStr for Policy {
    type Err = PolicyError;
    fn from_str(s: &str) -> Result<Self, PolicyError> {
        let unknown = || PolicyError::Unknown(s.to_string());
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a.parse::<f64>().map_err(|_| unknown())?)),
            None => (s, None),
        };
        let p = match (kind, arg) {
            ("split", Some(omega)) => Policy::Split { omega },
            ("iterative", Some(slice)) => Policy::Iterative { slice },
            ("adaptive", Some(initial_slice)) => Policy::Adaptive { initial_slice },
            ("joint", None) => Policy::Joint,
            _ => return Err(unknown()),
        };
        p.validate()
    }
}

impl TryFrom<String> for Policy {
    type Error = PolicyError;
    fn try_from(s: String) -> Result<Self, PolicyError> {
        s.parse()
    }
}

impl From<Policy> for String {
    fn from(p: Policy) -> String {
        p.to_string()
    }
}

/// `(T1, T2) = ((1 - omega) T, omega T)`.
pub fn split_schedule(omega: f64, total: f64) -> (f64, f64) {
    ((1.0 - omega) * total, omega * total)
}

/// Per-phase adaptive state: the slice is `t0 * 2^exponent`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AdaptiveState {
    pub exponent: i32,
    /// Consecutive slices without improvement.
    pub misses: u8,
}

/// Improvement doubles the next slice and clears the miss counter; the
/// second consecutive miss halves it. The exponent stays in `[lo, hi]`.
pub fn adaptive_update(state: AdaptiveState, improved: bool, lo: i32, hi: i32) -> AdaptiveState {
    if improved {
        AdaptiveState {
            exponent: (state.exponent + 1).min(hi),
            misses: 0,
        }
    } else if state.misses + 1 >= 2 {
        AdaptiveState {
            exponent: (state.exponent - 1).max(lo),
            misses: 0,
        }
    } else {
        AdaptiveState {
            exponent: state.exponent,
            misses: state.misses + 1,
        }
    }
}

pub fn slice_length(t0: f64, exponent: i32) -> f64 {
    t0 * 2f64.powi(exponent)
}

/// Exponent bounds keeping the slice within `[t0 / 8, T]`.
pub fn adaptive_bounds(t0: f64, total: f64) -> (i32, i32) {
    let hi = if total > t0 {
        (total / t0).log2().floor() as i32
    } else {
        0
    };
    (-3, hi.max(0))
}
