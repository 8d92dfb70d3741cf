//! Finite, optionally conditional configuration spaces.
//!
//! A [`ConfigSpace`] is an ordered list of finite parameter domains plus
//! single-parent activation guards. A [`Configuration`] stores, for every
//! dimension, the index of the chosen grid value (or `None` when the
//! dimension is inactive), so configurations are cheap to hash and compare.
//!
//! Conditions always point backwards (the parent precedes the child), which
//! turns the condition graph into a forest. Counting, enumeration and uniform
//! sampling all exploit that structure.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("dimension `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("dimension `{0}` has a grid that is not strictly increasing")]
    UnsortedGrid(String),
    #[error("dimension `{0}` has duplicate categorical values")]
    DuplicateCategory(String),
    #[error("duplicate dimension name `{0}`")]
    DuplicateDim(String),
    #[error("unknown dimension `{0}`")]
    UnknownDim(String),
    #[error("condition on `{child}` references `{parent}`, which does not precede it")]
    ForwardCondition { child: String, parent: String },
    #[error("dimension `{0}` has more than one activation condition")]
    MultipleConditions(String),
    #[error("value {value} is not in the domain of `{dim}`")]
    NotInDomain { dim: String, value: String },
    #[error("dimension `{0}` is active but has no value")]
    MissingValue(String),
    #[error("dimension `{0}` is inactive but carries a value")]
    InactiveValue(String),
    #[error("configuration has {got} slots, space `{space}` has {expected} dimensions")]
    Arity { space: String, expected: usize, got: usize },
    #[error("dimension `{0}` is not numeric and cannot be normalized")]
    NotNormalizable(String),
    #[error("dimension `{dim}` holds a {found}, expected {expected}")]
    WrongType {
        dim: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("dimension name `{0}` appears in both spaces of a union")]
    NameClash(String),
}

/// A single parameter value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Cat(String),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Real(_) => "real",
            Value::Cat(_) => "categorical",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Cat(s) => write!(f, "{s}"),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Cat(s.to_string())
    }
}
impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}
impl From<f64> for Value {
    fn from(r: f64) -> Self {
        Value::Real(r)
    }
}
impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Categorical { values: Vec<String> },
    IntGrid { values: Vec<i64> },
    RealGrid { values: Vec<f64> },
    Boolean,
}

impl Domain {
    pub fn len(&self) -> usize {
        match self {
            Domain::Categorical { values } => values.len(),
            Domain::IntGrid { values } => values.len(),
            Domain::RealGrid { values } => values.len(),
            Domain::Boolean => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, index: usize) -> Value {
        match self {
            Domain::Categorical { values } => Value::Cat(values[index].clone()),
            Domain::IntGrid { values } => Value::Int(values[index]),
            Domain::RealGrid { values } => Value::Real(values[index]),
            Domain::Boolean => Value::Bool(index == 1),
        }
    }

    pub fn index_of(&self, value: &Value) -> Option<usize> {
        match (self, value) {
            (Domain::Categorical { values }, Value::Cat(s)) => values.iter().position(|v| v == s),
            (Domain::IntGrid { values }, Value::Int(i)) => values.iter().position(|v| v == i),
            // Integral reals are accepted for integer grids (JSON round trips).
            (Domain::IntGrid { values }, Value::Real(r)) if r.fract() == 0.0 => {
                values.iter().position(|v| *v as f64 == *r)
            }
            (Domain::RealGrid { values }, Value::Real(r)) => values.iter().position(|v| v == r),
            (Domain::RealGrid { values }, Value::Int(i)) => values.iter().position(|v| *v == *i as f64),
            (Domain::Boolean, Value::Bool(b)) => Some(usize::from(*b)),
            _ => None,
        }
    }

    /// Numeric grid values as reals; `None` for symbolic domains.
    pub fn numeric_values(&self) -> Option<Vec<f64>> {
        match self {
            Domain::IntGrid { values } => Some(values.iter().map(|&v| v as f64).collect()),
            Domain::RealGrid { values } => Some(values.clone()),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    pub name: String,
    #[serde(flatten)]
    pub domain: Domain,
}

impl ParamDomain {
    pub fn categorical<S: Into<String>>(name: &str, values: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.to_string(),
            domain: Domain::Categorical {
                values: values.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn int_grid(name: &str, values: impl IntoIterator<Item = i64>) -> Self {
        Self {
            name: name.to_string(),
            domain: Domain::IntGrid {
                values: values.into_iter().collect(),
            },
        }
    }

    pub fn real_grid(name: &str, values: impl IntoIterator<Item = f64>) -> Self {
        Self {
            name: name.to_string(),
            domain: Domain::RealGrid {
                values: values.into_iter().collect(),
            },
        }
    }

    pub fn boolean(name: &str) -> Self {
        Self {
            name: name.to_string(),
            domain: Domain::Boolean,
        }
    }

    fn validate(&self) -> Result<(), SpaceError> {
        if self.domain.is_empty() {
            return Err(SpaceError::EmptyDomain(self.name.clone()));
        }
        match &self.domain {
            Domain::IntGrid { values } if values.windows(2).any(|w| w[0] >= w[1]) => {
                Err(SpaceError::UnsortedGrid(self.name.clone()))
            }
            Domain::RealGrid { values }
                if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] >= w[1]) =>
            {
                Err(SpaceError::UnsortedGrid(self.name.clone()))
            }
            Domain::Categorical { values } => {
                let mut seen = std::collections::HashSet::new();
                if values.iter().all(|v| seen.insert(v)) {
                    Ok(())
                } else {
                    Err(SpaceError::DuplicateCategory(self.name.clone()))
                }
            }
            _ => Ok(()),
        }
    }
}

/// `child` is active iff `parent` is active and holds one of `any_of`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub child: String,
    pub parent: String,
    pub any_of: Vec<Value>,
}

impl Condition {
    pub fn new(child: &str, parent: &str, any_of: impl IntoIterator<Item = Value>) -> Self {
        Self {
            child: child.to_string(),
            parent: parent.to_string(),
            any_of: any_of.into_iter().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Guard {
    parent: usize,
    allowed: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct SpaceDoc {
    name: String,
    dims: Vec<ParamDomain>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    conditions: Vec<Condition>,
}

/// An ordered collection of finite parameter domains with activation guards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDoc", into = "SpaceDoc")]
pub struct ConfigSpace {
    name: String,
    dims: Vec<ParamDomain>,
    conditions: Vec<Condition>,
    guards: Vec<Option<Guard>>,
    children: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl TryFrom<SpaceDoc> for ConfigSpace {
    type Error = SpaceError;
    fn try_from(doc: SpaceDoc) -> Result<Self, SpaceError> {
        ConfigSpace::new(&doc.name, doc.dims, doc.conditions)
    }
}

impl From<ConfigSpace> for SpaceDoc {
    fn from(space: ConfigSpace) -> Self {
        SpaceDoc {
            name: space.name,
            dims: space.dims,
            conditions: space.conditions,
        }
    }
}

impl ConfigSpace {
    pub fn new(name: &str, dims: Vec<ParamDomain>, conditions: Vec<Condition>) -> Result<Self, SpaceError> {
        let mut index = HashMap::with_capacity(dims.len());
        for (i, d) in dims.iter().enumerate() {
            d.validate()?;
            if index.insert(d.name.clone(), i).is_some() {
                return Err(SpaceError::DuplicateDim(d.name.clone()));
            }
        }
        let mut guards: Vec<Option<Guard>> = vec![None; dims.len()];
        let mut children = vec![Vec::new(); dims.len()];
        for c in &conditions {
            let child = *index
                .get(&c.child)
                .ok_or_else(|| SpaceError::UnknownDim(c.child.clone()))?;
            let parent = *index
                .get(&c.parent)
                .ok_or_else(|| SpaceError::UnknownDim(c.parent.clone()))?;
            if parent >= child {
                return Err(SpaceError::ForwardCondition {
                    child: c.child.clone(),
                    parent: c.parent.clone(),
                });
            }
            if guards[child].is_some() {
                return Err(SpaceError::MultipleConditions(c.child.clone()));
            }
            let pdom = &dims[parent].domain;
            let mut allowed = vec![false; pdom.len()];
            for v in &c.any_of {
                let idx = pdom.index_of(v).ok_or_else(|| SpaceError::NotInDomain {
                    dim: c.parent.clone(),
                    value: v.to_string(),
                })?;
                allowed[idx] = true;
            }
            guards[child] = Some(Guard { parent, allowed });
            children[parent].push(child);
        }
        Ok(Self {
            name: name.to_string(),
            dims,
            conditions,
            guards,
            children,
            index,
        })
    }

    /// Unconditional space built from plain domains.
    pub fn product(name: &str, dims: Vec<ParamDomain>) -> Result<Self, SpaceError> {
        Self::new(name, dims, Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> &[ParamDomain] {
        &self.dims
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn num_dims(&self) -> usize {
        self.dims.len()
    }

    pub fn dim_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Whether dim `i` is active given the (already fixed) earlier slots.
    pub fn active_given(&self, i: usize, slots: &[Option<usize>]) -> bool {
        match &self.guards[i] {
            None => true,
            Some(g) => matches!(slots[g.parent], Some(v) if g.allowed[v]),
        }
    }

    /// Number of valid completions of the subtree rooted at each (dim, value).
    fn value_weights(&self) -> Vec<Vec<u128>> {
        let n = self.dims.len();
        let mut subtree = vec![0u128; n];
        let mut weights: Vec<Vec<u128>> = vec![Vec::new(); n];
        // Children always come after their parent, so a reverse sweep sees
        // every child's subtree count before the parent needs it.
        for i in (0..n).rev() {
            let w: Vec<u128> = (0..self.dims[i].domain.len())
                .map(|v| {
                    self.children[i]
                        .iter()
                        .filter(|&&c| self.guards[c].as_ref().is_some_and(|g| g.allowed[v]))
                        .map(|&c| subtree[c])
                        .product()
                })
                .collect();
            subtree[i] = w.iter().sum();
            weights[i] = w;
        }
        weights
    }

    /// Exact number of valid configurations.
    pub fn cardinality(&self) -> u128 {
        let weights = self.value_weights();
        (0..self.dims.len())
            .filter(|&i| self.guards[i].is_none())
            .map(|i| weights[i].iter().sum::<u128>())
            .product()
    }

    /// The lexicographically first valid configuration.
    pub fn first(&self) -> Configuration {
        let mut slots = vec![None; self.dims.len()];
        self.reset_from(&mut slots, 0);
        Configuration(slots)
    }

    fn reset_from(&self, slots: &mut [Option<usize>], start: usize) {
        for j in start..self.dims.len() {
            slots[j] = if self.active_given(j, slots) { Some(0) } else { None };
        }
    }

    /// Every valid configuration exactly once, in lexicographic order over
    /// the dimension order.
    pub fn enumerate(&self) -> Enumerate<'_> {
        Enumerate {
            space: self,
            next: Some(self.first()),
        }
    }

    /// Uniform draw over valid configurations.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let weights = self.value_weights();
        let mut slots = vec![None; self.dims.len()];
        for i in 0..self.dims.len() {
            if !self.active_given(i, &slots) {
                continue;
            }
            let w = &weights[i];
            let total: u128 = w.iter().sum();
            let mut pick = rng.gen_range(0..total);
            let mut chosen = w.len() - 1;
            for (v, &wv) in w.iter().enumerate() {
                if pick < wv {
                    chosen = v;
                    break;
                }
                pick -= wv;
            }
            slots[i] = Some(chosen);
        }
        Configuration(slots)
    }

    pub fn validate(&self, config: &Configuration) -> Result<(), SpaceError> {
        if config.0.len() != self.dims.len() {
            return Err(SpaceError::Arity {
                space: self.name.clone(),
                expected: self.dims.len(),
                got: config.0.len(),
            });
        }
        for (i, slot) in config.0.iter().enumerate() {
            let active = self.active_given(i, &config.0);
            match (active, slot) {
                (true, None) => return Err(SpaceError::MissingValue(self.dims[i].name.clone())),
                (false, Some(_)) => return Err(SpaceError::InactiveValue(self.dims[i].name.clone())),
                (true, Some(v)) if *v >= self.dims[i].domain.len() => {
                    return Err(SpaceError::NotInDomain {
                        dim: self.dims[i].name.clone(),
                        value: format!("#{v}"),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, config: &Configuration) -> bool {
        self.validate(config).is_ok()
    }

    /// Builds a configuration from named values. Active dimensions without a
    /// value are an error; values for inactive dimensions are ignored.
    pub fn configure<'a, I, V>(&self, assignments: I) -> Result<Configuration, SpaceError>
    where
        I: IntoIterator<Item = (&'a str, V)>,
        V: Into<Value>,
    {
        let mut given: HashMap<usize, usize> = HashMap::new();
        for (name, value) in assignments {
            let i = self
                .dim_index(name)
                .ok_or_else(|| SpaceError::UnknownDim(name.to_string()))?;
            let value = value.into();
            let v = self.dims[i]
                .domain
                .index_of(&value)
                .ok_or_else(|| SpaceError::NotInDomain {
                    dim: name.to_string(),
                    value: value.to_string(),
                })?;
            given.insert(i, v);
        }
        let mut slots = vec![None; self.dims.len()];
        for i in 0..self.dims.len() {
            if self.active_given(i, &slots) {
                slots[i] = Some(
                    *given
                        .get(&i)
                        .ok_or_else(|| SpaceError::MissingValue(self.dims[i].name.clone()))?,
                );
            }
        }
        Ok(Configuration(slots))
    }

    pub fn value(&self, config: &Configuration, dim: usize) -> Option<Value> {
        config.0[dim].map(|v| self.dims[dim].domain.value(v))
    }

    pub fn get(&self, config: &Configuration, name: &str) -> Option<Value> {
        self.dim_index(name).and_then(|i| self.value(config, i))
    }

    pub fn view<'a>(&'a self, config: &'a Configuration) -> ConfigView<'a> {
        ConfigView { space: self, config }
    }

    /// Active assignments as a JSON object in dimension order.
    pub fn to_json(&self, config: &Configuration) -> Map<String, Json> {
        let mut map = Map::new();
        for (i, d) in self.dims.iter().enumerate() {
            if let Some(v) = self.value(config, i) {
                map.insert(d.name.clone(), serde_json::to_value(v).expect("values serialize"));
            }
        }
        map
    }

    pub fn from_json(&self, map: &Map<String, Json>) -> Result<Configuration, SpaceError> {
        let mut pairs = Vec::with_capacity(map.len());
        for (k, v) in map {
            let value: Value = serde_json::from_value(v.clone()).map_err(|_| SpaceError::NotInDomain {
                dim: k.clone(),
                value: v.to_string(),
            })?;
            pairs.push((k.as_str(), value));
        }
        self.configure(pairs)
    }

    /// Min-max normalization of every dimension over its declared domain.
    pub fn normalize(&self, config: &Configuration) -> Result<NormalizedPoint, SpaceError> {
        self.validate(config)?;
        let mut coords = Vec::with_capacity(self.dims.len());
        for (i, d) in self.dims.iter().enumerate() {
            let grid = d
                .domain
                .numeric_values()
                .ok_or_else(|| SpaceError::NotNormalizable(d.name.clone()))?;
            let v = config.0[i].ok_or_else(|| SpaceError::MissingValue(d.name.clone()))?;
            let (lo, hi) = (grid[0], grid[grid.len() - 1]);
            coords.push(if hi > lo { (grid[v] - lo) / (hi - lo) } else { 0.0 });
        }
        Ok(NormalizedPoint(coords))
    }

    /// Inverse of [`normalize`](Self::normalize), snapping to the nearest grid value.
    pub fn denormalize(&self, point: &NormalizedPoint) -> Result<Configuration, SpaceError> {
        let mut slots = Vec::with_capacity(self.dims.len());
        for (d, &x) in self.dims.iter().zip(&point.0) {
            let grid = d
                .domain
                .numeric_values()
                .ok_or_else(|| SpaceError::NotNormalizable(d.name.clone()))?;
            let (lo, hi) = (grid[0], grid[grid.len() - 1]);
            let raw = lo + x * (hi - lo);
            let nearest = grid
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - raw).abs().total_cmp(&(b.1 - raw).abs()))
                .map(|(i, _)| i)
                .expect("non-empty grid");
            slots.push(Some(nearest));
        }
        let config = Configuration(slots);
        self.validate(&config)?;
        Ok(config)
    }

    /// Concatenation of two spaces with disjoint dimension names. A joint
    /// configuration is `a`'s slots followed by `b`'s.
    pub fn union(name: &str, a: &ConfigSpace, b: &ConfigSpace) -> Result<ConfigSpace, SpaceError> {
        if let Some(d) = b.dims.iter().find(|d| a.index.contains_key(&d.name)) {
            return Err(SpaceError::NameClash(d.name.clone()));
        }
        let dims = a.dims.iter().chain(&b.dims).cloned().collect();
        let conditions = a.conditions.iter().chain(&b.conditions).cloned().collect();
        ConfigSpace::new(name, dims, conditions)
    }
}

pub struct Enumerate<'a> {
    space: &'a ConfigSpace,
    next: Option<Configuration>,
}

impl Iterator for Enumerate<'_> {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        let current = self.next.take()?;
        let mut slots = current.0.clone();
        let mut advanced = false;
        for i in (0..slots.len()).rev() {
            if let Some(v) = slots[i] {
                if v + 1 < self.space.dims[i].domain.len() {
                    slots[i] = Some(v + 1);
                    self.space.reset_from(&mut slots, i + 1);
                    advanced = true;
                    break;
                }
            }
        }
        if advanced {
            self.next = Some(Configuration(slots));
        }
        Some(current)
    }
}

/// Grid-index assignment for every dimension of a space; `None` marks an
/// inactive dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(pub Vec<Option<usize>>);

impl Configuration {
    pub fn slots(&self) -> &[Option<usize>] {
        &self.0
    }

    pub fn concat(a: &Configuration, b: &Configuration) -> Configuration {
        Configuration(a.0.iter().chain(&b.0).copied().collect())
    }

    pub fn split_at(&self, n: usize) -> (Configuration, Configuration) {
        let (a, b) = self.0.split_at(n);
        (Configuration(a.to_vec()), Configuration(b.to_vec()))
    }
}

/// Coordinates in `[0, 1]`, one per dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedPoint(pub Vec<f64>);

impl NormalizedPoint {
    pub fn l1(&self, other: &NormalizedPoint) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }
}

/// Typed, name-based lookups into a configuration.
pub struct ConfigView<'a> {
    space: &'a ConfigSpace,
    config: &'a Configuration,
}

impl ConfigView<'_> {
    pub fn value(&self, name: &str) -> Result<Value, SpaceError> {
        let i = self
            .space
            .dim_index(name)
            .ok_or_else(|| SpaceError::UnknownDim(name.to_string()))?;
        self.space
            .value(self.config, i)
            .ok_or_else(|| SpaceError::MissingValue(name.to_string()))
    }

    fn wrong(name: &str, expected: &'static str, v: &Value) -> SpaceError {
        SpaceError::WrongType {
            dim: name.to_string(),
            expected,
            found: v.type_name(),
        }
    }

    pub fn int(&self, name: &str) -> Result<i64, SpaceError> {
        match self.value(name)? {
            Value::Int(i) => Ok(i),
            v => Err(Self::wrong(name, "integer", &v)),
        }
    }

    pub fn real(&self, name: &str) -> Result<f64, SpaceError> {
        match self.value(name)? {
            Value::Real(r) => Ok(r),
            Value::Int(i) => Ok(i as f64),
            v => Err(Self::wrong(name, "real", &v)),
        }
    }

    pub fn boolean(&self, name: &str) -> Result<bool, SpaceError> {
        match self.value(name)? {
            Value::Bool(b) => Ok(b),
            v => Err(Self::wrong(name, "boolean", &v)),
        }
    }

    pub fn cat(&self, name: &str) -> Result<String, SpaceError> {
        match self.value(name)? {
            Value::Cat(s) => Ok(s),
            v => Err(Self::wrong(name, "categorical", &v)),
        }
    }
}
