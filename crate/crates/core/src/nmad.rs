//! Normalized mean absolute deviation of per-algorithm optimal points.
//!
//! Coordinates are min-max normalized over each dimension's declared grid.
//! Each algorithm is represented by its optimal point closest (L1) to the
//! reference; the value is the summed L1 deviation of the representants
//! divided by the number of dimensions and the number of algorithms, so it
//! lies in `[0, 1]` and is 0 exactly when every algorithm has the reference
//! among its optima.

use std::fmt::Write as _;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::configspace::{ConfigSpace, Configuration, NormalizedPoint, SpaceError};

pub const ECHR_FIXTURE: &str = include_str!("../fixtures/echr.json");
pub const NEWSGROUP_FIXTURE: &str = include_str!("../fixtures/newsgroup.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NmadError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("algorithm `{0}` has no optimal points")]
    EmptyAlgorithm(String),
    #[error("the optimal set lists no algorithm")]
    NoAlgorithms,
    #[error("malformed fixture: {0}")]
    Fixture(String),
}

/// Optimal configurations per algorithm over a numeric space.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalSet {
    pub name: String,
    space: ConfigSpace,
    algorithms: Vec<(String, Vec<Configuration>)>,
}

impl OptimalSet {
    pub fn new(
        name: &str,
        space: ConfigSpace,
        algorithms: Vec<(String, Vec<Configuration>)>,
    ) -> Result<Self, NmadError> {
        if algorithms.is_empty() {
            return Err(NmadError::NoAlgorithms);
        }
        for (alg, points) in &algorithms {
            if points.is_empty() {
                return Err(NmadError::EmptyAlgorithm(alg.clone()));
            }
            for p in points {
                space.normalize(p)?;
            }
        }
        Ok(Self {
            name: name.to_string(),
            space,
            algorithms,
        })
    }

    /// `{"name", "space", "algorithms": {alg: [{dim: value, ...}, ...]}}`
    pub fn from_json_str(text: &str) -> Result<Self, NmadError> {
        let doc: Json = serde_json::from_str(text).map_err(|e| NmadError::Fixture(e.to_string()))?;
        let bad = |m: &str| NmadError::Fixture(m.to_string());
        let name = doc.get("name").and_then(Json::as_str).unwrap_or("unnamed");
        let space: ConfigSpace =
            serde_json::from_value(doc.get("space").cloned().ok_or_else(|| bad("missing `space`"))?)
                .map_err(|e| NmadError::Fixture(e.to_string()))?;
        let algs = doc
            .get("algorithms")
            .and_then(Json::as_object)
            .ok_or_else(|| bad("missing `algorithms` object"))?;
        let mut algorithms = Vec::with_capacity(algs.len());
        for (alg, list) in algs {
            let list = list
                .as_array()
                .ok_or_else(|| NmadError::Fixture(format!("`{alg}` is not a list")))?;
            let points = list
                .iter()
                .map(|p| {
                    let m = p
                        .as_object()
                        .ok_or_else(|| NmadError::Fixture(format!("`{alg}` point is not an object")))?;
                    Ok(space.from_json(m)?)
                })
                .collect::<Result<Vec<_>, NmadError>>()?;
            algorithms.push((alg.clone(), points));
        }
        Self::new(name, space, algorithms)
    }

    pub fn to_json(&self) -> Json {
        let algs: Map<String, Json> = self
            .algorithms
            .iter()
            .map(|(a, pts)| {
                let list = pts.iter().map(|p| Json::Object(self.space.to_json(p))).collect();
                (a.clone(), Json::Array(list))
            })
            .collect();
        json!({ "name": self.name, "space": self.space, "algorithms": algs })
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn algorithms(&self) -> &[(String, Vec<Configuration>)] {
        &self.algorithms
    }
}

/// The point closest to `r` in normalized L1 distance; ties go to the
/// point that comes first in enumeration order.
pub fn representant(
    points: &[Configuration],
    r: &Configuration,
    space: &ConfigSpace,
) -> Result<Configuration, NmadError> {
    let rn = space.normalize(r)?;
    let mut best: Option<(f64, &Configuration)> = None;
    for p in points {
        let d = space.normalize(p)?.l1(&rn);
        let closer = match best {
            None => true,
            Some((bd, bp)) => d < bd || (d == bd && p < bp),
        };
        if closer {
            best = Some((d, p));
        }
    }
    best.map(|(_, p)| p.clone())
        .ok_or_else(|| NmadError::EmptyAlgorithm(String::new()))
}

fn deviation(set: &OptimalSet, r: &Configuration) -> Result<(f64, Vec<(String, Configuration)>), NmadError> {
    let rn: NormalizedPoint = set.space.normalize(r)?;
    let mut total = 0.0;
    let mut reps = Vec::with_capacity(set.algorithms.len());
    for (alg, points) in &set.algorithms {
        let p = representant(points, r, &set.space)?;
        total += set.space.normalize(&p)?.l1(&rn);
        reps.push((alg.clone(), p));
    }
    let k = set.space.num_dims().max(1) as f64;
    let n = set.algorithms.len() as f64;
    Ok((total / (k * n), reps))
}

pub fn nmad(set: &OptimalSet, r: &Configuration) -> Result<f64, NmadError> {
    Ok(deviation(set, r)?.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NmadRow {
    pub reference: Configuration,
    pub value: f64,
    pub representants: Vec<(String, Configuration)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NmadReport {
    pub name: String,
    pub dims: Vec<String>,
    pub rows: Vec<NmadRow>,
}

/// One row per distinct optimal point, most universal first.
pub fn report(set: &OptimalSet) -> Result<NmadReport, NmadError> {
    let mut refs: Vec<&Configuration> = Vec::new();
    for (_, points) in &set.algorithms {
        for p in points {
            if !refs.contains(&p) {
                refs.push(p);
            }
        }
    }
    let mut rows = refs
        .into_iter()
        .map(|r| {
            let (value, representants) = deviation(set, r)?;
            Ok(NmadRow {
                reference: r.clone(),
                value,
                representants,
            })
        })
        .collect::<Result<Vec<_>, NmadError>>()?;
    rows.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.reference.cmp(&b.reference)));
    Ok(NmadReport {
        name: set.name.clone(),
        dims: set.space.dims().iter().map(|d| d.name.clone()).collect(),
        rows,
    })
}

impl NmadReport {
    fn point(&self, space: &ConfigSpace, c: &Configuration) -> String {
        let vals: Vec<String> = (0..space.num_dims())
            .map(|i| space.value(c, i).map_or("-".into(), |v| v.to_string()))
            .collect();
        format!("({})", vals.join(", "))
    }

    pub fn render(&self, space: &ConfigSpace) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}: ({})  NMAD", self.name, self.dims.join(", "));
        for r in &self.rows {
            let _ = writeln!(out, "{:<24} {:.3}", self.point(space, &r.reference), r.value);
        }
        out
    }

    pub fn to_csv(&self, space: &ConfigSpace) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.dims.clone();
        header.push("nmad".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec: Vec<String> = (0..space.num_dims())
                .map(|i| space.value(&r.reference, i).map_or(String::new(), |v| v.to_string()))
                .collect();
            rec.push(format!("{}", r.value));
            w.write_record(&rec)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::Value;

    fn echr() -> OptimalSet {
        OptimalSet::from_json_str(ECHR_FIXTURE).unwrap()
    }

    fn point(set: &OptimalSet, n: i64, k: i64) -> Configuration {
        set.space()
            .configure([("n", Value::Int(n)), ("k", Value::Int(k))])
            .unwrap()
    }

    #[test]
    fn representant_examples() {
        let set = echr();
        let rf = &set.algorithms()[2];
        assert_eq!(rf.0, "RF");
        let r = point(&set, 4, 50000);
        assert_eq!(representant(&rf.1, &r, set.space()).unwrap(), point(&set, 5, 50000));
        let svm = &set.algorithms()[3].1;
        let r = point(&set, 3, 10000);
        assert_eq!(representant(svm, &r, set.space()).unwrap(), point(&set, 3, 50000));
        assert_eq!(
            representant(svm, &point(&set, 4, 50000), set.space()).unwrap(),
            point(&set, 4, 50000)
        );
    }

    #[test]
    fn hand_computed_value() {
        // Normalized diffs (0.5, 0.4) twice plus (0, 0.4): 2.2 / (2 * 4).
        let set = echr();
        let v = nmad(&set, &point(&set, 3, 10000)).unwrap();
        let k = (50000.0 - 10000.0) / (100000.0 - 10.0);
        assert!((v - (0.5 + k + 0.5 + k + k) / 8.0).abs() < 1e-12);
    }

    fn check(set: &OptimalSet, expected: &[((i64, i64), f64)]) {
        let rep = report(set).unwrap();
        assert_eq!(rep.rows.len(), expected.len());
        for &((n, k), v) in expected {
            let r = point(set, n, k);
            let row = rep.rows.iter().find(|row| row.reference == r).unwrap();
            assert!((row.value - v).abs() <= 1e-3, "({n},{k}): {} vs {v}", row.value);
        }
        assert!(rep.rows.windows(2).all(|w| w[0].value <= w[1].value));
    }

    #[test]
    fn echr_table() {
        let expected = [
            ((5, 50000), 0.0),
            ((3, 10000), 0.275),
            ((4, 10000), 0.213),
            ((3, 50000), 0.175),
            ((4, 50000), 0.094),
        ];
        check(&echr(), &expected);
    }

    #[test]
    fn newsgroup_table() {
        let set = OptimalSet::from_json_str(NEWSGROUP_FIXTURE).unwrap();
        let expected = [
            ((4, 5000), 0.306),
            ((4, 100000), 0.300),
            ((5, 50000), 0.356),
            ((3, 10000), 0.294),
            ((2, 100000), 0.362),
        ];
        check(&set, &expected);
    }

    #[test]
    fn single_point_single_algorithm() {
        let set = echr();
        let only = OptimalSet::new(
            "one",
            set.space().clone(),
            vec![("A".into(), vec![point(&set, 2, 100)])],
        )
        .unwrap();
        let rep = report(&only).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.rows[0].value, 0.0);
    }

    #[test]
    fn empty_algorithm_list_is_rejected() {
        let text = r#"{"name":"x","space":{"name":"s","dims":[{"name":"n","kind":"int-grid","values":[1,2]}]},
            "algorithms":{"A":[]}}"#;
        assert_eq!(
            OptimalSet::from_json_str(text),
            Err(NmadError::EmptyAlgorithm("A".into()))
        );
    }

    #[test]
    fn categorical_dims_are_rejected() {
        let text = r#"{"name":"x","space":{"name":"s","dims":[{"name":"c","kind":"categorical","values":["a","b"]}]},
            "algorithms":{"A":[{"c":"a"}]}}"#;
        assert!(matches!(
            OptimalSet::from_json_str(text),
            Err(NmadError::Space(SpaceError::NotNormalizable(_)))
        ));
    }

    #[test]
    fn json_round_trip() {
        let set = echr();
        let back = OptimalSet::from_json_str(&set.to_json().to_string()).unwrap();
        assert_eq!(back, set);
    }
}
