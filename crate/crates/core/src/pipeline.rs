//! Pipeline prototypes: layered DAGs of operator slots between a source and
//! a sink, with static type checking and fit/apply execution.
//!
//! Every slot holds either an operator from its catalog or `EMPTY`, which
//! passes data through unchanged. A union node stacks the feature columns of
//! its non-empty incoming branches in edge declaration order; when all of
//! its branches are empty it passes its input through.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::configspace::{Condition, ConfigSpace, Configuration, ParamDomain, SpaceError, Value};
use crate::data::{Dataset, Matrix};
use crate::operators::{Catalog, FittedFunctor, OperatorConfig, OperatorError};

pub const EMPTY: &str = "EMPTY";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    NumericMatrix,
    LabeledNumericMatrix,
    MixedTable,
    ClassVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSignature {
    pub name: String,
    pub input: DataKind,
    pub output: DataKind,
    pub config_space: ConfigSpace,
    /// Rebalancing operators act on the training set only.
    pub train_only: bool,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PrototypeError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("edge references unknown node `{0}`")]
    UnknownNode(String),
    #[error("the graph has a cycle")]
    Cycle,
    #[error("node `{0}` is not on a path from source to sink")]
    Disconnected(String),
    #[error("node `{node}` must have exactly one incoming edge, has {count}")]
    InDegree { node: String, count: usize },
    #[error("the source cannot have incoming edges and the sink cannot have outgoing ones")]
    Terminal,
    #[error("slot `{0}` has an empty catalog")]
    EmptyCatalog(String),
    #[error("slot `{slot}` references unknown operator `{op}`")]
    UnknownOperator { slot: String, op: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotDoc {
    pub id: String,
    pub catalog: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDoc {
    pub name: String,
    pub slots: Vec<SlotDoc>,
}

/// Declarative form used in experiment files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrototypeDoc {
    #[serde(default = "default_source_kind")]
    pub source_kind: DataKind,
    pub layers: Vec<LayerDoc>,
    #[serde(default)]
    pub unions: Vec<String>,
    pub edges: Vec<(String, String)>,
}

fn default_source_kind() -> DataKind {
    DataKind::NumericMatrix
}

#[derive(Clone, Debug, PartialEq)]
enum NodeKind {
    Source,
    Sink,
    Slot { layer: usize, catalog: Vec<String> },
    Union,
}

#[derive(Clone, Debug, PartialEq)]
struct Node {
    id: String,
    kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PrototypeDoc", into = "PrototypeDoc")]
pub struct PipelinePrototype {
    doc: PrototypeDoc,
    nodes: Vec<Node>,
    preds: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl TryFrom<PrototypeDoc> for PipelinePrototype {
    type Error = PrototypeError;
    fn try_from(doc: PrototypeDoc) -> Result<Self, PrototypeError> {
        PipelinePrototype::new(doc)
    }
}

impl From<PipelinePrototype> for PrototypeDoc {
    fn from(p: PipelinePrototype) -> Self {
        p.doc
    }
}

impl PipelinePrototype {
    pub fn new(doc: PrototypeDoc) -> Result<Self, PrototypeError> {
        let mut nodes = vec![
            Node {
                id: "source".into(),
                kind: NodeKind::Source,
            },
            Node {
                id: "sink".into(),
                kind: NodeKind::Sink,
            },
        ];
        for (li, layer) in doc.layers.iter().enumerate() {
            for slot in &layer.slots {
                if slot.catalog.is_empty() {
                    return Err(PrototypeError::EmptyCatalog(slot.id.clone()));
                }
                nodes.push(Node {
                    id: slot.id.clone(),
                    kind: NodeKind::Slot {
                        layer: li,
                        catalog: slot.catalog.clone(),
                    },
                });
            }
        }
        for u in &doc.unions {
            nodes.push(Node {
                id: u.clone(),
                kind: NodeKind::Union,
            });
        }
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(PrototypeError::DuplicateNode(n.id.clone()));
            }
        }
        let n = nodes.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for (a, b) in &doc.edges {
            let ia = *index.get(a).ok_or_else(|| PrototypeError::UnknownNode(a.clone()))?;
            let ib = *index.get(b).ok_or_else(|| PrototypeError::UnknownNode(b.clone()))?;
            preds[ib].push(ia);
            succs[ia].push(ib);
        }
        if !preds[0].is_empty() || !succs[1].is_empty() {
            return Err(PrototypeError::Terminal);
        }
        for (i, node) in nodes.iter().enumerate() {
            let needs_one = matches!(node.kind, NodeKind::Slot { .. } | NodeKind::Sink);
            if needs_one && preds[i].len() != 1 {
                return Err(PrototypeError::InDegree {
                    node: node.id.clone(),
                    count: preds[i].len(),
                });
            }
        }
        // Kahn's algorithm, always taking the lowest-index ready node.
        let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            topo.push(i);
            for &s in &succs[i] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    ready.insert(s);
                }
            }
        }
        if topo.len() != n {
            return Err(PrototypeError::Cycle);
        }
        let reach = |start: usize, adj: &Vec<Vec<usize>>| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                if !std::mem::replace(&mut seen[i], true) {
                    stack.extend(&adj[i]);
                }
            }
            seen
        };
        let from_source = reach(0, &succs);
        let to_sink = reach(1, &preds);
        if let Some(i) = (0..n).find(|&i| !(from_source[i] && to_sink[i])) {
            return Err(PrototypeError::Disconnected(nodes[i].id.clone()));
        }
        Ok(Self {
            doc,
            nodes,
            preds,
            topo,
        })
    }

    /// Rebalance → normalize → {PCA, SelectKBest} → union → sink.
    pub fn standard() -> Self {
        let slot = |id: &str, ops: &[&str]| SlotDoc {
            id: id.into(),
            catalog: ops.iter().map(|s| s.to_string()).collect(),
        };
        let edge = |a: &str, b: &str| (a.to_string(), b.to_string());
        Self::new(PrototypeDoc {
            source_kind: DataKind::NumericMatrix,
            layers: vec![
                LayerDoc {
                    name: "rebalance".into(),
                    slots: vec![slot(
                        "rebalance",
                        &["near_miss", "condensed_nearest_neighbour", "smote"],
                    )],
                },
                LayerDoc {
                    name: "normalize".into(),
                    slots: vec![slot(
                        "normalize",
                        &["standard_scaler", "power_transform", "minmax_scaler", "robust_scaler"],
                    )],
                },
                LayerDoc {
                    name: "features".into(),
                    slots: vec![slot("reduce", &["pca"]), slot("select", &["select_k_best"])],
                },
            ],
            unions: vec!["stack".into()],
            edges: vec![
                edge("source", "rebalance"),
                edge("rebalance", "normalize"),
                edge("normalize", "reduce"),
                edge("normalize", "select"),
                edge("reduce", "stack"),
                edge("select", "stack"),
                edge("stack", "sink"),
            ],
        })
        .expect("reference prototype is valid")
    }

    pub fn doc(&self) -> &PrototypeDoc {
        &self.doc
    }

    pub fn source_kind(&self) -> DataKind {
        self.doc.source_kind
    }

    /// Slot ids in topological order.
    pub fn slots(&self) -> Vec<&str> {
        self.topo
            .iter()
            .filter(|&&i| matches!(self.nodes[i].kind, NodeKind::Slot { .. }))
            .map(|&i| self.nodes[i].id.as_str())
            .collect()
    }

    fn slot_catalog(&self, i: usize) -> &[String] {
        match &self.nodes[i].kind {
            NodeKind::Slot { catalog, .. } => catalog,
            _ => &[],
        }
    }

    pub fn layer_of(&self, slot: &str) -> Option<&str> {
        self.nodes.iter().find_map(|n| match &n.kind {
            NodeKind::Slot { layer, .. } if n.id == slot => Some(self.doc.layers[*layer].name.as_str()),
            _ => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SlotChoice {
    Empty,
    Operator { name: String, config: Configuration },
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PipelineInstance {
    /// Missing slots are `EMPTY`.
    pub assignment: BTreeMap<String, SlotChoice>,
}

impl PipelineInstance {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with(mut self, slot: &str, choice: SlotChoice) -> Self {
        self.assignment.insert(slot.to_string(), choice);
        self
    }

    pub fn choice(&self, slot: &str) -> &SlotChoice {
        self.assignment.get(slot).unwrap_or(&SlotChoice::Empty)
    }

    pub fn is_empty_slot(&self, slot: &str) -> bool {
        matches!(self.choice(slot), SlotChoice::Empty)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum Incompatibility {
    #[error("edge {from} -> {to}: {found:?} does not match expected {expected:?}")]
    Edge {
        from: String,
        to: String,
        found: DataKind,
        expected: DataKind,
    },
    #[error("slot `{slot}` cannot hold `{op}`")]
    NotInCatalog { slot: String, op: String },
    #[error("operator `{0}` is not in the catalog")]
    UnknownOperator(String),
    #[error("slot `{0}` is not part of the prototype")]
    UnknownSlot(String),
    #[error("configuration for `{op}` is invalid: {cause}")]
    BadConfig { op: String, cause: SpaceError },
}

/// Static check: every edge joins an upstream output kind to an identical
/// downstream input kind. Reports the first offending edge in topological
/// order.
pub fn check_compatibility(
    proto: &PipelinePrototype,
    catalog: &Catalog,
    inst: &PipelineInstance,
) -> Result<(), Incompatibility> {
    for slot in inst.assignment.keys() {
        if !proto
            .nodes
            .iter()
            .any(|n| &n.id == slot && matches!(n.kind, NodeKind::Slot { .. }))
        {
            return Err(Incompatibility::UnknownSlot(slot.clone()));
        }
    }
    let mut out_kind = vec![proto.source_kind(); proto.nodes.len()];
    for &i in &proto.topo {
        let node = &proto.nodes[i];
        let incoming: Vec<(usize, DataKind)> = proto.preds[i].iter().map(|&p| (p, out_kind[p])).collect();
        let edge_err = |p: usize, found: DataKind, expected: DataKind| Incompatibility::Edge {
            from: proto.nodes[p].id.clone(),
            to: node.id.clone(),
            found,
            expected,
        };
        out_kind[i] = match &node.kind {
            NodeKind::Source => proto.source_kind(),
            NodeKind::Sink => {
                let (p, k) = incoming[0];
                if k != DataKind::NumericMatrix {
                    return Err(edge_err(p, k, DataKind::NumericMatrix));
                }
                k
            }
            NodeKind::Union => {
                let (_, first) = incoming[0];
                if let Some(&(p, k)) = incoming.iter().find(|(_, k)| *k != first) {
                    return Err(edge_err(p, k, first));
                }
                first
            }
            NodeKind::Slot { catalog: allowed, .. } => {
                let (p, k) = incoming[0];
                match inst.choice(&node.id) {
                    SlotChoice::Empty => k,
                    SlotChoice::Operator { name, config } => {
                        if !allowed.contains(name) {
                            return Err(Incompatibility::NotInCatalog {
                                slot: node.id.clone(),
                                op: name.clone(),
                            });
                        }
                        let sig = catalog
                            .get(name)
                            .ok_or_else(|| Incompatibility::UnknownOperator(name.clone()))?;
                        sig.config_space
                            .validate(config)
                            .map_err(|cause| Incompatibility::BadConfig {
                                op: name.clone(),
                                cause,
                            })?;
                        if sig.input != k {
                            return Err(edge_err(p, k, sig.input));
                        }
                        sig.output
                    }
                }
            }
        };
    }
    Ok(())
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("statically incompatible: {0}")]
    Static(#[from] Incompatibility),
    /// Operator failure during fitting; scored as `+inf` loss.
    #[error("runtime incompatibility at `{node}`: {cause}")]
    Runtime { node: String, cause: OperatorError },
    #[error("test data has {got} columns, pipeline was fitted on {expected}")]
    Shape { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq)]
enum FittedStep {
    Source,
    Slot(Option<FittedFunctor>),
    /// Indices of the stacked predecessor nodes; empty means pass-through.
    Union(Vec<usize>),
    Sink,
}

/// The composed functor chain of a fitted pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedPipeline {
    input_cols: usize,
    preds: Vec<Vec<usize>>,
    steps: Vec<(usize, String, FittedStep)>,
}

impl FittedPipeline {
    /// `(node id, functor)` pairs in execution order; `None` marks pass-through.
    pub fn functors(&self) -> Vec<(&str, Option<&FittedFunctor>)> {
        self.steps
            .iter()
            .filter_map(|(_, id, s)| match s {
                FittedStep::Slot(f) => Some((id.as_str(), f.as_ref())),
                _ => None,
            })
            .collect()
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix, PipelineError> {
        if x.cols() != self.input_cols {
            return Err(PipelineError::Shape {
                expected: self.input_cols,
                got: x.cols(),
            });
        }
        let mut outputs: Vec<Option<Matrix>> = vec![None; self.preds.len()];
        let mut result = None;
        for (i, id, step) in &self.steps {
            let input = |p: usize| outputs[p].as_ref().expect("topological order");
            let out = match step {
                FittedStep::Source => x.clone(),
                FittedStep::Slot(None) => input(self.preds[*i][0]).clone(),
                FittedStep::Slot(Some(f)) => {
                    if f.is_identity() {
                        input(self.preds[*i][0]).clone()
                    } else {
                        f.transform(input(self.preds[*i][0]))
                            .map_err(|cause| PipelineError::Runtime {
                                node: id.clone(),
                                cause,
                            })?
                    }
                }
                FittedStep::Union(stacked) if stacked.is_empty() => input(self.preds[*i][0]).clone(),
                FittedStep::Union(stacked) => {
                    let blocks: Vec<&Matrix> = stacked.iter().map(|&p| input(p)).collect();
                    Matrix::hstack(&blocks).map_err(|e| PipelineError::Runtime {
                        node: id.clone(),
                        cause: OperatorError::Incompatible(e.to_string()),
                    })?
                }
                FittedStep::Sink => {
                    result = Some(input(self.preds[*i][0]).clone());
                    continue;
                }
            };
            outputs[*i] = Some(out);
        }
        Ok(result.expect("sink reached"))
    }
}

/// Fits every node in topological order on the training set and returns the
/// transformed training data together with the fitted functor chain.
pub fn fit_transform<R: Rng + ?Sized>(
    proto: &PipelinePrototype,
    catalog: &Catalog,
    inst: &PipelineInstance,
    train: &Dataset,
    rng: &mut R,
) -> Result<(Dataset, FittedPipeline), PipelineError> {
    check_compatibility(proto, catalog, inst)?;
    let n = proto.nodes.len();
    let mut outputs: Vec<Option<Dataset>> = vec![None; n];
    let mut steps = Vec::with_capacity(n);
    let mut result = None;
    for &i in &proto.topo {
        let node = &proto.nodes[i];
        let input = |p: usize| outputs[p].as_ref().expect("topological order");
        let runtime = |cause: OperatorError| PipelineError::Runtime {
            node: node.id.clone(),
            cause,
        };
        let (out, step) = match &node.kind {
            NodeKind::Source => (train.clone(), FittedStep::Source),
            NodeKind::Sink => {
                result = Some(input(proto.preds[i][0]).clone());
                steps.push((i, node.id.clone(), FittedStep::Sink));
                continue;
            }
            NodeKind::Slot { .. } => match inst.choice(&node.id) {
                SlotChoice::Empty => (input(proto.preds[i][0]).clone(), FittedStep::Slot(None)),
                SlotChoice::Operator { name, config } => {
                    let sig = catalog.get(name).expect("checked statically");
                    let op = OperatorConfig::from_config(name, &sig.config_space, config).map_err(runtime)?;
                    let (data, functor) = op.fit(input(proto.preds[i][0]), rng).map_err(runtime)?;
                    (data, FittedStep::Slot(Some(functor)))
                }
            },
            NodeKind::Union => {
                let stacked: Vec<usize> = proto.preds[i]
                    .iter()
                    .copied()
                    .filter(|&p| match &proto.nodes[p].kind {
                        NodeKind::Slot { .. } => !inst.is_empty_slot(&proto.nodes[p].id),
                        _ => true,
                    })
                    .collect();
                if stacked.is_empty() {
                    (input(proto.preds[i][0]).clone(), FittedStep::Union(stacked))
                } else {
                    let first = input(stacked[0]);
                    if stacked.iter().any(|&p| input(p).y != first.y) {
                        return Err(runtime(OperatorError::Incompatible(
                            "union branches disagree on rows".into(),
                        )));
                    }
                    let blocks: Vec<&Matrix> = stacked.iter().map(|&p| &input(p).x).collect();
                    let x = Matrix::hstack(&blocks).map_err(|e| runtime(OperatorError::Incompatible(e.to_string())))?;
                    let feature_names = stacked
                        .iter()
                        .flat_map(|&p| {
                            input(p)
                                .feature_names
                                .iter()
                                .map(move |f| format!("{}:{f}", proto.nodes[p].id))
                        })
                        .collect();
                    let data = Dataset {
                        name: first.name.clone(),
                        x,
                        y: first.y.clone(),
                        feature_names,
                        class_names: first.class_names.clone(),
                    };
                    (data, FittedStep::Union(stacked))
                }
            }
        };
        outputs[i] = Some(out);
        steps.push((i, node.id.clone(), step));
    }
    let fitted = FittedPipeline {
        input_cols: train.n_features(),
        preds: proto.preds.clone(),
        steps,
    };
    Ok((result.expect("sink reached"), fitted))
}

/// The configuration space of a prototype: one categorical dimension per
/// slot (its catalog plus `EMPTY`), followed by that slot's operator
/// parameters, each active only when its operator is chosen.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineSpace {
    space: ConfigSpace,
    /// (slot id, slot dim, per-operator (name, param dims, operator space)).
    slots: Vec<SlotDims>,
}

#[derive(Clone, Debug, PartialEq)]
struct SlotDims {
    slot: String,
    dim: usize,
    ops: Vec<(String, Vec<usize>, ConfigSpace)>,
}

pub fn param_dim_name(slot: &str, op: &str, param: &str) -> String {
    format!("{slot}.{op}.{param}")
}

impl PipelineSpace {
    pub fn new(proto: &PipelinePrototype, catalog: &Catalog) -> Result<Self, PrototypeError> {
        let mut dims = Vec::new();
        let mut conditions = Vec::new();
        let mut slots = Vec::new();
        for &i in &proto.topo {
            let allowed = proto.slot_catalog(i);
            if !matches!(proto.nodes[i].kind, NodeKind::Slot { .. }) {
                continue;
            }
            let slot = proto.nodes[i].id.clone();
            let mut choices = vec![EMPTY.to_string()];
            choices.extend(allowed.iter().cloned());
            let slot_dim = dims.len();
            dims.push(ParamDomain::categorical(&slot, choices));
            let mut ops = Vec::new();
            for op in allowed {
                let sig = catalog.get(op).ok_or_else(|| PrototypeError::UnknownOperator {
                    slot: slot.clone(),
                    op: op.clone(),
                })?;
                let op_space = &sig.config_space;
                let mut idx = Vec::new();
                for d in op_space.dims() {
                    let name = param_dim_name(&slot, op, &d.name);
                    idx.push(dims.len());
                    dims.push(ParamDomain {
                        name: name.clone(),
                        domain: d.domain.clone(),
                    });
                    let inner = op_space.conditions().iter().find(|c| c.child == d.name);
                    conditions.push(match inner {
                        Some(c) => Condition {
                            child: name,
                            parent: param_dim_name(&slot, op, &c.parent),
                            any_of: c.any_of.clone(),
                        },
                        None => Condition::new(&name, &slot, [Value::Cat(op.clone())]),
                    });
                }
                ops.push((op.clone(), idx, op_space.clone()));
            }
            slots.push(SlotDims {
                slot,
                dim: slot_dim,
                ops,
            });
        }
        let space = ConfigSpace::new("pipeline", dims, conditions)?;
        Ok(Self { space, slots })
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    /// The all-`EMPTY` configuration.
    pub fn empty_config(&self) -> Configuration {
        self.space.first()
    }

    pub fn decode(&self, config: &Configuration) -> Result<PipelineInstance, SpaceError> {
        self.space.validate(config)?;
        let mut inst = PipelineInstance::empty();
        for s in &self.slots {
            let choice = config.0[s.dim].expect("slot dims are unconditional");
            if choice == 0 {
                continue;
            }
            let (name, idx, op_space) = &s.ops[choice - 1];
            let op_config = Configuration(idx.iter().map(|&d| config.0[d]).collect());
            op_space.validate(&op_config)?;
            inst.assignment.insert(
                s.slot.clone(),
                SlotChoice::Operator {
                    name: name.clone(),
                    config: op_config,
                },
            );
        }
        Ok(inst)
    }

    pub fn encode(&self, inst: &PipelineInstance) -> Result<Configuration, SpaceError> {
        let mut slots = vec![None; self.space.num_dims()];
        for s in &self.slots {
            match inst.choice(&s.slot) {
                SlotChoice::Empty => slots[s.dim] = Some(0),
                SlotChoice::Operator { name, config } => {
                    let pos = s
                        .ops
                        .iter()
                        .position(|(n, _, _)| n == name)
                        .ok_or_else(|| SpaceError::NotInDomain {
                            dim: s.slot.clone(),
                            value: name.clone(),
                        })?;
                    slots[s.dim] = Some(pos + 1);
                    for (&d, &v) in s.ops[pos].1.iter().zip(&config.0) {
                        slots[d] = v;
                    }
                }
            }
        }
        let config = Configuration(slots);
        self.space.validate(&config)?;
        Ok(config)
    }

    /// Number of options a single slot contributes (EMPTY plus every
    /// operator setting).
    pub fn slot_options(&self, slot: &str) -> Option<u128> {
        self.slots
            .iter()
            .find(|s| s.slot == slot)
            .map(|s| 1 + s.ops.iter().map(|(_, _, sp)| sp.cardinality()).sum::<u128>())
    }
}
