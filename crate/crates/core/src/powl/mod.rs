//! POWL model representation.
//!
//! A model is a tree of [`PowlNode`]s shared through [`Node`] (`Arc`)
//! handles. Node *identity* matters: a canonical model places every node
//! object at exactly one tree position, and [`validate`] reports a node that
//! shows up twice as `SUBMODEL_REUSE`. [`auto_fix_reuse`] repairs that by
//! deep-copying later occurrences.

mod canonical;
mod fix;
mod json;
pub mod order;
mod validate;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::diagnostics::DiagnosticCode;

pub use canonical::{canonical_form, structural_equal};
pub use fix::{auto_fix_reuse, deep_copy};
pub use json::{opt_node, ModelJson};
pub use validate::validate;

/// Shared handle to a model node.
pub type Node = Arc<PowlNode>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("activity label must not be empty")]
    EmptyLabel,
    #[error("xor takes at least 2 submodels, got {0}")]
    XorArity(usize),
    #[error("partial order must contain at least one node")]
    EmptyPartialOrder,
    #[error("edge ({0}, {1}) references a node outside the partial order of {2} nodes")]
    EdgeOutOfBounds(usize, usize, usize),
    #[error("the ordering relation contains a cycle through node {0}")]
    OrderCycle(usize),
    #[error("edge ({0}, {0}) violates irreflexivity")]
    Irreflexive(usize),
    #[error("model is not valid: {0}")]
    Invalid(String),
}

impl ModelError {
    pub fn code(&self) -> DiagnosticCode {
        match self {
            ModelError::EmptyLabel => DiagnosticCode::EmptyLabel,
            ModelError::XorArity(_) => DiagnosticCode::XorArity,
            ModelError::EmptyPartialOrder => DiagnosticCode::EmptyPartialOrder,
            ModelError::EdgeOutOfBounds(..) => DiagnosticCode::ParseError,
            ModelError::OrderCycle(_) => DiagnosticCode::OrderCycle,
            ModelError::Irreflexive(_) => DiagnosticCode::IrreflexivityViolation,
            ModelError::Invalid(_) => DiagnosticCode::OrderCycle,
        }
    }
}

/// Activity label, trimmed of surrounding whitespace and never empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(raw: &str) -> Result<Self, ModelError> {
        let t = raw.trim();
        if t.is_empty() {
            return Err(ModelError::EmptyLabel);
        }
        Ok(Label(t.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Label {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Strict order over submodels. Edges are index pairs into `nodes`.
///
/// The edge set is whatever the constructor was given; [`order::close`]
/// produces the transitively closed form that validated models carry.
#[derive(Debug, Clone)]
pub struct PartialOrder {
    nodes: Vec<Node>,
    edges: BTreeSet<(usize, usize)>,
}

impl PartialOrder {
    /// Bounds-checks edges and rejects empty node lists. Self-loops and
    /// cycles are accepted here and reported by [`validate`].
    pub fn new(
        nodes: Vec<Node>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, ModelError> {
        if nodes.is_empty() {
            return Err(ModelError::EmptyPartialOrder);
        }
        let n = nodes.len();
        let edges: BTreeSet<_> = edges.into_iter().collect();
        if let Some(&(i, j)) = edges.iter().find(|(i, j)| *i >= n || *j >= n) {
            return Err(ModelError::EdgeOutOfBounds(i, j, n));
        }
        Ok(PartialOrder { nodes, edges })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        order::closure(self.len(), &self.edges) == self.edges
    }

    pub fn predecessors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == j).map(|e| e.0)
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == i).map(|e| e.1)
    }
}

#[derive(Debug)]
pub enum PowlNode {
    Activity(Label),
    /// Silent step; produces no event.
    Silent,
    /// Exclusive choice over at least two submodels.
    Xor(Vec<Node>),
    /// `body` runs once, then any number of `redo; body` rounds.
    Loop { body: Node, redo: Node },
    PartialOrder(PartialOrder),
}

impl PowlNode {
    pub fn activity(label: &str) -> Result<Node, ModelError> {
        Ok(Arc::new(PowlNode::Activity(Label::new(label)?)))
    }

    pub fn silent() -> Node {
        Arc::new(PowlNode::Silent)
    }

    pub fn xor(children: Vec<Node>) -> Result<Node, ModelError> {
        if children.len() < 2 {
            return Err(ModelError::XorArity(children.len()));
        }
        Ok(Arc::new(PowlNode::Xor(children)))
    }

    pub fn looped(body: Node, redo: Node) -> Node {
        Arc::new(PowlNode::Loop { body, redo })
    }

    pub fn partial_order(
        nodes: Vec<Node>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Node, ModelError> {
        Ok(Arc::new(PowlNode::PartialOrder(PartialOrder::new(nodes, edges)?)))
    }

    /// Total order over `nodes`, in the given order.
    pub fn sequence(nodes: Vec<Node>) -> Result<Node, ModelError> {
        let n = nodes.len();
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::partial_order(nodes, edges)
    }

    pub fn children(&self) -> Vec<&Node> {
        match self {
            PowlNode::Activity(_) | PowlNode::Silent => Vec::new(),
            PowlNode::Xor(ch) => ch.iter().collect(),
            PowlNode::Loop { body, redo } => vec![body, redo],
            PowlNode::PartialOrder(po) => po.nodes.iter().collect(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PowlNode::Activity(_) => "activity",
            PowlNode::Silent => "silent",
            PowlNode::Xor(_) => "xor",
            PowlNode::Loop { .. } => "loop",
            PowlNode::PartialOrder(_) => "partial_order",
        }
    }

    pub fn counts(&self) -> NodeCounts {
        let mut c = NodeCounts::default();
        self.accumulate(&mut c);
        c
    }

    fn accumulate(&self, c: &mut NodeCounts) {
        match self {
            PowlNode::Activity(_) => c.activities += 1,
            PowlNode::Silent => c.silent += 1,
            PowlNode::Xor(_) => c.choices += 1,
            PowlNode::Loop { .. } => c.loops += 1,
            PowlNode::PartialOrder(_) => c.partial_orders += 1,
        }
        for ch in self.children() {
            ch.accumulate(c);
        }
    }

    /// Distinct activity labels in the model.
    pub fn labels(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut BTreeSet<String>) {
        if let PowlNode::Activity(l) = self {
            out.insert(l.as_str().to_string());
        }
        for ch in self.children() {
            ch.collect_labels(out);
        }
    }

    pub fn contains_loop(&self) -> bool {
        self.counts().loops > 0
    }
}

/// Number of nodes of each kind, counted per tree position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounts {
    pub activities: usize,
    pub silent: usize,
    pub choices: usize,
    pub loops: usize,
    pub partial_orders: usize,
}

/// Returns `node` with every partial order replaced by its transitive
/// closure. Fails on the first cyclic order.
pub fn close_all(node: &Node) -> Result<Node, ModelError> {
    Ok(match &**node {
        PowlNode::Activity(_) | PowlNode::Silent => node.clone(),
        PowlNode::Xor(ch) => {
            Arc::new(PowlNode::Xor(ch.iter().map(close_all).collect::<Result<_, _>>()?))
        }
        PowlNode::Loop { body, redo } => PowlNode::looped(close_all(body)?, close_all(redo)?),
        PowlNode::PartialOrder(po) => {
            let nodes = po.nodes.iter().map(close_all).collect::<Result<Vec<_>, _>>()?;
            let closed = order::close(&PartialOrder { nodes, edges: po.edges.clone() })?;
            Arc::new(PowlNode::PartialOrder(closed))
        }
    })
}
