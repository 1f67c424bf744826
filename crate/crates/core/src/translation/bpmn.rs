use serde::Serialize;

use super::{check_model, TranslationError};
use crate::powl::{order, Node, PowlNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayDirection {
    Diverging,
    Converging,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BpmnNodeKind {
    StartEvent,
    EndEvent,
    Task { name: String },
    ExclusiveGateway { direction: GatewayDirection },
    ParallelGateway { direction: GatewayDirection },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BpmnNode {
    pub id: String,
    #[serde(flatten)]
    pub kind: BpmnNodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SequenceFlow {
    pub id: String,
    pub source: usize,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BpmnGraph {
    pub nodes: Vec<BpmnNode>,
    pub flows: Vec<SequenceFlow>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GatewayCounts {
    pub exclusive: usize,
    pub parallel: usize,
}

impl BpmnGraph {
    pub fn tasks(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().filter_map(|n| match &n.kind {
            BpmnNodeKind::Task { name } => Some(name.as_str()),
            _ => None,
        })
    }

    pub fn gateway_counts(&self) -> GatewayCounts {
        let mut c = GatewayCounts::default();
        for n in &self.nodes {
            match n.kind {
                BpmnNodeKind::ExclusiveGateway { .. } => c.exclusive += 1,
                BpmnNodeKind::ParallelGateway { .. } => c.parallel += 1,
                _ => {}
            }
        }
        c
    }

    pub fn incoming(&self, node: usize) -> impl Iterator<Item = &SequenceFlow> {
        self.flows.iter().filter(move |f| f.target == node)
    }

    pub fn outgoing(&self, node: usize) -> impl Iterator<Item = &SequenceFlow> {
        self.flows.iter().filter(move |f| f.source == node)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Real(BpmnNodeKind),
    /// Pass-through standing in for a silent step; always elided.
    Connector,
}

#[derive(Default)]
struct Builder {
    kinds: Vec<Kind>,
    flows: Vec<(usize, usize)>,
}

impl Builder {
    fn add(&mut self, k: Kind) -> usize {
        self.kinds.push(k);
        self.kinds.len() - 1
    }

    fn gateway(&mut self, exclusive: bool, direction: GatewayDirection) -> usize {
        self.add(Kind::Real(if exclusive {
            BpmnNodeKind::ExclusiveGateway { direction }
        } else {
            BpmnNodeKind::ParallelGateway { direction }
        }))
    }

    fn flow(&mut self, a: usize, b: usize) {
        self.flows.push((a, b));
    }

    /// Builds the fragment for `node`; returns its (entry, exit) nodes.
    fn fragment(&mut self, node: &Node) -> (usize, usize) {
        use GatewayDirection::*;
        match &**node {
            PowlNode::Activity(l) => {
                let t = self.add(Kind::Real(BpmnNodeKind::Task { name: l.as_str().to_string() }));
                (t, t)
            }
            PowlNode::Silent => {
                let c = self.add(Kind::Connector);
                (c, c)
            }
            PowlNode::Xor(children) => {
                let split = self.gateway(true, Diverging);
                let join = self.gateway(true, Converging);
                for c in children {
                    let (a, b) = self.fragment(c);
                    self.flow(split, a);
                    self.flow(b, join);
                }
                (split, join)
            }
            PowlNode::Loop { body, redo } => {
                let join = self.gateway(true, Converging);
                let (da, db) = self.fragment(body);
                let split = self.gateway(true, Diverging);
                let (ra, rb) = self.fragment(redo);
                self.flow(join, da);
                self.flow(db, split);
                self.flow(split, ra);
                self.flow(rb, join);
                (join, split)
            }
            PowlNode::PartialOrder(po) => {
                let n = po.len();
                let red = order::reduction(n, po.edges());
                let split = self.gateway(false, Diverging);
                let join = self.gateway(false, Converging);
                let mut entries = Vec::with_capacity(n);
                let mut exits = Vec::with_capacity(n);
                for (i, child) in po.nodes().iter().enumerate() {
                    let indeg = red.iter().filter(|e| e.1 == i).count();
                    let outdeg = red.iter().filter(|e| e.0 == i).count();
                    let pj = (indeg >= 2).then(|| self.gateway(false, Converging));
                    let (a, b) = self.fragment(child);
                    let ps = (outdeg >= 2).then(|| self.gateway(false, Diverging));
                    if let Some(pj) = pj {
                        self.flow(pj, a);
                    }
                    if let Some(ps) = ps {
                        self.flow(b, ps);
                    }
                    entries.push(pj.unwrap_or(a));
                    exits.push(ps.unwrap_or(b));
                    if indeg == 0 {
                        self.flow(split, entries[i]);
                    }
                }
                for &(i, j) in &red {
                    self.flow(exits[i], entries[j]);
                }
                for (i, &x) in exits.iter().enumerate() {
                    if !red.iter().any(|e| e.0 == i) {
                        self.flow(x, join);
                    }
                }
                (split, join)
            }
        }
    }

    /// Removes connectors, and gateways with one incoming and one outgoing
    /// flow when `elide` is set.
    fn finish(mut self, elide: bool) -> BpmnGraph {
        let mut alive = vec![true; self.kinds.len()];
        for x in 0..self.kinds.len() {
            let removable = match &self.kinds[x] {
                Kind::Connector => true,
                Kind::Real(BpmnNodeKind::ExclusiveGateway { .. } | BpmnNodeKind::ParallelGateway { .. }) => elide,
                _ => false,
            };
            if !removable {
                continue;
            }
            let ins: Vec<usize> = (0..self.flows.len()).filter(|&f| self.flows[f].1 == x).collect();
            let outs: Vec<usize> = (0..self.flows.len()).filter(|&f| self.flows[f].0 == x).collect();
            if let ([i], [o]) = (ins.as_slice(), outs.as_slice()) {
                let target = self.flows[*o].1;
                self.flows[*i].1 = target;
                self.flows.remove(*o);
                alive[x] = false;
            }
        }
        let mut index = vec![usize::MAX; self.kinds.len()];
        let mut nodes = Vec::new();
        let (mut tasks, mut gateways) = (0, 0);
        for (x, k) in self.kinds.into_iter().enumerate() {
            let Kind::Real(kind) = k else { continue };
            if !alive[x] {
                continue;
            }
            let id = match &kind {
                BpmnNodeKind::StartEvent => "start".to_string(),
                BpmnNodeKind::EndEvent => "end".to_string(),
                BpmnNodeKind::Task { .. } => {
                    tasks += 1;
                    format!("task_{tasks}")
                }
                _ => {
                    gateways += 1;
                    format!("gateway_{gateways}")
                }
            };
            index[x] = nodes.len();
            nodes.push(BpmnNode { id, kind });
        }
        let mut pairs: Vec<(usize, usize)> = self.flows.iter().map(|&(a, b)| (index[a], index[b])).collect();
        pairs.sort();
        let flows = pairs
            .into_iter()
            .enumerate()
            .map(|(k, (source, target))| SequenceFlow { id: format!("flow_{}", k + 1), source, target })
            .collect();
        BpmnGraph { nodes, flows }
    }
}

/// Direct structural mapping of the POWL tree onto BPMN elements, with
/// trivial gateways elided.
pub fn to_bpmn(model: &Node) -> Result<BpmnGraph, TranslationError> {
    to_bpmn_with(model, true)
}

pub fn to_bpmn_with(model: &Node, elide_gateways: bool) -> Result<BpmnGraph, TranslationError> {
    check_model(model)?;
    let mut b = Builder::default();
    let start = b.add(Kind::Real(BpmnNodeKind::StartEvent));
    let (a, z) = b.fragment(model);
    let end = b.add(Kind::Real(BpmnNodeKind::EndEvent));
    b.flow(start, a);
    b.flow(z, end);
    Ok(b.finish(elide_gateways))
}
