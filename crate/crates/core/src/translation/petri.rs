use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::{check_model, TranslationError};
use crate::powl::{order, Node, PowlNode};

pub type Marking = BTreeMap<usize, u32>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub id: String,
    /// `None` for silent transitions.
    pub label: Option<String>,
}

/// Arc between a place and a transition, by index. Weights are always 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum NetArc {
    PlaceToTransition(usize, usize),
    TransitionToPlace(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PetriNet {
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    pub arcs: Vec<NetArc>,
    pub initial_marking: Marking,
    pub final_marking: Marking,
}

impl PetriNet {
    pub fn preset(&self, t: usize) -> Vec<usize> {
        self.arcs
            .iter()
            .filter_map(|a| match *a {
                NetArc::PlaceToTransition(p, t2) if t2 == t => Some(p),
                _ => None,
            })
            .collect()
    }

    pub fn postset(&self, t: usize) -> Vec<usize> {
        self.arcs
            .iter()
            .filter_map(|a| match *a {
                NetArc::TransitionToPlace(t2, p) if t2 == t => Some(p),
                _ => None,
            })
            .collect()
    }

    /// Transitions producing into place `p`.
    pub fn place_preset(&self, p: usize) -> Vec<usize> {
        self.arcs
            .iter()
            .filter_map(|a| match *a {
                NetArc::TransitionToPlace(t, p2) if p2 == p => Some(t),
                _ => None,
            })
            .collect()
    }

    /// Transitions consuming from place `p`.
    pub fn place_postset(&self, p: usize) -> Vec<usize> {
        self.arcs
            .iter()
            .filter_map(|a| match *a {
                NetArc::PlaceToTransition(p2, t) if p2 == p => Some(t),
                _ => None,
            })
            .collect()
    }

    pub fn visible_labels(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.transitions.iter().filter_map(|t| t.label.as_deref()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn silent_count(&self) -> usize {
        self.transitions.iter().filter(|t| t.label.is_none()).count()
    }

    /// Fuses series places around silent transitions: a τ with preset {p}
    /// and postset {q} is removed and q merged into p whenever p feeds only
    /// that τ and q is fed only by it. The visible language is unchanged.
    pub fn reduce_silent(&self) -> PetriNet {
        let mut net = self.clone();
        loop {
            let candidate = (0..net.transitions.len()).find_map(|t| {
                if net.transitions[t].label.is_some() {
                    return None;
                }
                let (pre, post) = (net.preset(t), net.postset(t));
                if pre.len() != 1 || post.len() != 1 || pre[0] == post[0] {
                    return None;
                }
                let (p, q) = (pre[0], post[0]);
                (net.place_postset(p) == [t] && net.place_preset(q) == [t]).then_some((t, p, q))
            });
            let Some((t, p, q)) = candidate else { return net };
            net.merge(t, p, q);
        }
    }

    fn merge(&mut self, t: usize, p: usize, q: usize) {
        let place_map = |x: usize| {
            let x = if x == q { p } else { x };
            if x > q { x - 1 } else { x }
        };
        let trans_map = |x: usize| if x > t { x - 1 } else { x };
        self.arcs = self
            .arcs
            .iter()
            .filter(|a| !matches!(a, NetArc::PlaceToTransition(_, x) | NetArc::TransitionToPlace(x, _) if *x == t))
            .map(|a| match *a {
                NetArc::PlaceToTransition(pl, tr) => NetArc::PlaceToTransition(place_map(pl), trans_map(tr)),
                NetArc::TransitionToPlace(tr, pl) => NetArc::TransitionToPlace(trans_map(tr), place_map(pl)),
            })
            .collect();
        let remap = |m: &Marking| {
            let mut out = Marking::new();
            for (&pl, &k) in m {
                *out.entry(place_map(pl)).or_default() += k;
            }
            out
        };
        self.initial_marking = remap(&self.initial_marking);
        self.final_marking = remap(&self.final_marking);
        self.places.remove(q);
        self.transitions.remove(t);
    }

    /// Checks the workflow-net shape: one source place holding the initial
    /// token, one sink place holding the final token, and every node on a
    /// path from source to sink.
    pub fn check_workflow(&self) -> Result<(), String> {
        let np = self.places.len();
        let nt = self.transitions.len();
        let sources: Vec<usize> = (0..np).filter(|&p| self.place_preset(p).is_empty()).collect();
        let sinks: Vec<usize> = (0..np).filter(|&p| self.place_postset(p).is_empty()).collect();
        let ([source], [sink]) = (sources.as_slice(), sinks.as_slice()) else {
            return Err(format!("expected one source and one sink, found {} and {}", sources.len(), sinks.len()));
        };
        if self.initial_marking != Marking::from([(*source, 1)]) {
            return Err("initial marking is not one token on the source".into());
        }
        if self.final_marking != Marking::from([(*sink, 1)]) {
            return Err("final marking is not one token on the sink".into());
        }
        // Nodes 0..np are places, np.. are transitions.
        let mut fwd = vec![Vec::new(); np + nt];
        let mut bwd = vec![Vec::new(); np + nt];
        for a in &self.arcs {
            let (x, y) = match *a {
                NetArc::PlaceToTransition(p, t) => (p, np + t),
                NetArc::TransitionToPlace(t, p) => (np + t, p),
            };
            fwd[x].push(y);
            bwd[y].push(x);
        }
        let reach = |start: usize, adj: &[Vec<usize>]| {
            let mut seen = vec![false; np + nt];
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
            seen
        };
        let from_source = reach(*source, &fwd);
        let to_sink = reach(*sink, &bwd);
        if let Some(x) = (0..np + nt).find(|&x| !(from_source[x] && to_sink[x])) {
            let id = if x < np { &self.places[x] } else { &self.transitions[x - np].id };
            return Err(format!("node {id} is not on a path from source to sink"));
        }
        Ok(())
    }
}

#[derive(Default)]
struct Builder {
    places: Vec<String>,
    transitions: Vec<Transition>,
    arcs: Vec<NetArc>,
}

impl Builder {
    fn place(&mut self) -> usize {
        self.places.push(format!("p{}", self.places.len()));
        self.places.len() - 1
    }

    fn transition(&mut self, label: Option<&str>, pre: &[usize], post: &[usize]) {
        let t = self.transitions.len();
        self.transitions.push(Transition { id: format!("t{t}"), label: label.map(str::to_string) });
        self.arcs.extend(pre.iter().map(|&p| NetArc::PlaceToTransition(p, t)));
        self.arcs.extend(post.iter().map(|&p| NetArc::TransitionToPlace(t, p)));
    }

    fn fragment(&mut self, node: &Node, entry: usize, exit: usize) {
        match &**node {
            PowlNode::Activity(l) => self.transition(Some(l.as_str()), &[entry], &[exit]),
            PowlNode::Silent => self.transition(None, &[entry], &[exit]),
            PowlNode::Xor(children) => {
                for c in children {
                    self.fragment(c, entry, exit);
                }
            }
            PowlNode::Loop { body, redo } => {
                let (p1, p2) = (self.place(), self.place());
                self.transition(None, &[entry], &[p1]);
                self.fragment(body, p1, p2);
                self.fragment(redo, p2, p1);
                self.transition(None, &[p2], &[exit]);
            }
            PowlNode::PartialOrder(po) => {
                let n = po.len();
                let red = order::reduction(n, po.edges());
                let ins: Vec<usize> = (0..n).map(|_| self.place()).collect();
                let outs: Vec<usize> = (0..n).map(|_| self.place()).collect();
                let buffers: BTreeMap<(usize, usize), usize> = red.iter().map(|&e| (e, self.place())).collect();
                let minimal: Vec<usize> = (0..n).filter(|&j| !red.iter().any(|e| e.1 == j)).map(|j| ins[j]).collect();
                let maximal: Vec<usize> = (0..n).filter(|&i| !red.iter().any(|e| e.0 == i)).map(|i| outs[i]).collect();
                self.transition(None, &[entry], &minimal);
                for (i, child) in po.nodes().iter().enumerate() {
                    let incoming: Vec<usize> = buffers.iter().filter(|(e, _)| e.1 == i).map(|(_, &b)| b).collect();
                    if !incoming.is_empty() {
                        self.transition(None, &incoming, &[ins[i]]);
                    }
                    self.fragment(child, ins[i], outs[i]);
                    let outgoing: Vec<usize> = buffers.iter().filter(|(e, _)| e.0 == i).map(|(_, &b)| b).collect();
                    if !outgoing.is_empty() {
                        self.transition(None, &[outs[i]], &outgoing);
                    }
                }
                self.transition(None, &maximal, &[exit]);
            }
        }
    }
}

/// Place-bordered translation into a workflow net. Silent transitions are
/// kept; see [`PetriNet::reduce_silent`].
pub fn to_petri_net(model: &Node) -> Result<PetriNet, TranslationError> {
    check_model(model)?;
    let mut b = Builder::default();
    let source = b.place();
    let sink = b.place();
    b.fragment(model, source, sink);
    Ok(PetriNet {
        places: b.places,
        transitions: b.transitions,
        arcs: b.arcs,
        initial_marking: Marking::from([(source, 1)]),
        final_marking: Marking::from([(sink, 1)]),
    })
}
