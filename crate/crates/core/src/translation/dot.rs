use std::fmt::Write;

use super::bpmn::{BpmnGraph, BpmnNodeKind};
use super::petri::{NetArc, PetriNet};

fn q(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn net_to_dot(net: &PetriNet) -> String {
    let mut s = String::from("digraph petri_net {\n  rankdir=LR;\n");
    for (p, id) in net.places.iter().enumerate() {
        let tokens = net.initial_marking.get(&p).map(|k| format!("{k}")).unwrap_or_default();
        let extra = if net.final_marking.contains_key(&p) { ", peripheries=2" } else { "" };
        let _ = writeln!(s, "  {} [shape=circle, label={}{extra}];", q(id), q(&tokens));
    }
    for t in &net.transitions {
        match &t.label {
            Some(l) => {
                let _ = writeln!(s, "  {} [shape=box, label={}];", q(&t.id), q(l));
            }
            None => {
                let _ = writeln!(s, "  {} [shape=box, style=filled, fillcolor=black, label=\"\", width=0.2];", q(&t.id));
            }
        }
    }
    for a in &net.arcs {
        let (x, y) = match *a {
            NetArc::PlaceToTransition(p, t) => (&net.places[p], &net.transitions[t].id),
            NetArc::TransitionToPlace(t, p) => (&net.transitions[t].id, &net.places[p]),
        };
        let _ = writeln!(s, "  {} -> {};", q(x), q(y));
    }
    s.push_str("}\n");
    s
}

pub fn bpmn_to_dot(g: &BpmnGraph) -> String {
    let mut s = String::from("digraph bpmn {\n  rankdir=LR;\n");
    for n in &g.nodes {
        let attrs = match &n.kind {
            BpmnNodeKind::StartEvent => "shape=circle, label=\"\"".to_string(),
            BpmnNodeKind::EndEvent => "shape=doublecircle, label=\"\"".to_string(),
            BpmnNodeKind::Task { name } => format!("shape=box, style=rounded, label={}", q(name)),
            BpmnNodeKind::ExclusiveGateway { .. } => "shape=diamond, label=\"X\"".to_string(),
            BpmnNodeKind::ParallelGateway { .. } => "shape=diamond, label=\"+\"".to_string(),
        };
        let _ = writeln!(s, "  {} [{attrs}];", q(&n.id));
    }
    for f in &g.flows {
        let _ = writeln!(s, "  {} -> {};", q(&g.nodes[f.source].id), q(&g.nodes[f.target].id));
    }
    s.push_str("}\n");
    s
}
