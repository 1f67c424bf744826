use std::fmt::Write;

use super::bpmn::{BpmnGraph, BpmnNodeKind, GatewayDirection};
use super::xml_escape;

const NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";

/// BPMN 2.0 XML without diagram interchange (no layout).
pub fn write_bpmn_xml(g: &BpmnGraph) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(s, "<definitions xmlns=\"{NS}\" id=\"definitions\" targetNamespace=\"{NS}\">");
    s.push_str("  <process id=\"process\" isExecutable=\"false\">\n");
    for (i, n) in g.nodes.iter().enumerate() {
        let (tag, extra) = match &n.kind {
            BpmnNodeKind::StartEvent => ("startEvent", String::new()),
            BpmnNodeKind::EndEvent => ("endEvent", String::new()),
            BpmnNodeKind::Task { name } => ("task", format!(" name=\"{}\"", xml_escape(name))),
            BpmnNodeKind::ExclusiveGateway { direction } => ("exclusiveGateway", direction_attr(*direction)),
            BpmnNodeKind::ParallelGateway { direction } => ("parallelGateway", direction_attr(*direction)),
        };
        let _ = writeln!(s, "    <{tag} id=\"{}\"{extra}>", n.id);
        for f in g.incoming(i) {
            let _ = writeln!(s, "      <incoming>{}</incoming>", f.id);
        }
        for f in g.outgoing(i) {
            let _ = writeln!(s, "      <outgoing>{}</outgoing>", f.id);
        }
        let _ = writeln!(s, "    </{tag}>");
    }
    for f in &g.flows {
        let _ = writeln!(
            s,
            "    <sequenceFlow id=\"{}\" sourceRef=\"{}\" targetRef=\"{}\"/>",
            f.id, g.nodes[f.source].id, g.nodes[f.target].id
        );
    }
    s.push_str("  </process>\n</definitions>\n");
    s
}

fn direction_attr(d: GatewayDirection) -> String {
    match d {
        GatewayDirection::Diverging => " gatewayDirection=\"Diverging\"".into(),
        GatewayDirection::Converging => " gatewayDirection=\"Converging\"".into(),
    }
}
