//! Petri-net and BPMN views of a model, and their document formats.

mod bpmn;
mod bpmn_xml;
mod dot;
mod petri;
mod pnml;

pub use bpmn::{
    to_bpmn, to_bpmn_with, BpmnGraph, BpmnNode, BpmnNodeKind, GatewayCounts, GatewayDirection, SequenceFlow,
};
pub use bpmn_xml::write_bpmn_xml;
pub use dot::{bpmn_to_dot, net_to_dot};
pub use petri::{to_petri_net, Marking, NetArc, PetriNet, Transition};
pub use pnml::{read_pnml, write_pnml};

use thiserror::Error;

use crate::powl::{validate, Node};

#[derive(Debug, Error, PartialEq)]
pub enum TranslationError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("malformed document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Bpmn,
    Pnml,
    Script,
    Dot,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bpmn" => Some(Self::Bpmn),
            "pnml" => Some(Self::Pnml),
            "script" => Some(Self::Script),
            "dot" => Some(Self::Dot),
            _ => None,
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            Self::Bpmn | Self::Pnml => "application/xml; charset=utf-8",
            Self::Script => "text/x-python; charset=utf-8",
            Self::Dot => "text/vnd.graphviz; charset=utf-8",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Bpmn => "bpmn",
            Self::Pnml => "pnml",
            Self::Script => "py",
            Self::Dot => "dot",
        }
    }

    /// The document for `model`. DOT shows the Petri net.
    pub fn render(self, model: &Node) -> Result<String, TranslationError> {
        Ok(match self {
            Self::Bpmn => write_bpmn_xml(&to_bpmn(model)?),
            Self::Pnml => write_pnml(&to_petri_net(model)?),
            Self::Script => crate::dsl::render(model),
            Self::Dot => net_to_dot(&to_petri_net(model)?),
        })
    }
}

pub(crate) fn check_model(model: &Node) -> Result<(), TranslationError> {
    let report = validate(model);
    match report.diagnostics().iter().find(|d| d.is_critical()) {
        Some(d) => Err(TranslationError::InvalidModel(d.message.clone())),
        None => Ok(()),
    }
}

pub(crate) fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}
