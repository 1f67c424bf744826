use std::collections::HashSet;
use std::sync::Arc;

use super::{order, Node, PowlNode};
use crate::diagnostics::{Diagnostic, DiagnosticCode, ValidationReport};

/// Reports every structural problem in `model`. Never fails.
///
/// Checks irreflexivity and acyclicity of each partial order (cycles are
/// found on the transitive closure) and node reuse across tree positions.
pub fn validate(model: &Node) -> ValidationReport {
    let mut report = ValidationReport::new();
    let mut seen = HashSet::new();
    walk(model, "root", &mut seen, &mut report);
    report
}

fn walk(node: &Node, path: &str, seen: &mut HashSet<usize>, report: &mut ValidationReport) {
    if !seen.insert(Arc::as_ptr(node) as usize) {
        let what = match &**node {
            PowlNode::Activity(l) => format!("activity '{l}'"),
            other => format!("a {} submodel", other.kind_name()),
        };
        report.push(Diagnostic::new(
            DiagnosticCode::SubmodelReuse,
            format!(
                "{what} is used at more than one position of the model; \
                 each submodel may appear only once (use .copy() to create another instance)"
            ),
            path,
        ));
        return;
    }
    match &**node {
        PowlNode::Activity(_) | PowlNode::Silent => {}
        PowlNode::Xor(children) => {
            if children.len() < 2 {
                report.push(Diagnostic::new(
                    DiagnosticCode::XorArity,
                    format!("xor requires at least 2 submodels but has {}", children.len()),
                    path,
                ));
            }
            for (i, ch) in children.iter().enumerate() {
                walk(ch, &format!("{path}.children[{i}]"), seen, report);
            }
        }
        PowlNode::Loop { body, redo } => {
            walk(body, &format!("{path}.do"), seen, report);
            walk(redo, &format!("{path}.redo"), seen, report);
        }
        PowlNode::PartialOrder(po) => {
            for &(i, j) in po.edges() {
                if i == j {
                    report.push(Diagnostic::new(
                        DiagnosticCode::IrreflexivityViolation,
                        format!(
                            "partial order contains the dependency ({i}, {i}); \
                             a submodel cannot precede itself"
                        ),
                        path,
                    ));
                }
            }
            if let Some(i) = order::find_cycle(po.len(), po.edges()) {
                report.push(Diagnostic::new(
                    DiagnosticCode::OrderCycle,
                    format!(
                        "the dependencies of this partial order form a cycle through node {i}; \
                         partial orders must be acyclic"
                    ),
                    path,
                ));
            }
            for (i, ch) in po.nodes().iter().enumerate() {
                walk(ch, &format!("{path}.nodes[{i}]"), seen, report);
            }
        }
    }
}
