use std::collections::HashMap;

use super::ast::{Expr, ScriptAst, StatementKind};
use crate::diagnostics::{Diagnostic, DiagnosticCode, ValidationReport};
use crate::powl::{close_all, deep_copy, validate, ModelError, Node, PowlNode};

pub const FINAL_MODEL: &str = "final_model";

/// A successfully interpreted script. `report` holds the non-critical
/// diagnostics (adjustable reuse, unused variables). Partial orders in
/// `model` are transitively closed.
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub model: Node,
    pub report: ValidationReport,
}

struct Binding {
    /// `None` when the defining statement failed.
    node: Option<Node>,
    line: usize,
    consumed: bool,
    referenced: bool,
}

struct Interp {
    env: HashMap<String, Binding>,
    order: Vec<String>,
    report: ValidationReport,
    line: usize,
}

/// Interprets the statements in order. Critical problems are returned as
/// `Err` with every diagnostic collected so far.
pub fn evaluate(ast: &ScriptAst) -> Result<Evaluated, ValidationReport> {
    let mut it = Interp { env: HashMap::new(), order: Vec::new(), report: ValidationReport::new(), line: 0 };
    for st in &ast.statements {
        it.line = st.line;
        if let StatementKind::Assign { target, value } = &st.kind {
            let node = it.expr(value, true);
            it.order.push(target.clone());
            it.env.insert(target.clone(), Binding { node, line: st.line, consumed: false, referenced: false });
        }
    }

    let final_model = match it.env.get(FINAL_MODEL) {
        None => {
            it.report.push(Diagnostic::new(
                DiagnosticCode::MissingFinalModel,
                format!("no variable named '{FINAL_MODEL}' was defined; save the final model in '{FINAL_MODEL}'"),
                "",
            ));
            None
        }
        Some(b) => b.node.clone(),
    };

    for name in &it.order {
        let b = &it.env[name];
        if name != FINAL_MODEL && !b.consumed && !b.referenced {
            it.report.push(Diagnostic::new(
                DiagnosticCode::UnusedVariable,
                format!("variable '{name}' is defined but never used in the final model"),
                format!("line {}", b.line),
            ));
        }
    }

    let mut report = it.report;
    let Some(model) = final_model else {
        return Err(report);
    };
    if !report.is_valid() {
        return Err(report);
    }
    let dsl_found_reuse = report.has_code(DiagnosticCode::SubmodelReuse);
    report.extend(
        validate(&model)
            .into_diagnostics()
            .into_iter()
            .filter(|d| !(dsl_found_reuse && d.code == DiagnosticCode::SubmodelReuse)),
    );
    if !report.is_valid() {
        return Err(report);
    }
    match close_all(&model) {
        Ok(model) => Ok(Evaluated { model, report }),
        Err(e) => {
            report.push(Diagnostic::new(e.code(), e.to_string(), "root"));
            Err(report)
        }
    }
}

impl Interp {
    fn diag(&mut self, code: DiagnosticCode, message: String) {
        let path = format!("line {}", self.line);
        self.report.push(Diagnostic::new(code, message, path));
    }

    fn model_error(&mut self, e: ModelError) {
        let msg = format!("{e} (line {})", self.line);
        self.diag(e.code(), msg);
    }

    fn var(&mut self, name: &str, consume: bool) -> Option<Node> {
        let line = self.line;
        let Some(b) = self.env.get_mut(name) else {
            self.diag(
                DiagnosticCode::UndefinedVariable,
                format!("variable '{name}' is used before it is defined (line {line})"),
            );
            return None;
        };
        b.referenced = true;
        let reused = consume && b.consumed;
        if consume {
            b.consumed = true;
        }
        let node = b.node.clone();
        if reused {
            self.diag(
                DiagnosticCode::SubmodelReuse,
                format!(
                    "submodel '{name}' is used more than once (line {line}); every submodel may \
                     appear only once in the model, use {name}.copy() to create another instance"
                ),
            );
        }
        node
    }

    fn expr(&mut self, e: &Expr, consume: bool) -> Option<Node> {
        match e {
            Expr::None => Some(PowlNode::silent()),
            Expr::Var(name) => self.var(name, consume),
            Expr::Copy(name) => self.var(name, false).map(|n| deep_copy(&n)),
            Expr::Activity(label) => match PowlNode::activity(label) {
                Ok(n) => Some(n),
                Err(err) => {
                    self.model_error(err);
                    None
                }
            },
            Expr::Xor(args) => {
                let nodes: Vec<Option<Node>> = args.iter().map(|a| self.expr(a, true)).collect();
                let nodes: Vec<Node> = nodes.into_iter().collect::<Option<_>>()?;
                match PowlNode::xor(nodes) {
                    Ok(n) => Some(n),
                    Err(err) => {
                        self.model_error(err);
                        None
                    }
                }
            }
            Expr::Loop { body, redo } => {
                let b = self.expr(body, true);
                let r = self.expr(redo, true);
                Some(PowlNode::looped(b?, r?))
            }
            Expr::PartialOrder(tuples) => self.partial_order(tuples),
        }
    }

    fn partial_order(&mut self, tuples: &[Vec<Expr>]) -> Option<Node> {
        let mut nodes: Vec<Option<Node>> = Vec::new();
        let mut by_var: HashMap<&str, usize> = HashMap::new();
        let mut edges = Vec::new();
        for tuple in tuples {
            let mut idx = Vec::with_capacity(tuple.len());
            for item in tuple {
                let i = match item {
                    Expr::Var(name) => match by_var.get(name.as_str()) {
                        Some(&i) => i,
                        None => {
                            nodes.push(self.var(name, true));
                            by_var.insert(name, nodes.len() - 1);
                            nodes.len() - 1
                        }
                    },
                    other => {
                        nodes.push(self.expr(other, true));
                        nodes.len() - 1
                    }
                };
                idx.push(i);
            }
            edges.extend(idx.windows(2).map(|w| (w[0], w[1])));
        }
        let nodes: Vec<Node> = nodes.into_iter().collect::<Option<_>>()?;
        match PowlNode::partial_order(nodes, edges) {
            Ok(n) => Some(n),
            Err(err) => {
                self.model_error(err);
                None
            }
        }
    }
}
