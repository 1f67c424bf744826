//! The construction language: a closed grammar over the `ModelGenerator`
//! calls. Scripts are parsed and interpreted, never executed.

pub mod ast;
mod eval;
mod lexer;
mod parser;
mod render;

pub use ast::{Expr, ScriptAst, Statement, StatementKind};
pub use eval::{evaluate, Evaluated, FINAL_MODEL};
pub use parser::parse;
pub use render::render;

use crate::diagnostics::{Diagnostic, DiagnosticCode, ValidationReport};

/// Pulls the first fenced code block out of a chat response, or the whole
/// trimmed response when there is no fence.
pub fn extract_code(response: &str) -> Result<String, Diagnostic> {
    let mut lines = response.lines();
    let mut body = None;
    while let Some(line) = lines.next() {
        let t = line.trim();
        if t.starts_with("```") && t[3..].trim().chars().all(|c| c.is_ascii_alphanumeric()) {
            let mut block = Vec::new();
            for l in lines.by_ref() {
                if let Some(pos) = l.find("```") {
                    if !l[..pos].trim().is_empty() {
                        block.push(&l[..pos]);
                    }
                    break;
                }
                block.push(l);
            }
            body = Some(block.join("\n"));
            break;
        }
    }
    let code = body.unwrap_or_else(|| response.to_string()).trim().to_string();
    if code.is_empty() {
        return Err(Diagnostic::new(
            DiagnosticCode::EmptyResponse,
            "the response contained no code; answer with a single python code block",
            "",
        ));
    }
    Ok(code)
}

/// extract_code, parse and evaluate in one step.
pub fn interpret(response: &str) -> Result<Evaluated, ValidationReport> {
    let one = |d| ValidationReport::from_diagnostics(vec![d]);
    let code = extract_code(response).map_err(one)?;
    let ast = parse(&code).map_err(one)?;
    evaluate(&ast)
}
