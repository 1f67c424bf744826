//! Diagnostics shared by model validation, the construction-script
//! interpreter and the generation loop.

use std::fmt;

use serde::{Deserialize, Serialize};

/// How a diagnostic affects model acceptance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    /// Blocks acceptance; must be fixed by the model author.
    Critical,
    /// Repairable automatically (see [`crate::powl::auto_fix_reuse`]).
    Adjustable,
    /// Informational; never blocks acceptance.
    Warning,
}

/// Stable diagnostic identifiers. Each code maps to exactly one severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagnosticCode {
    IrreflexivityViolation,
    OrderCycle,
    XorArity,
    EmptyPartialOrder,
    EmptyLabel,
    SubmodelReuse,
    UndefinedVariable,
    MissingFinalModel,
    ParseError,
    UnknownFunction,
    UnusedVariable,
    EmptyResponse,
    UnparseableEvaluation,
    OptimizationFailed,
}

impl DiagnosticCode {
    pub fn severity(self) -> Severity {
        use DiagnosticCode::*;
        match self {
            SubmodelReuse => Severity::Adjustable,
            UnusedVariable => Severity::Warning,
            IrreflexivityViolation | OrderCycle | XorArity | EmptyPartialOrder | EmptyLabel
            | UndefinedVariable | MissingFinalModel | ParseError | UnknownFunction
            | EmptyResponse | UnparseableEvaluation | OptimizationFailed => Severity::Critical,
        }
    }

    pub fn as_str(self) -> &'static str {
        use DiagnosticCode::*;
        match self {
            IrreflexivityViolation => "IRREFLEXIVITY_VIOLATION",
            OrderCycle => "ORDER_CYCLE",
            XorArity => "XOR_ARITY",
            EmptyPartialOrder => "EMPTY_PARTIAL_ORDER",
            EmptyLabel => "EMPTY_LABEL",
            SubmodelReuse => "SUBMODEL_REUSE",
            UndefinedVariable => "UNDEFINED_VARIABLE",
            MissingFinalModel => "MISSING_FINAL_MODEL",
            ParseError => "PARSE_ERROR",
            UnknownFunction => "UNKNOWN_FUNCTION",
            UnusedVariable => "UNUSED_VARIABLE",
            EmptyResponse => "EMPTY_RESPONSE",
            UnparseableEvaluation => "UNPARSEABLE_EVALUATION",
            OptimizationFailed => "OPTIMIZATION_FAILED",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    /// Human-readable text; this is what gets fed back to the LLM.
    pub message: String,
    /// Tree path (`root.nodes[2]`) or source location (`line 7`).
    pub path: String,
}

impl Diagnostic {
    pub fn new(code: DiagnosticCode, message: impl Into<String>, path: impl Into<String>) -> Self {
        Diagnostic { severity: code.severity(), code, message: message.into(), path: path.into() }
    }

    pub fn is_critical(&self) -> bool {
        self.severity == Severity::Critical
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}: {}", self.code, self.message)
        } else {
            write!(f, "{} at {}: {}", self.code, self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_diagnostics(diagnostics: Vec<Diagnostic>) -> Self {
        ValidationReport { diagnostics }
    }

    pub fn push(&mut self, d: Diagnostic) {
        self.diagnostics.push(d);
    }

    pub fn extend(&mut self, other: impl IntoIterator<Item = Diagnostic>) {
        self.diagnostics.extend(other);
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn into_diagnostics(self) -> Vec<Diagnostic> {
        self.diagnostics
    }

    /// True iff no critical diagnostic is present.
    pub fn is_valid(&self) -> bool {
        !self.has_severity(Severity::Critical)
    }

    pub fn has_severity(&self, s: Severity) -> bool {
        self.diagnostics.iter().any(|d| d.severity == s)
    }

    pub fn has_code(&self, code: DiagnosticCode) -> bool {
        self.diagnostics.iter().any(|d| d.code == code)
    }

    pub fn count_code(&self, code: DiagnosticCode) -> usize {
        self.diagnostics.iter().filter(|d| d.code == code).count()
    }

    pub fn is_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }
}
