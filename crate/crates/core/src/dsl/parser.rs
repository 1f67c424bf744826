use std::collections::HashSet;

use super::ast::{Expr, ScriptAst, Statement, StatementKind};
use super::lexer::{line_text, parse_error, tokenize, Tok, Token};
use crate::diagnostics::{Diagnostic, DiagnosticCode};

const GENERATOR_CLASS: &str = "ModelGenerator";
const DEFAULT_GENERATOR: &str = "gen";
const RESERVED: &[&str] = &["None", "True", "False", GENERATOR_CLASS];

/// Parses a construction script. Stops at the first error; the returned
/// diagnostic quotes the offending line.
pub fn parse(source: &str) -> Result<ScriptAst, Diagnostic> {
    let tokens = tokenize(source)?;
    let mut p = Parser { source, tokens, pos: 0, generator: None, bound: HashSet::new() };
    let mut statements = Vec::new();
    while !p.at_end() {
        if p.eat(&Tok::Newline) {
            continue;
        }
        statements.push(p.statement()?);
    }
    Ok(ScriptAst { statements })
}

struct Parser<'a> {
    source: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    generator: Option<String>,
    bound: HashSet<String>,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + k).map(|t| &t.tok)
    }

    fn line(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| t.line)
            .unwrap_or(1)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, what: &str) -> Diagnostic {
        parse_error(self.source, self.line(), what)
    }

    fn unknown(&self, name: &str) -> Diagnostic {
        let line = self.line();
        Diagnostic::new(
            DiagnosticCode::UnknownFunction,
            format!(
                "unknown function '{name}'; only activity, xor, loop, partial_order and copy \
                 are available (line {line}: `{}`)",
                line_text(self.source, line)
            ),
            format!("line {line}"),
        )
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), Diagnostic> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.err(&format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Option<String> {
        if let Some(Tok::Ident(s)) = self.peek() {
            let s = s.clone();
            self.pos += 1;
            Some(s)
        } else {
            None
        }
    }

    fn end_of_statement(&mut self) -> Result<(), Diagnostic> {
        if self.at_end() || self.eat(&Tok::Newline) {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }

    fn is_generator(&self, name: &str) -> bool {
        match &self.generator {
            Some(g) => g == name,
            None => name == DEFAULT_GENERATOR,
        }
    }

    fn statement(&mut self) -> Result<Statement, Diagnostic> {
        let line = self.line();
        let Some(first) = self.ident() else {
            return Err(self.err("expected an assignment"));
        };
        if first == "from" {
            let module = self.dotted()?;
            if self.ident().as_deref() != Some("import") {
                return Err(self.err("expected `import`"));
            }
            let name = self.ident().unwrap_or_default();
            if name != GENERATOR_CLASS {
                return Err(parse_error(
                    self.source,
                    line,
                    &format!("only `{GENERATOR_CLASS}` may be imported"),
                ));
            }
            self.end_of_statement()?;
            return Ok(Statement { line, kind: StatementKind::ImportHeader { module } });
        }
        if first == "import" {
            return Err(parse_error(
                self.source,
                line,
                &format!("imports are not allowed; only `{GENERATOR_CLASS}` is available"),
            ));
        }
        match self.peek() {
            Some(Tok::Eq) => {}
            Some(Tok::LParen) => return Err(self.unknown(&first)),
            Some(Tok::Dot) => {
                if let Some(Tok::Ident(m)) = self.peek_at(1) {
                    let name = if self.is_generator(&first) { m.clone() } else { format!("{first}.{m}") };
                    if !matches!(name.as_str(), "activity" | "xor" | "loop" | "partial_order") {
                        return Err(self.unknown(&name));
                    }
                }
                return Err(self.err("expected an assignment; the result of a call must be stored in a variable"));
            }
            _ => return Err(self.err("expected an assignment")),
        }
        self.pos += 1; // '='
        if RESERVED.contains(&first.as_str()) {
            return Err(parse_error(self.source, line, &format!("cannot assign to `{first}`")));
        }
        if !self.bound.insert(first.clone()) {
            return Err(parse_error(
                self.source,
                line,
                &format!("variable '{first}' is assigned more than once; every variable may be bound only once"),
            ));
        }
        if self.peek() == Some(&Tok::Ident(GENERATOR_CLASS.into())) {
            self.pos += 1;
            self.expect(&Tok::LParen, "`(`")?;
            self.expect(&Tok::RParen, "`)`")?;
            self.end_of_statement()?;
            self.generator = Some(first.clone());
            return Ok(Statement { line, kind: StatementKind::GeneratorInit { var: first } });
        }
        let value = self.expr()?;
        self.end_of_statement()?;
        Ok(Statement { line, kind: StatementKind::Assign { target: first, value } })
    }

    fn dotted(&mut self) -> Result<String, Diagnostic> {
        let mut s = self.ident().ok_or_else(|| self.err("expected a module name"))?;
        while self.eat(&Tok::Dot) {
            s.push('.');
            s.push_str(&self.ident().ok_or_else(|| self.err("expected a module name"))?);
        }
        Ok(s)
    }

    fn expr(&mut self) -> Result<Expr, Diagnostic> {
        let Some(name) = self.ident() else {
            return Err(match self.peek() {
                Some(Tok::Str(_)) => self.err("a string is not a model; wrap labels in activity(...)"),
                _ => self.err("expected a model expression"),
            });
        };
        if name == "None" {
            return Ok(Expr::None);
        }
        match self.peek() {
            Some(Tok::LParen) => Err(self.unknown(&name)),
            Some(Tok::Dot) => {
                self.pos += 1;
                let method = self.ident().ok_or_else(|| self.err("expected a method name"))?;
                if self.peek() != Some(&Tok::LParen) {
                    return Err(self.unknown(&format!("{name}.{method}")));
                }
                self.pos += 1;
                if self.is_generator(&name) {
                    match method.as_str() {
                        "activity" => self.activity_args(),
                        "xor" => self.xor_args(),
                        "loop" => self.loop_args(),
                        "partial_order" => self.partial_order_args(),
                        _ => Err(self.unknown(&method)),
                    }
                } else if method == "copy" {
                    self.expect(&Tok::RParen, "`)` (copy takes no arguments)")?;
                    Ok(Expr::Copy(name))
                } else {
                    Err(self.unknown(&format!("{name}.{method}")))
                }
            }
            _ => Ok(Expr::Var(name)),
        }
    }

    /// Optional `name =` prefix inside a call.
    fn keyword(&mut self) -> Option<String> {
        if let (Some(Tok::Ident(k)), Some(Tok::Eq)) = (self.peek(), self.peek_at(1)) {
            let k = k.clone();
            self.pos += 2;
            Some(k)
        } else {
            None
        }
    }

    fn activity_args(&mut self) -> Result<Expr, Diagnostic> {
        if let Some(k) = self.keyword() {
            if k != "label" {
                return Err(self.err(&format!("activity has no parameter `{k}`")));
            }
        }
        let label = match self.peek() {
            Some(Tok::Str(s)) => s.clone(),
            _ => return Err(self.err("activity takes exactly one string argument")),
        };
        self.pos += 1;
        self.eat(&Tok::Comma);
        self.expect(&Tok::RParen, "`)` after the activity label")?;
        Ok(Expr::Activity(label))
    }

    fn xor_args(&mut self) -> Result<Expr, Diagnostic> {
        let mut args = Vec::new();
        while !self.eat(&Tok::RParen) {
            if self.keyword().is_some() {
                return Err(self.err("xor takes positional submodels only"));
            }
            args.push(self.expr()?);
            if !self.eat(&Tok::Comma) {
                self.expect(&Tok::RParen, "`,` or `)` in xor arguments")?;
                break;
            }
        }
        Ok(Expr::Xor(args))
    }

    fn loop_args(&mut self) -> Result<Expr, Diagnostic> {
        let mut body = None;
        let mut redo = None;
        let mut positional = 0;
        while !self.eat(&Tok::RParen) {
            let slot = match self.keyword().as_deref() {
                Some("do") => 0,
                Some("redo") => 1,
                Some(k) => return Err(self.err(&format!("loop has no parameter `{k}`"))),
                None => {
                    positional += 1;
                    positional - 1
                }
            };
            let e = self.expr()?;
            let target = match slot {
                0 => &mut body,
                1 => &mut redo,
                _ => return Err(self.err("loop takes exactly 2 arguments (do, redo)")),
            };
            if target.replace(e).is_some() {
                return Err(self.err("loop argument given twice"));
            }
            if !self.eat(&Tok::Comma) {
                self.expect(&Tok::RParen, "`,` or `)` in loop arguments")?;
                break;
            }
        }
        match (body, redo) {
            (Some(b), Some(r)) => Ok(Expr::Loop { body: Box::new(b), redo: Box::new(r) }),
            _ => Err(self.err("loop requires both `do` and `redo` arguments")),
        }
    }

    fn partial_order_args(&mut self) -> Result<Expr, Diagnostic> {
        if let Some(k) = self.keyword() {
            if k != "dependencies" {
                return Err(self.err(&format!("partial_order has no parameter `{k}`")));
            }
        }
        self.expect(&Tok::LBracket, "`[` starting the dependency list")?;
        let mut tuples = Vec::new();
        while !self.eat(&Tok::RBracket) {
            if self.eat(&Tok::LParen) {
                let mut items = Vec::new();
                while !self.eat(&Tok::RParen) {
                    items.push(self.expr()?);
                    if !self.eat(&Tok::Comma) {
                        self.expect(&Tok::RParen, "`,` or `)` in a dependency tuple")?;
                        break;
                    }
                }
                if items.is_empty() {
                    return Err(self.err("empty dependency tuple"));
                }
                tuples.push(items);
            } else {
                tuples.push(vec![self.expr()?]);
            }
            if !self.eat(&Tok::Comma) {
                self.expect(&Tok::RBracket, "`,` or `]` in the dependency list")?;
                break;
            }
        }
        self.eat(&Tok::Comma);
        self.expect(&Tok::RParen, "`)` closing partial_order")?;
        Ok(Expr::PartialOrder(tuples))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_statement_script() {
        let ast = parse("x = gen.activity('A')\nfinal_model = x").unwrap();
        assert_eq!(ast.statements.len(), 2);
        assert_eq!(
            ast.statements[1].kind,
            StatementKind::Assign { target: "final_model".into(), value: Expr::Var("x".into()) }
        );
    }

    #[test]
    fn unknown_generator_method() {
        let d = parse("final_model = gen.sequence(a, b)").unwrap_err();
        assert_eq!(d.code, DiagnosticCode::UnknownFunction);
        assert!(d.message.contains("'sequence'"));
        assert!(d.message.contains("gen.sequence(a, b)"));
    }

    #[test]
    fn foreign_calls_are_unknown_functions() {
        for src in [
            "x = os.system('rm -rf /')",
            "print(final_model)",
            "x = eval('1')",
            "x = gen.activity('A')\ny = x.delete()",
            "__import__('os')",
        ] {
            let d = parse(src).unwrap_err();
            assert_eq!(d.code, DiagnosticCode::UnknownFunction, "{src}");
        }
    }

    #[test]
    fn rebinding_is_a_parse_error() {
        let d = parse("a = gen.activity('A')\na = gen.activity('B')").unwrap_err();
        assert_eq!(d.code, DiagnosticCode::ParseError);
        assert!(d.message.contains("line 2"));
    }

    #[test]
    fn other_imports_are_rejected() {
        assert_eq!(parse("import os").unwrap_err().code, DiagnosticCode::ParseError);
        assert_eq!(parse("from os import system").unwrap_err().code, DiagnosticCode::ParseError);
        assert!(parse("from utils.model_generation import ModelGenerator\ngen = ModelGenerator()").is_ok());
    }

    #[test]
    fn noisy_keyword_formatting() {
        let src = "a = gen.activity( label = \"A\" )\nb = gen.activity('B')\n\
                   l = gen.loop(\n  do = a ,\n  redo = None,\n)\n\
                   final_model = gen.partial_order(dependencies = [ (l, b), ])";
        let ast = parse(src).unwrap();
        assert_eq!(ast.call_counts(), (2, 0, 1, 1));
    }

    #[test]
    fn singleton_and_bare_dependencies() {
        let ast = parse("final_model = gen.partial_order(dependencies=[(a,), b, (c)])").unwrap();
        let (_, Expr::PartialOrder(t)) = ast.assignments().next().unwrap() else { panic!() };
        assert_eq!(t.len(), 3);
        assert!(t.iter().all(|x| x.len() == 1));
    }

    #[test]
    fn custom_generator_name() {
        let ast = parse("g = ModelGenerator()\nfinal_model = g.activity('A')").unwrap();
        assert!(matches!(ast.statements[0].kind, StatementKind::GeneratorInit { .. }));
        assert_eq!(parse("g = ModelGenerator()\nfinal_model = gen.activity('A')").unwrap_err().code,
            DiagnosticCode::UnknownFunction);
    }

    #[test]
    fn arithmetic_is_not_part_of_the_language() {
        assert_eq!(parse("x = 1 + 2").unwrap_err().code, DiagnosticCode::ParseError);
        assert_eq!(parse("for x in y:\n  pass").unwrap_err().code, DiagnosticCode::ParseError);
    }
}
