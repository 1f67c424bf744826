/// Parsed construction script: an ordered list of statements.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptAst {
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    /// 1-based line where the statement starts.
    pub line: usize,
    pub kind: StatementKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatementKind {
    /// `from <module> import ModelGenerator`
    ImportHeader { module: String },
    /// `<var> = ModelGenerator()`
    GeneratorInit { var: String },
    Assign { target: String, value: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Activity(String),
    Xor(Vec<Expr>),
    Loop { body: Box<Expr>, redo: Box<Expr> },
    /// Each inner list is one dependency tuple: a chain when it has two or
    /// more entries, an isolated node when it has one.
    PartialOrder(Vec<Vec<Expr>>),
    Var(String),
    /// `<var>.copy()`
    Copy(String),
    /// Python `None`; stands for a silent step.
    None,
}

impl ScriptAst {
    pub fn assignments(&self) -> impl Iterator<Item = (&str, &Expr)> {
        self.statements.iter().filter_map(|s| match &s.kind {
            StatementKind::Assign { target, value } => Some((target.as_str(), value)),
            _ => None,
        })
    }

    /// Number of builtin calls of each kind, counted over the whole script:
    /// (activity, xor, loop, partial_order).
    pub fn call_counts(&self) -> (usize, usize, usize, usize) {
        let mut c = (0, 0, 0, 0);
        for (_, e) in self.assignments() {
            e.count_calls(&mut c);
        }
        c
    }
}

impl Expr {
    fn count_calls(&self, c: &mut (usize, usize, usize, usize)) {
        match self {
            Expr::Activity(_) => c.0 += 1,
            Expr::Xor(args) => {
                c.1 += 1;
                args.iter().for_each(|a| a.count_calls(c));
            }
            Expr::Loop { body, redo } => {
                c.2 += 1;
                body.count_calls(c);
                redo.count_calls(c);
            }
            Expr::PartialOrder(tuples) => {
                c.3 += 1;
                tuples.iter().flatten().for_each(|a| a.count_calls(c));
            }
            Expr::Var(_) | Expr::Copy(_) | Expr::None => {}
        }
    }
}
