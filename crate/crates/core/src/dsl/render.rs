use std::collections::HashSet;
use std::fmt::Write;

use crate::powl::{order, Node, PowlNode};

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield", "gen", "final_model", "ModelGenerator",
];

/// Renders a model as a construction script: activity bindings first, then
/// one binding per composite node in post-order, the root bound to
/// `final_model`. Partial orders are written as their transitive reduction.
pub fn render(model: &Node) -> String {
    let mut r = Renderer::default();
    let root = r.node(model, true);
    let mut out = String::from("from utils.model_generation import ModelGenerator\ngen = ModelGenerator()\n\n");
    for line in r.leaves.iter().chain(&r.composites) {
        out.push_str(line);
        out.push('\n');
    }
    if let Some(expr) = root {
        let _ = writeln!(out, "final_model = {expr}");
    }
    out
}

#[derive(Default)]
struct Renderer {
    used: HashSet<String>,
    leaves: Vec<String>,
    composites: Vec<String>,
    counters: [usize; 4],
}

fn quote(label: &str) -> String {
    let mut s = String::with_capacity(label.len() + 2);
    s.push('\'');
    for c in label.chars() {
        if c == '\\' || c == '\'' {
            s.push('\\');
        }
        s.push(c);
    }
    s.push('\'');
    s
}

fn snake(label: &str) -> String {
    let mut s = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    let s = s.trim_matches('_');
    match s.chars().next() {
        None => "activity".to_string(),
        Some(c) if c.is_ascii_digit() => format!("a_{s}"),
        _ => s.to_string(),
    }
}

impl Renderer {
    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut k = 2;
        while KEYWORDS.contains(&name.as_str()) || self.used.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.used.insert(name.clone());
        name
    }

    fn numbered(&mut self, slot: usize, prefix: &str) -> String {
        loop {
            self.counters[slot] += 1;
            let name = format!("{prefix}_{}", self.counters[slot]);
            if !self.used.contains(&name) {
                self.used.insert(name.clone());
                return name;
            }
        }
    }

    /// Returns the expression to use at the node's position. For the root
    /// this is the right-hand side of `final_model`.
    fn node(&mut self, node: &Node, root: bool) -> Option<String> {
        let (slot, prefix, call) = match &**node {
            PowlNode::Silent => return Some("None".to_string()),
            PowlNode::Activity(l) => {
                let call = format!("gen.activity({})", quote(l.as_str()));
                if root {
                    return Some(call);
                }
                let name = self.fresh(&snake(l.as_str()));
                self.leaves.push(format!("{name} = {call}"));
                return Some(name);
            }
            PowlNode::Xor(children) => {
                let args: Vec<String> = children.iter().map(|c| self.node(c, false).unwrap()).collect();
                (0, "choice", format!("gen.xor({})", args.join(", ")))
            }
            PowlNode::Loop { body, redo } => {
                let b = self.node(body, false).unwrap();
                let r = self.node(redo, false).unwrap();
                (1, "loop", format!("gen.loop(do={b}, redo={r})"))
            }
            PowlNode::PartialOrder(po) => {
                let names: Vec<String> = po
                    .nodes()
                    .iter()
                    .map(|n| match &**n {
                        PowlNode::Silent => {
                            let v = self.numbered(3, "skip");
                            self.composites.push(format!("{v} = None"));
                            v
                        }
                        _ => self.node(n, false).unwrap(),
                    })
                    .collect();
                let red = order::reduction(po.len(), po.edges());
                let mut touched = vec![false; po.len()];
                let mut deps = Vec::new();
                for &(i, j) in &red {
                    touched[i] = true;
                    touched[j] = true;
                    deps.push(format!("({}, {})", names[i], names[j]));
                }
                for (i, t) in touched.iter().enumerate() {
                    if !t {
                        deps.push(format!("({},)", names[i]));
                    }
                }
                (2, "poset", format!("gen.partial_order(dependencies=[{}])", deps.join(", ")))
            }
        };
        if root {
            return Some(call);
        }
        let name = self.numbered(slot, prefix);
        self.composites.push(format!("{name} = {call}"));
        Some(name)
    }
}
