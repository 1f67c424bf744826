//! Canonical string form of a model, used for structural equality.
//!
//! Choices are unordered, loops are ordered (do, redo), and partial orders
//! are compared up to node listing order with their transitively closed
//! edge sets. Partial-order nodes get a canonical labeling through colour
//! refinement plus individualization; interchangeable twins are only
//! branched on once.

use std::sync::Arc;

use super::{order, Node, PartialOrder, PowlNode};

pub fn canonical_form(node: &Node) -> String {
    match &**node {
        PowlNode::Activity(l) => {
            format!("A{}", serde_json::to_string(l.as_str()).expect("string serializes"))
        }
        PowlNode::Silent => "T".to_string(),
        PowlNode::Xor(ch) => {
            let mut parts: Vec<String> = ch.iter().map(canonical_form).collect();
            parts.sort();
            format!("X({})", parts.join(","))
        }
        PowlNode::Loop { body, redo } => {
            format!("L({},{})", canonical_form(body), canonical_form(redo))
        }
        PowlNode::PartialOrder(po) => canonical_order(po),
    }
}

/// Trees are equal up to choice-branch order and partial-order node order.
pub fn structural_equal(a: &Node, b: &Node) -> bool {
    Arc::ptr_eq(a, b) || canonical_form(a) == canonical_form(b)
}

struct Graph {
    labels: Vec<String>,
    succ: Vec<Vec<bool>>,
}

fn canonical_order(po: &PartialOrder) -> String {
    let labels: Vec<String> = po.nodes().iter().map(canonical_form).collect();
    let n = labels.len();
    let mut succ = vec![vec![false; n]; n];
    for (i, j) in order::closure(n, po.edges()) {
        succ[i][j] = true;
    }
    let mut distinct = labels.clone();
    distinct.sort();
    distinct.dedup();
    let colors = labels.iter().map(|l| distinct.binary_search(l).unwrap()).collect();
    let g = Graph { labels, succ };
    search(&g, colors)
}

fn class_count(colors: &[usize]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn refine(g: &Graph, mut colors: Vec<usize>) -> Vec<usize> {
    let n = colors.len();
    loop {
        let sigs: Vec<(usize, bool, Vec<usize>, Vec<usize>)> = (0..n)
            .map(|i| {
                let mut out: Vec<usize> = (0..n).filter(|&j| g.succ[i][j]).map(|j| colors[j]).collect();
                let mut inc: Vec<usize> = (0..n).filter(|&j| g.succ[j][i]).map(|j| colors[j]).collect();
                out.sort_unstable();
                inc.sort_unstable();
                (colors[i], g.succ[i][i], out, inc)
            })
            .collect();
        let mut uniq = sigs.clone();
        uniq.sort();
        uniq.dedup();
        let next: Vec<usize> = sigs.iter().map(|s| uniq.binary_search(s).unwrap()).collect();
        if class_count(&next) == class_count(&colors) {
            return next;
        }
        colors = next;
    }
}

fn encode(g: &Graph, colors: &[usize]) -> String {
    let n = colors.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| colors[i]);
    let mut pos = vec![0; n];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if g.succ[i][j] {
                edges.push((pos[i], pos[j]));
            }
        }
    }
    edges.sort_unstable();
    let nodes: Vec<&str> = order.iter().map(|&i| g.labels[i].as_str()).collect();
    let edges: Vec<String> = edges.iter().map(|(a, b)| format!("{a}>{b}")).collect();
    format!("P({}|{})", nodes.join(";"), edges.join(","))
}

fn search(g: &Graph, colors: Vec<usize>) -> String {
    let c = refine(g, colors);
    let n = c.len();
    if class_count(&c) == n {
        return encode(g, &c);
    }
    // first non-singleton cell by colour value
    let mut cell = usize::MAX;
    for col in 0..n {
        if c.iter().filter(|&&x| x == col).count() > 1 {
            cell = col;
            break;
        }
    }
    let members: Vec<usize> = (0..n).filter(|&i| c[i] == cell).collect();
    let mut tried: Vec<(Vec<bool>, Vec<bool>)> = Vec::new();
    let mut best: Option<String> = None;
    for &v in &members {
        let key = (g.succ[v].clone(), (0..n).map(|j| g.succ[j][v]).collect::<Vec<_>>());
        if tried.contains(&key) {
            continue;
        }
        tried.push(key);
        let next: Vec<usize> = (0..n)
            .map(|x| 2 * c[x] + usize::from(c[x] == cell && x != v))
            .collect();
        let s = search(g, next);
        if best.as_ref().is_none_or(|b| s < *b) {
            best = Some(s);
        }
    }
    best.expect("cell has members")
}
