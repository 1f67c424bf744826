//! Oracles and generators shared by the integration tests. Everything here is
//! written against the public model types only and does not call the
//! enumeration, translation or scoring code it is used to check.

#![allow(dead_code)]

pub mod selfeval;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;

use proptest::prelude::*;

use powlgen::powl::{Node, PowlNode};
use powlgen::translation::{Marking, PetriNet};

pub type Trace = Vec<String>;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Construction script of the bicycle example, the twelve-activity model
/// with a nested loop used throughout the tests.
pub fn bicycle_script() -> String {
    std::fs::read_to_string(fixture_dir().join("bicycle/ground_truth.powl")).unwrap()
}

// ---------------------------------------------------------------------------
// Brute-force interleaver.
//
// A partial order picks one trace per child, then builds every word over
// the child indices in which child i appears |trace_i| times and a child
// may only emit once all of its predecessors have emitted everything.

fn po_words(
    lens: &[usize],
    preds: &[Vec<usize>],
    used: &mut Vec<usize>,
    word: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let total: usize = lens.iter().sum();
    if word.len() == total {
        out.push(word.clone());
        return;
    }
    for i in 0..lens.len() {
        if used[i] < lens[i] && preds[i].iter().all(|&p| used[p] == lens[p]) {
            used[i] += 1;
            word.push(i);
            po_words(lens, preds, used, word, out);
            word.pop();
            used[i] -= 1;
        }
    }
}

/// Predecessor lists of the transitive closure, by Warshall's algorithm.
fn closed_preds(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let mut r = vec![vec![false; n]; n];
    for &(i, j) in edges {
        r[i][j] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                r[i][j] |= r[i][k] && r[k][j];
            }
        }
    }
    (0..n).map(|j| (0..n).filter(|&i| r[i][j]).collect()).collect()
}

fn cartesian(langs: &[Vec<Trace>]) -> Vec<Vec<&Trace>> {
    let mut acc: Vec<Vec<&Trace>> = vec![Vec::new()];
    for lang in langs {
        let mut next = Vec::new();
        for prefix in &acc {
            for t in lang {
                let mut p = prefix.clone();
                p.push(t);
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

pub fn brute_force_language(node: &Node, loop_cap: usize) -> BTreeSet<Trace> {
    match &**node {
        PowlNode::Activity(l) => BTreeSet::from([vec![l.as_str().to_string()]]),
        PowlNode::Silent => BTreeSet::from([Vec::new()]),
        PowlNode::Xor(ch) => ch.iter().flat_map(|c| brute_force_language(c, loop_cap)).collect(),
        PowlNode::Loop { body, redo } => {
            let b = brute_force_language(body, loop_cap);
            let r = brute_force_language(redo, loop_cap);
            let mut out = BTreeSet::new();
            let mut level = b.clone();
            for n in 1..=loop_cap {
                out.extend(level.iter().cloned());
                if n == loop_cap {
                    break;
                }
                let mut next = BTreeSet::new();
                for t in &level {
                    for x in &r {
                        for y in &b {
                            let mut u = t.clone();
                            u.extend(x.iter().cloned());
                            u.extend(y.iter().cloned());
                            next.insert(u);
                        }
                    }
                }
                level = next;
            }
            out
        }
        PowlNode::PartialOrder(po) => {
            let n = po.len();
            let preds = closed_preds(n, po.edges());
            let langs: Vec<Vec<Trace>> =
                po.nodes().iter().map(|c| brute_force_language(c, loop_cap).into_iter().collect()).collect();
            let mut out = BTreeSet::new();
            for pick in cartesian(&langs) {
                let lens: Vec<usize> = pick.iter().map(|t| t.len()).collect();
                let mut words = Vec::new();
                po_words(&lens, &preds, &mut vec![0; n], &mut Vec::new(), &mut words);
                for w in words {
                    let mut pos = vec![0; n];
                    let trace = w
                        .iter()
                        .map(|&i| {
                            pos[i] += 1;
                            pick[i][pos[i] - 1].clone()
                        })
                        .collect();
                    out.insert(trace);
                }
            }
            out
        }
    }
}

/// Every trace of at most `max_len` events, with loops iterated as often as
/// the bound allows.
pub fn bounded_language(node: &Node, max_len: usize) -> BTreeSet<Trace> {
    let keep = |s: BTreeSet<Trace>| -> BTreeSet<Trace> { s.into_iter().filter(|t| t.len() <= max_len).collect() };
    match &**node {
        PowlNode::Activity(_) | PowlNode::Silent => keep(brute_force_language(node, 1)),
        PowlNode::Xor(ch) => ch.iter().flat_map(|c| bounded_language(c, max_len)).collect(),
        PowlNode::Loop { body, redo } => {
            let b = bounded_language(body, max_len);
            let r = bounded_language(redo, max_len);
            let mut all = b.clone();
            let mut frontier = b.clone();
            while !frontier.is_empty() {
                let mut next = BTreeSet::new();
                for t in &frontier {
                    for x in &r {
                        for y in &b {
                            if t.len() + x.len() + y.len() > max_len {
                                continue;
                            }
                            let mut u = t.clone();
                            u.extend(x.iter().cloned());
                            u.extend(y.iter().cloned());
                            if !all.contains(&u) {
                                next.insert(u);
                            }
                        }
                    }
                }
                all.extend(next.iter().cloned());
                frontier = next;
            }
            all
        }
        PowlNode::PartialOrder(po) => {
            let n = po.len();
            let preds = closed_preds(n, po.edges());
            let langs: Vec<Vec<Trace>> =
                po.nodes().iter().map(|c| bounded_language(c, max_len).into_iter().collect()).collect();
            let mut out = BTreeSet::new();
            for pick in cartesian(&langs) {
                let lens: Vec<usize> = pick.iter().map(|t| t.len()).collect();
                if lens.iter().sum::<usize>() > max_len {
                    continue;
                }
                let mut words = Vec::new();
                po_words(&lens, &preds, &mut vec![0; n], &mut Vec::new(), &mut words);
                for w in words {
                    let mut pos = vec![0; n];
                    out.insert(
                        w.iter()
                            .map(|&i| {
                                pos[i] += 1;
                                pick[i][pos[i] - 1].clone()
                            })
                            .collect(),
                    );
                }
            }
            out
        }
    }
}

// ---------------------------------------------------------------------------
// Net language by exhaustive firing, bounded by visible trace length.

fn enabled(net: &PetriNet, m: &Marking, pre: &[Vec<usize>]) -> Vec<usize> {
    (0..net.transitions.len()).filter(|&t| pre[t].iter().all(|p| m.get(p).copied().unwrap_or(0) > 0)).collect()
}

fn fire(m: &Marking, pre: &[usize], post: &[usize]) -> Marking {
    let mut m = m.clone();
    for p in pre {
        let k = m.get_mut(p).unwrap();
        *k -= 1;
        if *k == 0 {
            m.remove(p);
        }
    }
    for p in post {
        *m.entry(*p).or_default() += 1;
    }
    m
}

/// Visible traces of at most `max_len` events that lead from the initial to
/// exactly the final marking.
pub fn net_language(net: &PetriNet, max_len: usize) -> BTreeSet<Trace> {
    let pre: Vec<Vec<usize>> = (0..net.transitions.len()).map(|t| net.preset(t)).collect();
    let post: Vec<Vec<usize>> = (0..net.transitions.len()).map(|t| net.postset(t)).collect();
    let mut out = BTreeSet::new();
    let mut seen: HashSet<(Vec<(usize, u32)>, Trace)> = HashSet::new();
    let mut stack = vec![(net.initial_marking.clone(), Vec::<String>::new())];
    while let Some((m, trace)) = stack.pop() {
        let key = (m.iter().map(|(a, b)| (*a, *b)).collect::<Vec<_>>(), trace.clone());
        if !seen.insert(key) {
            continue;
        }
        if m == net.final_marking {
            out.insert(trace.clone());
        }
        for t in enabled(net, &m, &pre) {
            let mut next = trace.clone();
            if let Some(l) = &net.transitions[t].label {
                if trace.len() == max_len {
                    continue;
                }
                next.push(l.clone());
            }
            stack.push((fire(&m, &pre[t], &post[t]), next));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Random models.

#[derive(Debug, Clone)]
pub enum Shape {
    Act(u8),
    Tau,
    Xor(Vec<Shape>),
    Loop(Box<Shape>, Box<Shape>),
    Po(Vec<Shape>, Vec<(usize, usize)>),
}

pub const LABELS: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];

impl Shape {
    pub fn build(&self) -> Node {
        match self {
            Shape::Act(i) => PowlNode::activity(LABELS[*i as usize % LABELS.len()]).unwrap(),
            Shape::Tau => PowlNode::silent(),
            Shape::Xor(ch) => PowlNode::xor(ch.iter().map(Shape::build).collect()).unwrap(),
            Shape::Loop(b, r) => PowlNode::looped(b.build(), r.build()),
            Shape::Po(ch, edges) => {
                let n = ch.len();
                let edges: BTreeSet<(usize, usize)> =
                    edges.iter().map(|&(i, j)| (i % n, j % n)).filter(|(i, j)| i < j).collect();
                PowlNode::partial_order(ch.iter().map(Shape::build).collect(), edges).unwrap()
            }
        }
    }
}

/// Trees of depth at most five. Silent leaves are rarer than activities.
pub fn arb_shape() -> impl Strategy<Value = Shape> {
    let leaf = prop_oneof![4 => (0u8..8).prop_map(Shape::Act), 1 => Just(Shape::Tau)];
    leaf.prop_recursive(4, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Shape::Xor),
            (inner.clone(), inner.clone()).prop_map(|(b, r)| Shape::Loop(Box::new(b), Box::new(r))),
            (prop::collection::vec(inner, 1..5), prop::collection::vec((0usize..4, 0usize..4), 0..5))
                .prop_map(|(ch, e)| Shape::Po(ch, e)),
        ]
    })
}

pub fn arb_model() -> impl Strategy<Value = Node> {
    arb_shape().prop_map(|s| s.build())
}

pub fn depth(node: &Node) -> usize {
    1 + node.children().iter().map(|c| depth(c)).max().unwrap_or(0)
}

/// Multiset of visible trace lengths; a cheap fingerprint for diagnostics.
pub fn length_histogram(lang: &BTreeSet<Trace>) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for t in lang {
        *h.entry(t.len()).or_default() += 1;
    }
    h
}
