use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::net::{Compiled, Marking};
use crate::semantics::EventLog;
use crate::translation::PetriNet;

#[derive(Default)]
struct PrefixNode<'a> {
    weight: u64,
    children: BTreeMap<&'a str, usize>,
}

fn prefix_tree(log: &EventLog) -> Vec<PrefixNode<'_>> {
    let mut nodes = vec![PrefixNode::default()];
    for case in &log.cases {
        let mut cur = 0;
        nodes[0].weight += 1;
        for a in &case.trace {
            let next = match nodes[cur].children.get(a.as_str()) {
                Some(&n) => n,
                None => {
                    nodes.push(PrefixNode::default());
                    let n = nodes.len() - 1;
                    nodes[cur].children.insert(a.as_str(), n);
                    n
                }
            };
            nodes[next].weight += 1;
            cur = next;
        }
    }
    nodes
}

pub(crate) fn precision_compiled(net: &Compiled, log: &EventLog) -> f64 {
    let tree = prefix_tree(log);
    let mut escaping = 0u64;
    let mut allowed = 0u64;
    let root = net.silent_closure(HashSet::from([net.initial.clone()]));
    let mut stack: Vec<(usize, HashSet<Marking>)> = vec![(0, root)];
    while let Some((node, belief)) = stack.pop() {
        let enabled: BTreeSet<&str> = belief
            .iter()
            .flat_map(|m| {
                net.by_label
                    .iter()
                    .filter(|(_, ts)| ts.iter().any(|&t| net.enabled(m, t)))
                    .map(|(l, _)| l.as_str())
            })
            .collect();
        let here = &tree[node];
        if !enabled.is_empty() {
            let esc = enabled.iter().filter(|l| !here.children.contains_key(*l)).count() as u64;
            escaping += here.weight * esc;
            allowed += here.weight * enabled.len() as u64;
        }
        for (&label, &child) in &here.children {
            let Some(ts) = net.by_label.get(label) else { continue };
            let next: HashSet<Marking> = belief
                .iter()
                .flat_map(|m| ts.iter().filter(|&&t| net.enabled(m, t)).map(move |&t| net.fire(m, t)))
                .collect();
            if !next.is_empty() {
                stack.push((child, net.silent_closure(next)));
            }
        }
    }
    if allowed == 0 {
        1.0
    } else {
        1.0 - escaping as f64 / allowed as f64
    }
}

/// Escaping-edges precision over the log's prefix tree, tracking the set of
/// markings consistent with each prefix. Prefixes the model cannot replay
/// stop contributing. Returns 1.0 when no state enables anything.
pub fn escaping_precision(net: &PetriNet, log: &EventLog) -> f64 {
    precision_compiled(&Compiled::new(&net.reduce_silent()), log)
}
