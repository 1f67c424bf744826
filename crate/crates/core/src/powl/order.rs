//! Relation helpers over index pairs: transitive closure, cycle detection
//! and transitive reduction.

use std::collections::BTreeSet;

use super::{ModelError, PartialOrder};

type Edges = BTreeSet<(usize, usize)>;

fn reach_matrix(n: usize, edges: &Edges) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for &(i, j) in edges {
        r[i][j] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

/// Transitive closure of `edges` over `n` nodes. Cyclic input yields
/// self-pairs `(i, i)` for every node on a cycle.
pub fn closure(n: usize, edges: &Edges) -> Edges {
    let r = reach_matrix(n, edges);
    let mut out = Edges::new();
    for (i, row) in r.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v {
                out.insert((i, j));
            }
        }
    }
    out
}

/// First node lying on a directed cycle of length ≥ 2, ignoring self-loops.
pub fn find_cycle(n: usize, edges: &Edges) -> Option<usize> {
    let proper: Edges = edges.iter().copied().filter(|(i, j)| i != j).collect();
    let r = reach_matrix(n, &proper);
    (0..n).find(|&i| r[i][i])
}

/// Edges of the closure that are not implied by a two-step path.
/// `edges` must be acyclic.
pub fn reduction(n: usize, edges: &Edges) -> Edges {
    let c = closure(n, edges);
    let r = reach_matrix(n, &c);
    c.iter()
        .copied()
        .filter(|&(i, j)| !(0..n).any(|k| k != i && k != j && r[i][k] && r[k][j]))
        .collect()
}

/// Closes the order transitively. Self-loops are irreflexivity violations;
/// any other cycle shows up as `(i, i)` in the closure and is rejected.
pub fn close(po: &PartialOrder) -> Result<PartialOrder, ModelError> {
    if let Some(&(i, _)) = po.edges.iter().find(|(i, j)| i == j) {
        return Err(ModelError::Irreflexive(i));
    }
    let c = closure(po.len(), &po.edges);
    if let Some(&(i, _)) = c.iter().find(|(i, j)| i == j) {
        return Err(ModelError::OrderCycle(i));
    }
    Ok(PartialOrder { nodes: po.nodes.clone(), edges: c })
}
