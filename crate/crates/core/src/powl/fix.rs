use std::collections::HashSet;
use std::sync::Arc;

use super::{Node, PartialOrder, PowlNode};

/// Fresh copy of the subtree; no node object of the result is shared with
/// the input, and shared objects inside the input are split per position.
pub fn deep_copy(node: &Node) -> Node {
    Arc::new(match &**node {
        PowlNode::Activity(l) => PowlNode::Activity(l.clone()),
        PowlNode::Silent => PowlNode::Silent,
        PowlNode::Xor(ch) => PowlNode::Xor(ch.iter().map(deep_copy).collect()),
        PowlNode::Loop { body, redo } => {
            PowlNode::Loop { body: deep_copy(body), redo: deep_copy(redo) }
        }
        PowlNode::PartialOrder(po) => PowlNode::PartialOrder(PartialOrder {
            nodes: po.nodes.iter().map(deep_copy).collect(),
            edges: po.edges.clone(),
        }),
    })
}

/// Replaces the second and later occurrences of every reused node object
/// with a deep copy. Returns the repaired model and the number of
/// occurrences replaced. Unchanged subtrees keep their identity.
pub fn auto_fix_reuse(model: &Node) -> (Node, usize) {
    let mut seen = HashSet::new();
    let mut fixed = 0;
    let out = fix(model, &mut seen, &mut fixed);
    (out, fixed)
}

fn fix(node: &Node, seen: &mut HashSet<usize>, fixed: &mut usize) -> Node {
    if !seen.insert(Arc::as_ptr(node) as usize) {
        *fixed += 1;
        return deep_copy(node);
    }
    match &**node {
        PowlNode::Activity(_) | PowlNode::Silent => node.clone(),
        PowlNode::Xor(ch) => {
            let new: Vec<Node> = ch.iter().map(|c| fix(c, seen, fixed)).collect();
            if same(ch, &new) {
                node.clone()
            } else {
                Arc::new(PowlNode::Xor(new))
            }
        }
        PowlNode::Loop { body, redo } => {
            let b = fix(body, seen, fixed);
            let r = fix(redo, seen, fixed);
            if Arc::ptr_eq(body, &b) && Arc::ptr_eq(redo, &r) {
                node.clone()
            } else {
                PowlNode::looped(b, r)
            }
        }
        PowlNode::PartialOrder(po) => {
            let new: Vec<Node> = po.nodes.iter().map(|c| fix(c, seen, fixed)).collect();
            if same(&po.nodes, &new) {
                node.clone()
            } else {
                Arc::new(PowlNode::PartialOrder(PartialOrder { nodes: new, edges: po.edges.clone() }))
            }
        }
    }
}

fn same(a: &[Node], b: &[Node]) -> bool {
    a.iter().zip(b).all(|(x, y)| Arc::ptr_eq(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::DiagnosticCode;
    use crate::powl::{structural_equal, validate};

    fn act(l: &str) -> Node {
        PowlNode::activity(l).unwrap()
    }

    #[test]
    fn copies_a_reused_activity_once() {
        let x = act("X");
        let m = PowlNode::sequence(vec![x.clone(), act("Y"), x]).unwrap();
        let (fixed_model, n) = auto_fix_reuse(&m);
        assert_eq!(n, 1);
        assert!(!validate(&fixed_model).has_code(DiagnosticCode::SubmodelReuse));
        assert!(structural_equal(&m, &fixed_model));
    }

    #[test]
    fn no_reuse_is_identity() {
        let m = PowlNode::xor(vec![act("A"), act("B")]).unwrap();
        let (out, n) = auto_fix_reuse(&m);
        assert_eq!(n, 0);
        assert!(Arc::ptr_eq(&m, &out));
    }

    #[test]
    fn shared_subtree_inside_choice() {
        let s = PowlNode::sequence(vec![act("A"), act("B")]).unwrap();
        let m = PowlNode::xor(vec![s.clone(), s]).unwrap();
        let (out, n) = auto_fix_reuse(&m);
        assert_eq!(n, 1);
        assert!(validate(&out).is_empty());
    }

    #[test]
    fn deep_copy_splits_inner_sharing() {
        let x = act("X");
        let m = PowlNode::sequence(vec![x.clone(), x]).unwrap();
        let c = deep_copy(&m);
        assert!(validate(&c).is_empty());
    }
}
