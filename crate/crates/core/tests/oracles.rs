mod common;

use std::collections::BTreeSet;

use common::*;
use powlgen::bench::load_fixtures;
use powlgen::dsl::{extract_code, interpret};
use powlgen::powl::{Node, PowlNode};
use powlgen::semantics::{enumerate_variants, SimulationConfig};
use powlgen::translation::{read_pnml, to_bpmn, to_bpmn_with, to_petri_net, write_pnml};

fn bicycle() -> Node {
    interpret(&bicycle_script()).unwrap().model
}

fn cfg(loop_cap: usize) -> SimulationConfig {
    SimulationConfig { loop_cap, ..Default::default() }
}

#[test]
fn bicycle_language_matches_interleaver() {
    let model = bicycle();
    let oracle = brute_force_language(&model, 2);
    assert_eq!(oracle.len(), 33);
    let got = enumerate_variants(&model, &cfg(2));
    assert!(!got.truncated);
    assert_eq!(got.traces, oracle);
}

#[test]
fn bicycle_language_other_caps() {
    let model = bicycle();
    for cap in [1, 3] {
        assert_eq!(enumerate_variants(&model, &cfg(cap)).traces, brute_force_language(&model, cap), "cap {cap}");
    }
}

#[test]
fn small_fixtures_match_interleaver() {
    let fixtures = load_fixtures(&fixture_dir(), &cfg(2)).unwrap();
    let mut checked = 0;
    for f in &fixtures {
        let oracle = brute_force_language(&f.model, 2);
        if oracle.len() > 200 {
            continue;
        }
        assert_eq!(enumerate_variants(&f.model, &cfg(2)).traces, oracle, "{}", f.id);
        checked += 1;
    }
    assert!(checked >= 5);
}

#[test]
fn interleaver_hand_cases() {
    let a = || PowlNode::activity("a").unwrap();
    let b = || PowlNode::activity("b").unwrap();
    let c = || PowlNode::activity("c").unwrap();
    let t = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    // Three concurrent activities: all 6 permutations.
    let par = PowlNode::partial_order(vec![a(), b(), c()], []).unwrap();
    assert_eq!(brute_force_language(&par, 2).len(), 6);
    // a before c, b free.
    let po = PowlNode::partial_order(vec![a(), b(), c()], [(0, 2)]).unwrap();
    let expected: BTreeSet<_> = [t(&["a", "b", "c"]), t(&["a", "c", "b"]), t(&["b", "a", "c"])].into();
    assert_eq!(brute_force_language(&po, 2), expected);
    // Loop with silent redo, cap 3.
    let lp = PowlNode::looped(a(), PowlNode::silent());
    let expected: BTreeSet<_> = [t(&["a"]), t(&["a", "a"]), t(&["a", "a", "a"])].into();
    assert_eq!(brute_force_language(&lp, 3), expected);
    assert_eq!(enumerate_variants(&lp, &cfg(3)).traces, expected);
}

#[test]
fn pnml_round_trip_on_fixtures() {
    for f in load_fixtures(&fixture_dir(), &cfg(2)).unwrap() {
        let net = to_petri_net(&f.model).unwrap();
        let doc = write_pnml(&net);
        let back = read_pnml(&doc).unwrap();
        assert_eq!(back, net, "{}", f.id);
        assert_eq!(write_pnml(&back), doc, "{}", f.id);
    }
}

#[test]
fn net_language_matches_on_loop_free_fixtures() {
    for f in load_fixtures(&fixture_dir(), &cfg(2)).unwrap() {
        if f.has_loop() || f.log.len() > 200 {
            continue;
        }
        let net = to_petri_net(&f.model).unwrap();
        let longest = f.labels.len();
        assert_eq!(net_language(&net, longest), enumerate_variants(&f.model, &cfg(2)).traces, "{}", f.id);
    }
}

/// Gateway counts before elision, derived from the tree: two exclusive
/// gateways per choice and per loop, a parallel split and join per partial
/// order, plus one parallel gateway for each child with two or more direct
/// predecessors and each with two or more direct successors.
fn gateway_oracle(node: &Node) -> (usize, usize) {
    let (mut x, mut p) = match &**node {
        PowlNode::Xor(_) | PowlNode::Loop { .. } => (2, 0),
        PowlNode::PartialOrder(po) => {
            let e = po.edges();
            let direct = |i: usize, j: usize| {
                e.contains(&(i, j)) && !(0..po.len()).any(|k| e.contains(&(i, k)) && e.contains(&(k, j)))
            };
            let n = po.len();
            let joins = (0..n).filter(|&j| (0..n).filter(|&i| direct(i, j)).count() >= 2).count();
            let splits = (0..n).filter(|&i| (0..n).filter(|&j| direct(i, j)).count() >= 2).count();
            (0, 2 + joins + splits)
        }
        _ => (0, 0),
    };
    for c in node.children() {
        let (cx, cp) = gateway_oracle(c);
        x += cx;
        p += cp;
    }
    (x, p)
}

#[test]
fn gateway_counts_match_oracle() {
    for f in load_fixtures(&fixture_dir(), &cfg(2)).unwrap() {
        let g = to_bpmn_with(&f.model, false).unwrap().gateway_counts();
        assert_eq!((g.exclusive, g.parallel), gateway_oracle(&f.model), "{}", f.id);
        assert_eq!(to_bpmn(&f.model).unwrap().tasks().count(), f.model.counts().activities, "{}", f.id);
    }
    // Elided form of the bicycle model, counted by hand: the choice, the
    // loop and the inner choice keep their exclusive pairs; the fork after
    // informing and the join before assembly are the only parallel ones.
    let g = to_bpmn(&bicycle()).unwrap().gateway_counts();
    assert_eq!((g.exclusive, g.parallel), (6, 2));
}

#[test]
fn extract_code_corpus() {
    let cases: &[(&str, Option<&str>)] = &[
        ("```python\nx = 1\n```", Some("x = 1")),
        ("```\nx = 1\n```", Some("x = 1")),
        ("Sure! Here it is:\n\n```python\nx = 1\ny = 2\n```\nLet me know.", Some("x = 1\ny = 2")),
        ("```python\nfirst = 1\n```\n```python\nsecond = 2\n```", Some("first = 1")),
        ("x = 1", Some("x = 1")),
        ("```Python\r\nx = 1\r\n```", Some("x = 1")),
        ("", None),
        ("   \n  ", None),
        ("```python\n```", None),
    ];
    for (input, expected) in cases {
        match (extract_code(input), expected) {
            (Ok(code), Some(e)) => assert_eq!(code.replace('\r', ""), *e, "{input:?}"),
            (Err(d), None) => assert_eq!(d.code.as_str(), "EMPTY_RESPONSE"),
            (got, _) => panic!("{input:?}: {got:?}"),
        }
    }
}
