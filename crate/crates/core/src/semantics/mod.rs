//! Bounded trace-variant enumeration and event-log simulation.

mod log;

pub use log::{read_log, write_log, write_xes, Case, EventLog, LogError};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::powl::{order, Node, PowlNode};

pub type Trace = Vec<String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Maximum executions of a loop's do-part, per loop node.
    pub loop_cap: usize,
    pub max_variants: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { loop_cap: 2, max_variants: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VariantSet {
    pub traces: BTreeSet<Trace>,
    /// Set when some intermediate language exceeded `max_variants`; `traces`
    /// is then empty.
    pub truncated: bool,
}

struct Truncated;

type Lang = BTreeSet<Trace>;

fn insert(set: &mut Lang, t: Trace, cap: usize) -> Result<(), Truncated> {
    set.insert(t);
    if set.len() > cap {
        Err(Truncated)
    } else {
        Ok(())
    }
}

fn concat(a: &Lang, b: &Lang, cap: usize) -> Result<Lang, Truncated> {
    let mut out = Lang::new();
    for x in a {
        for y in b {
            let mut t = x.clone();
            t.extend(y.iter().cloned());
            insert(&mut out, t, cap)?;
        }
    }
    Ok(out)
}

/// Interleavings of one chosen trace per node where a node may start only
/// once all its predecessors have finished.
fn shuffle(
    traces: &[&Trace],
    preds: &[Vec<usize>],
    pos: &mut Vec<usize>,
    current: &mut Trace,
    out: &mut Lang,
    cap: usize,
) -> Result<(), Truncated> {
    let mut progressed = false;
    for i in 0..traces.len() {
        if pos[i] == traces[i].len() || !preds[i].iter().all(|&p| pos[p] == traces[p].len()) {
            continue;
        }
        progressed = true;
        current.push(traces[i][pos[i]].clone());
        pos[i] += 1;
        shuffle(traces, preds, pos, current, out, cap)?;
        pos[i] -= 1;
        current.pop();
    }
    if !progressed {
        insert(out, current.clone(), cap)?;
    }
    Ok(())
}

fn language(node: &Node, cfg: &SimulationConfig) -> Result<Lang, Truncated> {
    let cap = cfg.max_variants;
    match &**node {
        PowlNode::Activity(l) => Ok(Lang::from([vec![l.as_str().to_string()]])),
        PowlNode::Silent => Ok(Lang::from([Vec::new()])),
        PowlNode::Xor(children) => {
            let mut out = Lang::new();
            for c in children {
                for t in language(c, cfg)? {
                    insert(&mut out, t, cap)?;
                }
            }
            Ok(out)
        }
        PowlNode::Loop { body, redo } => {
            let d = language(body, cfg)?;
            let r = language(redo, cfg)?;
            let round = concat(&r, &d, cap)?;
            let mut out = d.clone();
            let mut k_times = d;
            for _ in 1..cfg.loop_cap.max(1) {
                k_times = concat(&k_times, &round, cap)?;
                for t in &k_times {
                    insert(&mut out, t.clone(), cap)?;
                }
            }
            Ok(out)
        }
        PowlNode::PartialOrder(po) => {
            let langs: Vec<Vec<Trace>> =
                po.nodes().iter().map(|c| language(c, cfg).map(|l| l.into_iter().collect())).collect::<Result<_, _>>()?;
            // Closed so that ordering through a silent node is kept.
            let closed = order::closure(po.len(), po.edges());
            let mut preds = vec![Vec::new(); po.len()];
            for &(i, j) in &closed {
                preds[j].push(i);
            }
            let mut out = Lang::new();
            let mut choice = vec![0; langs.len()];
            loop {
                let picked: Vec<&Trace> = choice.iter().zip(&langs).map(|(&k, l)| &l[k]).collect();
                let mut pos = vec![0; picked.len()];
                shuffle(&picked, &preds, &mut pos, &mut Vec::new(), &mut out, cap)?;
                // Odometer over the per-node choices.
                let mut i = 0;
                while i < choice.len() {
                    choice[i] += 1;
                    if choice[i] < langs[i].len() {
                        break;
                    }
                    choice[i] = 0;
                    i += 1;
                }
                if i == choice.len() {
                    return Ok(out);
                }
            }
        }
    }
}

/// Distinct traces of the model with every loop bounded by `loop_cap`
/// executions of its do-part. Partial-order edges are read as given, so
/// pass a closed model (as produced by evaluation) or a transitively
/// complete edge set.
pub fn enumerate_variants(model: &Node, cfg: &SimulationConfig) -> VariantSet {
    match language(model, cfg) {
        Ok(traces) => VariantSet { traces, truncated: false },
        Err(Truncated) => VariantSet { traces: Lang::new(), truncated: true },
    }
}

/// One case per variant, in lexicographic trace order, ids `c1`, `c2`, ...
pub fn simulate_log(model: &Node, cfg: &SimulationConfig) -> Result<EventLog, LogError> {
    let v = enumerate_variants(model, cfg);
    if v.truncated {
        return Err(LogError::Truncated(cfg.max_variants));
    }
    Ok(EventLog::from_traces(v.traces))
}
