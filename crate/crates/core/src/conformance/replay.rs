use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::net::{Compiled, Marking};
use crate::semantics::EventLog;
use crate::translation::PetriNet;

/// Token counts summed over a log.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayCounters {
    pub produced: u64,
    pub consumed: u64,
    pub missing: u64,
    pub remaining: u64,
}

impl ReplayCounters {
    pub fn fitness(&self) -> f64 {
        let part = |bad: u64, total: u64| if total == 0 { 1.0 } else { 1.0 - bad as f64 / total as f64 };
        0.5 * part(self.missing, self.consumed) + 0.5 * part(self.remaining, self.produced)
    }

    fn add(&mut self, o: &ReplayCounters) {
        self.produced += o.produced;
        self.consumed += o.consumed;
        self.missing += o.missing;
        self.remaining += o.remaining;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFit {
    pub case_id: String,
    pub fit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessResult {
    pub fitness: f64,
    pub counters: ReplayCounters,
    pub per_trace: Vec<TraceFit>,
}

struct Run<'a> {
    net: &'a Compiled,
    m: Marking,
    c: ReplayCounters,
}

impl Run<'_> {
    fn fire_counted(&mut self, t: usize) {
        self.c.consumed += self.net.pre[t].len() as u64;
        self.c.produced += self.net.post[t].len() as u64;
        self.m = self.net.fire(&self.m, t);
    }

    fn missing_for(&self, t: usize) -> u64 {
        self.net.pre[t].iter().filter(|&&p| self.m[p] == 0).count() as u64
    }

    fn event(&mut self, label: &str) {
        let Some(cands) = self.net.by_label.get(label) else {
            // Unknown activity: one token missing and one left behind, as if
            // it were a transition between two private places.
            self.c.missing += 1;
            self.c.consumed += 1;
            self.c.produced += 1;
            self.c.remaining += 1;
            return;
        };
        if let Some(&t) = cands.iter().find(|&&t| self.net.enabled(&self.m, t)) {
            self.fire_counted(t);
            return;
        }
        let net = self.net;
        if let Some(path) = net.silent_path(&self.m, |m| cands.iter().any(|&t| net.enabled(m, t))) {
            for t in path {
                self.fire_counted(t);
            }
            let &t = cands.iter().find(|&&t| net.enabled(&self.m, t)).expect("path enables a candidate");
            self.fire_counted(t);
            return;
        }
        let &t = cands.iter().min_by_key(|&&t| self.missing_for(t)).expect("label has transitions");
        for &p in &net.pre[t] {
            if self.m[p] == 0 {
                self.m[p] += 1;
                self.c.missing += 1;
            }
        }
        self.fire_counted(t);
    }

    fn finish(&mut self) {
        let net = self.net;
        let fin = &net.final_;
        let path = net
            .silent_path(&self.m, |m| m == fin)
            .or_else(|| net.silent_path(&self.m, |m| (0..net.n_places).all(|p| m[p] >= fin[p])));
        for t in path.unwrap_or_default() {
            self.fire_counted(t);
        }
        for p in 0..net.n_places {
            let need = fin[p];
            self.c.consumed += need as u64;
            if self.m[p] < need {
                self.c.missing += (need - self.m[p]) as u64;
                self.m[p] = 0;
            } else {
                self.m[p] -= need;
            }
        }
        self.c.remaining += self.m.iter().map(|&k| k as u64).sum::<u64>();
    }
}

/// Upper bound on (marking, position) states explored per trace when looking
/// for a perfectly fitting firing sequence.
const FIT_SEARCH_LIMIT: usize = 50_000;

/// A firing sequence that replays `trace` exactly and ends in the final
/// marking. Greedy replay can pick the wrong one of several transitions
/// sharing a label; this search cannot, so fitting traces always score 1.
fn fitting_sequence(net: &Compiled, trace: &[String]) -> Option<Vec<usize>> {
    let labels: Vec<&Vec<usize>> = trace.iter().map(|a| net.by_label.get(a.as_str())).collect::<Option<_>>()?;
    // (marking, position, parent state, transition fired to get here)
    let mut states: Vec<(Marking, usize, usize, usize)> = vec![(net.initial.clone(), 0, usize::MAX, usize::MAX)];
    let mut seen: HashSet<(Marking, usize)> = HashSet::from([(net.initial.clone(), 0)]);
    let mut stack = vec![0usize];
    while let Some(s) = stack.pop() {
        let (m, i) = (states[s].0.clone(), states[s].1);
        if i == trace.len() && m == net.final_ {
            let mut path = Vec::new();
            let mut cur = s;
            while states[cur].2 != usize::MAX {
                path.push(states[cur].3);
                cur = states[cur].2;
            }
            path.reverse();
            return Some(path);
        }
        // Silent moves are pushed first so visible ones are tried first.
        let visible = labels.get(i).map(|ts| ts.as_slice()).unwrap_or(&[]);
        for (&t, step) in net.silent.iter().map(|t| (t, 0)).chain(visible.iter().map(|t| (t, 1))) {
            if !net.enabled(&m, t) {
                continue;
            }
            let next = net.fire(&m, t);
            if seen.len() >= FIT_SEARCH_LIMIT || !seen.insert((next.clone(), i + step)) {
                continue;
            }
            states.push((next, i + step, s, t));
            stack.push(states.len() - 1);
        }
    }
    None
}

pub(crate) fn replay_compiled(net: &Compiled, log: &EventLog) -> FitnessResult {
    let mut total = ReplayCounters::default();
    let mut per_trace = Vec::with_capacity(log.len());
    for case in &log.cases {
        let mut run = Run { net, m: net.initial.clone(), c: ReplayCounters::default() };
        if let Some(path) = fitting_sequence(net, &case.trace) {
            run.c.produced = net.initial.iter().map(|&k| k as u64).sum();
            for t in path {
                run.fire_counted(t);
            }
            run.c.consumed += net.final_.iter().map(|&k| k as u64).sum::<u64>();
            per_trace.push(TraceFit { case_id: case.id.clone(), fit: true });
            total.add(&run.c);
            continue;
        }
        run.c.produced = net.initial.iter().map(|&k| k as u64).sum();
        for a in &case.trace {
            run.event(a);
        }
        run.finish();
        per_trace.push(TraceFit { case_id: case.id.clone(), fit: run.c.missing == 0 && run.c.remaining == 0 });
        total.add(&run.c);
    }
    FitnessResult { fitness: total.fitness(), counters: total, per_trace }
}

/// Token-based replay. The net is first reduced with
/// [`PetriNet::reduce_silent`]; silent firings on the path to an enabled
/// transition are counted like visible ones, missing tokens count into
/// `missing` only.
pub fn replay_fitness(net: &PetriNet, log: &EventLog) -> FitnessResult {
    replay_compiled(&Compiled::new(&net.reduce_silent()), log)
}
