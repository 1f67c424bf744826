use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::translation::{NetArc, PetriNet};

pub(crate) type Marking = Vec<u32>;

/// Upper bound on markings explored by a single silent-move search.
const SEARCH_LIMIT: usize = 20_000;

/// Incidence view of a net for replay.
pub(crate) struct Compiled {
    pub n_places: usize,
    pub pre: Vec<Vec<usize>>,
    pub post: Vec<Vec<usize>>,
    pub silent: Vec<usize>,
    pub by_label: BTreeMap<String, Vec<usize>>,
    pub initial: Marking,
    pub final_: Marking,
}

impl Compiled {
    pub fn new(net: &PetriNet) -> Self {
        let nt = net.transitions.len();
        let mut pre = vec![Vec::new(); nt];
        let mut post = vec![Vec::new(); nt];
        for a in &net.arcs {
            match *a {
                NetArc::PlaceToTransition(p, t) => pre[t].push(p),
                NetArc::TransitionToPlace(t, p) => post[t].push(p),
            }
        }
        let mut by_label: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut silent = Vec::new();
        for (t, tr) in net.transitions.iter().enumerate() {
            match &tr.label {
                Some(l) => by_label.entry(l.clone()).or_default().push(t),
                None => silent.push(t),
            }
        }
        let n_places = net.places.len();
        let to_vec = |m: &crate::translation::Marking| {
            let mut v = vec![0; n_places];
            for (&p, &k) in m {
                v[p] += k;
            }
            v
        };
        Compiled {
            n_places,
            pre,
            post,
            silent,
            by_label,
            initial: to_vec(&net.initial_marking),
            final_: to_vec(&net.final_marking),
        }
    }

    pub fn enabled(&self, m: &Marking, t: usize) -> bool {
        self.pre[t].iter().all(|&p| m[p] > 0)
    }

    /// Fires `t`, which must be enabled.
    pub fn fire(&self, m: &Marking, t: usize) -> Marking {
        let mut m = m.clone();
        for &p in &self.pre[t] {
            m[p] -= 1;
        }
        for &p in &self.post[t] {
            m[p] += 1;
        }
        m
    }

    /// Breadth-first search over silent firings from `start`. Returns the
    /// transition path to the first marking accepted by `goal`.
    pub fn silent_path(&self, start: &Marking, goal: impl Fn(&Marking) -> bool) -> Option<Vec<usize>> {
        if goal(start) {
            return Some(Vec::new());
        }
        let mut seen: HashSet<Marking> = HashSet::from([start.clone()]);
        let mut queue: VecDeque<(Marking, Vec<usize>)> = VecDeque::from([(start.clone(), Vec::new())]);
        while let Some((m, path)) = queue.pop_front() {
            for &t in &self.silent {
                if !self.enabled(&m, t) {
                    continue;
                }
                let next = self.fire(&m, t);
                if seen.contains(&next) {
                    continue;
                }
                let mut p = path.clone();
                p.push(t);
                if goal(&next) {
                    return Some(p);
                }
                if seen.len() >= SEARCH_LIMIT {
                    return None;
                }
                seen.insert(next.clone());
                queue.push_back((next, p));
            }
        }
        None
    }

    /// All markings reachable from `set` through silent firings.
    pub fn silent_closure(&self, set: HashSet<Marking>) -> HashSet<Marking> {
        let mut seen = set;
        let mut stack: Vec<Marking> = seen.iter().cloned().collect();
        while let Some(m) = stack.pop() {
            for &t in &self.silent {
                if self.enabled(&m, t) {
                    let next = self.fire(&m, t);
                    if seen.len() < SEARCH_LIMIT && seen.insert(next.clone()) {
                        stack.push(next);
                    }
                }
            }
        }
        seen
    }
}
