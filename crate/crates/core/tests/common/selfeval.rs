//! Self-evaluation runs on three fixtures with a provider that hands out
//! ground truths and poor sequences in planned slots and scores them in a
//! planned way, so the selection and match counts are known in advance.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use powlgen::bench::{load_fixture, BenchProvider, Fixture};
use powlgen::llm::prompts::SELF_EVAL_OPENING;
use powlgen::llm::{ChatMessage, FnProvider, ProviderError};
use powlgen::semantics::SimulationConfig;

use super::fixture_dir;

/// Every label of the fixture in one fixed sequence; a poor but valid model.
pub fn sequence_script(f: &Fixture) -> String {
    let mut s = String::new();
    for (i, l) in f.labels.iter().enumerate() {
        s.push_str(&format!("x{i} = gen.activity({l:?})\n"));
    }
    let deps: Vec<String> = (1..f.labels.len()).map(|i| format!("(x{}, x{i})", i - 1)).collect();
    s.push_str(&format!("final_model = gen.partial_order(dependencies=[{}])\n", deps.join(", ")));
    s
}

/// Per fixture: which candidate slots get the ground truth (the others get
/// the sequence) and the scores the provider hands out.
pub struct Plan {
    pub id: &'static str,
    pub truth_slots: [bool; 4],
    pub scores: [f64; 4],
}

/// Expected picks per plan, and whether each pick is a ground truth.
pub const PLAN_PICKS: [(usize, bool); 3] = [(0, true), (1, false), (1, true)];

pub const PLANS: [Plan; 3] = [
    // Picks slot 0, a ground truth: exact.
    Plan { id: "onboarding", truth_slots: [true, false, true, false], scores: [0.8, 0.3, 0.8, 0.2] },
    // Slots 1 and 2 tie, the lower index wins: a sequence, no match.
    Plan { id: "p9", truth_slots: [true, false, true, false], scores: [0.5, 0.9, 0.9, 0.1] },
    // Slot 1 and 3 tie; slot 1 is a ground truth: exact.
    Plan { id: "it_incident", truth_slots: [false, true, false, true], scores: [0.6, 0.95, 0.2, 0.95] },
];

pub fn scoring_provider(fixtures: &[Fixture]) -> BenchProvider {
    let fixtures: Vec<Fixture> = fixtures.to_vec();
    let calls: Mutex<BTreeMap<String, usize>> = Mutex::new(BTreeMap::new());
    let provider = FnProvider::new("scorer", move |messages: &[ChatMessage]| {
        let last = &messages.last().unwrap().content;
        let (f, plan) = fixtures
            .iter()
            .zip(&PLANS)
            .find(|(f, _)| messages.iter().any(|m| m.content.contains(f.description.trim())))
            .ok_or_else(|| ProviderError::Scripted("unknown fixture".into()))?;
        if last.starts_with(SELF_EVAL_OPENING) {
            let lines: Vec<String> = plan.scores.iter().enumerate().map(|(i, s)| format!("R{}: {s}", i + 1)).collect();
            return Ok(format!("Looking at each candidate in turn.\n\n{}", lines.join("\n")));
        }
        let mut calls = calls.lock().unwrap();
        let n = calls.entry(f.id.clone()).or_default();
        let slot = *n % 4;
        *n += 1;
        let script = if plan.truth_slots[slot] { f.script.clone() } else { sequence_script(f) };
        Ok(format!("```python\n{script}\n```"))
    });
    BenchProvider { name: "scorer".into(), provider: Arc::new(provider), concurrency: 1 }
}

pub fn plan_fixtures() -> Vec<Fixture> {
    PLANS
        .iter()
        .map(|p| load_fixture(&fixture_dir().join(p.id), &SimulationConfig::default()).unwrap())
        .collect()
}
