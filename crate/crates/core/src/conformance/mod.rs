//! Scoring a model against a log: token-replay fitness, escaping-edges
//! precision and their harmonic mean.

mod net;
mod precision;
mod replay;

pub use precision::escaping_precision;
pub use replay::{replay_fitness, FitnessResult, ReplayCounters, TraceFit};

use serde::{Deserialize, Serialize};

use crate::powl::Node;
use crate::semantics::EventLog;
use crate::translation::to_petri_net;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub fitness: f64,
    pub precision: f64,
    pub quality: f64,
    pub per_trace: Vec<TraceFit>,
    pub counters: ReplayCounters,
}

/// Harmonic mean of fitness and precision; 0 when both are 0.
pub fn quality_score(fitness: f64, precision: f64) -> f64 {
    if fitness + precision <= 0.0 {
        0.0
    } else {
        2.0 * fitness * precision / (fitness + precision)
    }
}

/// Translates `candidate` and scores it against `log`. A model that cannot
/// be translated scores zero everywhere.
pub fn evaluate_model(candidate: &Node, log: &EventLog) -> ConformanceReport {
    let Ok(net) = to_petri_net(candidate) else {
        return ConformanceReport {
            fitness: 0.0,
            precision: 0.0,
            quality: 0.0,
            per_trace: log.cases.iter().map(|c| TraceFit { case_id: c.id.clone(), fit: false }).collect(),
            counters: ReplayCounters::default(),
        };
    };
    let compiled = net::Compiled::new(&net.reduce_silent());
    let fit = replay::replay_compiled(&compiled, log);
    let precision = precision::precision_compiled(&compiled, log);
    ConformanceReport {
        fitness: fit.fitness,
        precision,
        quality: quality_score(fit.fitness, precision),
        per_trace: fit.per_trace,
        counters: fit.counters,
    }
}
