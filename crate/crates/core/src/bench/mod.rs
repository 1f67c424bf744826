//! Benchmark harness: fixtures, the strategy matrix runner, run records and
//! report tables.

mod fixtures;
mod records;
mod report;
mod runner;

use std::path::Path;

use thiserror::Error;

pub use fixtures::{default_fixture_dir, load_fixture, load_fixtures, Fixture, FixtureError};
pub use records::{read_records, CandidateRecord, RecordKey, RecordSink, RunRecord, Strategy};
pub use report::{
    baseline_summaries, emit_reports, input_opt_summaries, match_kind, output_opt_summaries, self_eval_summaries,
    BaselineSummary, ImprovementSummary, SelfEvalSummary, Table, BEST_BUFFER,
};
pub use runner::{
    ground_truth_scores, load_provider_file, make_providers, prompt_description, run_matrix, run_one, BenchProvider,
    GroundTruth, ProviderEntry, ReferenceProvider, RunConfig,
};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Provider(#[from] crate::llm::ProviderError),
    #[error("{0}")]
    Config(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |e| BenchError::Io(path.display().to_string(), e)
}

pub fn write_ground_truth(dir: &Path, gt: &[GroundTruth]) -> Result<(), BenchError> {
    let path = dir.join(GROUND_TRUTH_FILE);
    let doc = serde_json::to_string_pretty(gt).expect("plain data serializes");
    std::fs::write(&path, doc).map_err(io_err(&path))
}

pub fn read_ground_truth(dir: &Path) -> Result<Vec<GroundTruth>, BenchError> {
    let path = dir.join(GROUND_TRUTH_FILE);
    match std::fs::read_to_string(&path) {
        Ok(doc) => serde_json::from_str(&doc).map_err(|e| BenchError::Config(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(io_err(&path)(e)),
    }
}

/// Reads the records in `dir` and writes every table as `<name>.csv` and
/// `<name>.txt`. Returns the tables.
pub fn write_reports(dir: &Path) -> Result<Vec<Table>, BenchError> {
    let path = dir.join(RECORDS_FILE);
    let records = read_records(&path).map_err(io_err(&path))?;
    if records.is_empty() {
        return Err(BenchError::Config(format!("{}: no records", path.display())));
    }
    let tables = emit_reports(&records, &read_ground_truth(dir)?);
    for t in &tables {
        for (ext, body) in [("csv", t.to_csv()), ("txt", t.to_text())] {
            let p = dir.join(format!("{}.{ext}", t.name));
            std::fs::write(&p, body).map_err(io_err(&p))?;
        }
    }
    Ok(tables)
}
