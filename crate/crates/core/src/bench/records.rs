use std::collections::HashSet;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::llm::SessionStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Baseline,
    SelfEvalGeneral,
    SelfEvalConformance,
    InputOpt,
    OutputOpt,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Baseline,
        Strategy::SelfEvalGeneral,
        Strategy::SelfEvalConformance,
        Strategy::InputOpt,
        Strategy::OutputOpt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::SelfEvalGeneral => "self_eval_general",
            Strategy::SelfEvalConformance => "self_eval_conformance",
            Strategy::InputOpt => "input_opt",
            Strategy::OutputOpt => "output_opt",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.as_str() == s.trim())
            .ok_or_else(|| format!("unknown strategy '{s}'"))
    }
}

/// One generated candidate inside a self-evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub status: SessionStatus,
    pub iterations: u32,
    pub quality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub fixture: String,
    pub provider: String,
    pub strategy: Strategy,
    /// Description length variant: "full", "medium" or "short".
    pub variant: String,
    pub iterations: u32,
    pub status: SessionStatus,
    pub auto_fixed: bool,
    pub total_secs: f64,
    pub iteration_secs: Vec<f64>,
    pub provider_secs: f64,
    pub fitness: Option<f64>,
    pub precision: Option<f64>,
    pub quality: Option<f64>,
    /// Quality before the optimization step (optimization strategies).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_before: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<CandidateRecord>,
    /// Scores the provider gave, indexed like `candidates`; `None` for
    /// candidates that were not evaluated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub llm_scores: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub type RecordKey = (String, String, Strategy, String);

impl RunRecord {
    pub fn key(&self) -> RecordKey {
        (self.fixture.clone(), self.provider.clone(), self.strategy, self.variant.clone())
    }
}

/// Append-only JSON-lines file. Each record is flushed and synced before
/// `append` returns.
pub struct RecordSink {
    path: PathBuf,
    file: File,
    done: HashSet<RecordKey>,
}

impl RecordSink {
    /// Opens `path` for appending and remembers the keys already present.
    pub fn open(path: &Path) -> io::Result<Self> {
        let existing = read_records(path)?;
        let done = existing.iter().map(RunRecord::key).collect();
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if !ends_with_newline(path)? {
            file.write_all(b"\n")?;
        }
        Ok(RecordSink { path: path.to_path_buf(), file, done })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn contains(&self, key: &RecordKey) -> bool {
        self.done.contains(key)
    }

    /// Writes the record unless its key is already present. Returns whether
    /// it was written.
    pub fn append(&mut self, record: &RunRecord) -> io::Result<bool> {
        if !self.done.insert(record.key()) {
            return Ok(false);
        }
        let mut line = serde_json::to_string(record).map_err(io::Error::other)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        self.file.sync_data()?;
        Ok(true)
    }
}

fn ends_with_newline(path: &Path) -> io::Result<bool> {
    let bytes = std::fs::read(path)?;
    Ok(bytes.last().is_none_or(|&b| b == b'\n'))
}

/// Reads every well-formed record. A torn last line from an interrupted
/// write is skipped with a warning; a missing file yields no records.
pub fn read_records(path: &Path) -> io::Result<Vec<RunRecord>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            Err(e) => log::warn!("{}:{}: skipping unreadable record: {e}", path.display(), i + 1),
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn record(fixture: &str, strategy: Strategy) -> RunRecord {
        RunRecord {
            fixture: fixture.into(),
            provider: "mock".into(),
            strategy,
            variant: "full".into(),
            iterations: 1,
            status: SessionStatus::Succeeded,
            auto_fixed: false,
            total_secs: 0.5,
            iteration_secs: vec![0.5],
            provider_secs: 0.4,
            fitness: Some(1.0),
            precision: Some(1.0),
            quality: Some(1.0),
            quality_before: None,
            candidates: vec![],
            llm_scores: vec![],
            selected: None,
            error: None,
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
        assert!("greedy".parse::<Strategy>().is_err());
    }

    #[test]
    fn sink_skips_duplicates_and_torn_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        {
            let mut sink = RecordSink::open(&path).unwrap();
            assert!(sink.append(&record("a", Strategy::Baseline)).unwrap());
            assert!(!sink.append(&record("a", Strategy::Baseline)).unwrap());
        }
        // Simulate a crash in the middle of a write.
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"fixture\": \"b\", \"prov").unwrap();
        drop(f);
        let mut sink = RecordSink::open(&path).unwrap();
        assert!(sink.contains(&record("a", Strategy::Baseline).key()));
        assert!(!sink.append(&record("a", Strategy::Baseline)).unwrap());
        assert!(sink.append(&record("b", Strategy::Baseline)).unwrap());
        drop(sink);
        let all = read_records(&path).unwrap();
        assert_eq!(all.iter().map(|r| r.fixture.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }
}
