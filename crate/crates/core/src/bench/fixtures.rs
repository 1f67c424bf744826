use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::diagnostics::ValidationReport;
use crate::dsl;
use crate::powl::Node;
use crate::semantics::{simulate_log, EventLog, SimulationConfig};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot read fixture directory {0}: {1}")]
    Directory(PathBuf, std::io::Error),
    #[error("fixture {fixture}: missing {file}")]
    Missing { fixture: String, file: String },
    #[error("fixture {fixture}: invalid ground truth: {}", summary(.report))]
    Invalid { fixture: String, report: ValidationReport },
    #[error("fixture {fixture}: {message}")]
    Log { fixture: String, message: String },
}

fn summary(r: &ValidationReport) -> String {
    r.diagnostics().iter().map(|d| format!("{}: {}", d.code, d.message)).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub id: String,
    pub description: String,
    pub medium: Option<String>,
    pub short: Option<String>,
    pub script: String,
    pub model: Node,
    /// Distinct activity labels, sorted.
    pub labels: Vec<String>,
    pub log: EventLog,
}

impl Fixture {
    pub fn has_loop(&self) -> bool {
        self.model.contains_loop()
    }

    /// Description for a length variant: "full", "medium" or "short".
    pub fn description_variant(&self, variant: &str) -> Option<&str> {
        match variant {
            "full" => Some(&self.description),
            "medium" => self.medium.as_deref(),
            "short" => self.short.as_deref(),
            _ => None,
        }
    }
}

/// Fixtures shipped with the crate.
pub fn default_fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn read_optional(dir: &Path, name: &str) -> Option<String> {
    fs::read_to_string(dir.join(name)).ok().map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

pub fn load_fixture(dir: &Path, cfg: &SimulationConfig) -> Result<Fixture, FixtureError> {
    let id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let required = |name: &str| {
        read_optional(dir, name).ok_or_else(|| FixtureError::Missing { fixture: id.clone(), file: name.to_string() })
    };
    let description = required("description.txt")?;
    let script = required("ground_truth.powl")?;
    let invalid = |report| FixtureError::Invalid { fixture: id.clone(), report };
    let ast = dsl::parse(&script).map_err(|d| invalid(ValidationReport::from_diagnostics(vec![d])))?;
    let evaluated = dsl::evaluate(&ast).map_err(invalid)?;
    if !evaluated.report.is_empty() {
        return Err(invalid(evaluated.report));
    }
    let model = evaluated.model;
    let log = simulate_log(&model, cfg).map_err(|e| FixtureError::Log { fixture: id.clone(), message: e.to_string() })?;
    log::info!("fixture {id}: {} variants", log.len());
    Ok(Fixture {
        labels: model.labels().into_iter().collect(),
        medium: read_optional(dir, "description.medium.txt"),
        short: read_optional(dir, "description.short.txt"),
        id,
        description,
        script,
        model,
        log,
    })
}

/// Loads every subdirectory of `dir`, sorted by name.
pub fn load_fixtures(dir: &Path, cfg: &SimulationConfig) -> Result<Vec<Fixture>, FixtureError> {
    let entries = fs::read_dir(dir).map_err(|e| FixtureError::Directory(dir.to_path_buf(), e))?;
    let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_dir()).collect();
    dirs.sort();
    dirs.iter().map(|d| load_fixture(d, cfg)).collect()
}
