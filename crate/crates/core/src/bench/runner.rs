use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::records::{CandidateRecord, RecordSink, RunRecord, Strategy};
use super::{BenchError, Fixture};
use crate::conformance::{evaluate_model, ConformanceReport};
use crate::llm::prompts::{
    DESCRIPTION_MARKER, INPUT_DESCRIPTION_MARKER, INPUT_OPTIMIZATION, LABELS_MARKER, OUTPUT_OPTIMIZATION,
    SELF_EVAL_OPENING,
};
use crate::llm::{
    build_provider, generate, optimize_input, optimize_output, self_evaluate_select, ChatMessage, ChatProvider,
    Criteria, GenerationConfig, GenerationSession, ProviderConfig, ProviderError, ProviderKind, Role,
    SessionStatus,
};
use crate::powl::Node;

/// Provider file entry: a provider configuration plus how many runs may
/// talk to it at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderEntry {
    #[serde(flatten)]
    pub config: ProviderConfig,
    #[serde(default = "one")]
    pub concurrency: usize,
}

fn one() -> usize {
    1
}

pub fn load_provider_file(path: &Path) -> Result<Vec<ProviderEntry>, BenchError> {
    let doc = std::fs::read_to_string(path).map_err(|e| BenchError::Io(path.display().to_string(), e))?;
    let entries: Vec<ProviderEntry> =
        serde_json::from_str(&doc).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    if entries.is_empty() {
        return Err(BenchError::Config(format!("{}: no providers listed", path.display())));
    }
    Ok(entries)
}

pub struct BenchProvider {
    pub name: String,
    pub provider: Arc<dyn ChatProvider>,
    pub concurrency: usize,
}

/// Builds the providers of a provider file. A mock entry without a script
/// becomes a [`ReferenceProvider`] over `fixtures`.
pub fn make_providers(entries: &[ProviderEntry], fixtures: &[Fixture]) -> Result<Vec<BenchProvider>, ProviderError> {
    entries
        .iter()
        .map(|e| {
            let provider: Arc<dyn ChatProvider> =
                if e.config.kind == ProviderKind::Mock && e.config.mock_script.is_none() {
                    Arc::new(ReferenceProvider::new(fixtures))
                } else {
                    Arc::from(build_provider(&e.config)?)
                };
            Ok(BenchProvider { name: e.config.model.clone(), provider, concurrency: e.concurrency.max(1) })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub generation: GenerationConfig,
    /// Candidates per self-evaluation run.
    pub candidates: usize,
    pub output_retry_limit: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { generation: GenerationConfig::default(), candidates: 4, output_retry_limit: 5 }
    }
}

/// Description variants run by a strategy on a fixture.
fn variants(fixture: &Fixture, strategy: Strategy) -> Vec<&'static str> {
    if strategy != Strategy::InputOpt {
        return vec!["full"];
    }
    ["full", "medium", "short"].into_iter().filter(|v| fixture.description_variant(v).is_some()).collect()
}

struct Job<'a> {
    fixture: &'a Fixture,
    strategy: Strategy,
    variant: &'static str,
}

/// Runs every (fixture, provider, strategy) combination not yet present in
/// `sink`. Providers run in parallel, each with its own concurrency limit.
/// Failures inside a run are recorded in the run's record. Returns the
/// records written by this call, sorted by key.
pub fn run_matrix(
    fixtures: &[Fixture],
    providers: &[BenchProvider],
    strategies: &[Strategy],
    cfg: &RunConfig,
    sink: &Mutex<RecordSink>,
) -> Result<Vec<RunRecord>, BenchError> {
    let written = Mutex::new(Vec::new());
    let io_error: Mutex<Option<std::io::Error>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for bp in providers {
            let jobs: Vec<Job> = {
                let sink = sink.lock().expect("sink poisoned");
                fixtures
                    .iter()
                    .flat_map(|f| strategies.iter().flat_map(move |&s| variants(f, s).into_iter().map(move |v| (f, s, v))))
                    .filter(|(f, s, v)| !sink.contains(&(f.id.clone(), bp.name.clone(), *s, v.to_string())))
                    .map(|(fixture, strategy, variant)| Job { fixture, strategy, variant })
                    .collect()
            };
            let jobs = Arc::new(jobs);
            let next = Arc::new(AtomicUsize::new(0));
            for _ in 0..bp.concurrency {
                let (jobs, next) = (jobs.clone(), next.clone());
                let (written, io_error) = (&written, &io_error);
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(job) = jobs.get(i) else { break };
                    let rec = run_one(job.fixture, bp, job.strategy, job.variant, cfg);
                    log::info!(
                        "{} / {} / {} / {}: {:?} quality {:?}",
                        rec.fixture, rec.provider, rec.strategy, rec.variant, rec.status, rec.quality
                    );
                    match sink.lock().expect("sink poisoned").append(&rec) {
                        Ok(true) => written.lock().expect("poisoned").push(rec),
                        Ok(false) => {}
                        Err(e) => {
                            io_error.lock().expect("poisoned").get_or_insert(e);
                        }
                    }
                });
            }
        }
    });
    if let Some(e) = io_error.into_inner().expect("poisoned") {
        let path = sink.lock().expect("sink poisoned").path().display().to_string();
        return Err(BenchError::Io(path, e));
    }
    let mut out = written.into_inner().expect("poisoned");
    out.sort_by_key(|r| r.key());
    Ok(out)
}

fn generation_config(cfg: &RunConfig, fixture: &Fixture, offset: u64) -> GenerationConfig {
    GenerationConfig {
        label_constraint: Some(fixture.labels.clone()),
        seed: cfg.generation.seed.wrapping_add(offset),
        ..cfg.generation.clone()
    }
}

fn score(model: Option<&Node>, fixture: &Fixture) -> Option<ConformanceReport> {
    model.map(|m| evaluate_model(m, &fixture.log))
}

fn base_record(fixture: &Fixture, provider: &str, strategy: Strategy, variant: &str) -> RunRecord {
    RunRecord {
        fixture: fixture.id.clone(),
        provider: provider.to_string(),
        strategy,
        variant: variant.to_string(),
        iterations: 0,
        status: SessionStatus::Failed,
        auto_fixed: false,
        total_secs: 0.0,
        iteration_secs: Vec::new(),
        provider_secs: 0.0,
        fitness: None,
        precision: None,
        quality: None,
        quality_before: None,
        candidates: Vec::new(),
        llm_scores: Vec::new(),
        selected: None,
        error: None,
    }
}

/// Copies the session's outcome and timing into `rec`.
fn fill_from_session(rec: &mut RunRecord, s: &GenerationSession, fixture: &Fixture) {
    rec.iterations = s.iterations.len() as u32;
    rec.status = s.status;
    rec.auto_fixed = s.auto_fixed;
    rec.iteration_secs = s.iterations.iter().map(|i| i.wall_secs).collect();
    rec.total_secs = rec.iteration_secs.iter().sum();
    rec.provider_secs = s.iterations.iter().map(|i| i.provider_secs).sum();
    set_score(rec, score(s.model.as_ref(), fixture));
    if let Some(f) = &s.failure {
        rec.error = Some(format!("{f:?}"));
    }
}

fn set_score(rec: &mut RunRecord, report: Option<ConformanceReport>) {
    rec.fitness = report.as_ref().map(|r| r.fitness);
    rec.precision = report.as_ref().map(|r| r.precision);
    rec.quality = report.as_ref().map(|r| r.quality);
}

pub fn run_one(fixture: &Fixture, bp: &BenchProvider, strategy: Strategy, variant: &str, cfg: &RunConfig) -> RunRecord {
    let mut rec = base_record(fixture, &bp.name, strategy, variant);
    let provider = bp.provider.as_ref();
    let description = fixture.description_variant(variant).unwrap_or(&fixture.description);
    let gen = |desc: &str, offset: u64| generate(desc, provider, &generation_config(cfg, fixture, offset));
    match strategy {
        Strategy::Baseline => match gen(description, 0) {
            Ok(s) => fill_from_session(&mut rec, &s, fixture),
            Err(e) => rec.error = Some(e.to_string()),
        },
        Strategy::SelfEvalGeneral | Strategy::SelfEvalConformance => {
            let criteria =
                if strategy == Strategy::SelfEvalGeneral { Criteria::General } else { Criteria::Conformance };
            self_eval(&mut rec, fixture, bp, description, criteria, cfg);
        }
        Strategy::InputOpt => {
            let started = Instant::now();
            let before = match gen(description, 0) {
                Ok(s) => score(s.model.as_ref(), fixture),
                Err(e) => {
                    rec.error = Some(e.to_string());
                    return rec;
                }
            };
            rec.quality_before = Some(before.map_or(0.0, |r| r.quality));
            match optimize_input(description, provider).and_then(|d| gen(&d, 0)) {
                Ok(s) => fill_from_session(&mut rec, &s, fixture),
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec.total_secs = started.elapsed().as_secs_f64();
        }
        Strategy::OutputOpt => {
            let mut s = match gen(description, 0) {
                Ok(s) => s,
                Err(e) => {
                    rec.error = Some(e.to_string());
                    return rec;
                }
            };
            fill_from_session(&mut rec, &s, fixture);
            rec.quality_before = Some(rec.quality.unwrap_or(0.0));
            if s.succeeded() {
                let started = Instant::now();
                if let Err(e) = optimize_output(&mut s, provider, cfg.output_retry_limit) {
                    rec.error = Some(e.to_string());
                }
                rec.total_secs += started.elapsed().as_secs_f64();
                rec.auto_fixed = s.auto_fixed;
                rec.status = s.status;
                set_score(&mut rec, score(s.model.as_ref(), fixture));
            }
        }
    }
    rec
}

fn self_eval(
    rec: &mut RunRecord,
    fixture: &Fixture,
    bp: &BenchProvider,
    description: &str,
    criteria: Criteria,
    cfg: &RunConfig,
) {
    let provider = bp.provider.as_ref();
    let started = Instant::now();
    let mut models: Vec<(usize, Node)> = Vec::new();
    let mut reports = Vec::new();
    for i in 0..cfg.candidates {
        match generate(description, provider, &generation_config(cfg, fixture, i as u64)) {
            Ok(s) => {
                let report = score(s.model.as_ref(), fixture);
                rec.iterations += s.iterations.len() as u32;
                rec.iteration_secs.extend(s.iterations.iter().map(|r| r.wall_secs));
                rec.provider_secs += s.iterations.iter().map(|r| r.provider_secs).sum::<f64>();
                rec.candidates.push(CandidateRecord {
                    status: s.status,
                    iterations: s.iterations.len() as u32,
                    quality: report.as_ref().map(|r| r.quality),
                });
                if let Some(m) = s.model {
                    models.push((i, m));
                }
                reports.push(report);
            }
            Err(e) => {
                rec.error = Some(e.to_string());
                return;
            }
        }
    }
    rec.llm_scores = vec![None; cfg.candidates];
    let chosen = match models.len() {
        0 => None,
        1 => {
            rec.error = Some("only one candidate succeeded; selected without evaluation".into());
            Some(models[0].0)
        }
        _ => {
            let nodes: Vec<Node> = models.iter().map(|(_, m)| m.clone()).collect();
            match self_evaluate_select(description, &nodes, criteria, provider) {
                Ok(ev) => {
                    for ((i, _), s) in models.iter().zip(&ev.scores) {
                        rec.llm_scores[*i] = Some(*s);
                    }
                    Some(models[ev.selected].0)
                }
                Err(e) => {
                    rec.error = Some(e.to_string());
                    None
                }
            }
        }
    };
    rec.total_secs = started.elapsed().as_secs_f64();
    if let Some(i) = chosen {
        rec.selected = Some(i);
        rec.status = rec.candidates[i].status;
        rec.auto_fixed = rec.status == SessionStatus::SucceededWithAutofix;
        set_score(rec, reports[i].clone());
    }
}

/// Offline stand-in for an LLM that answers from the fixtures' ground
/// truths: generation prompts get the matching ground-truth script, input
/// optimization echoes the description, output optimization returns the
/// previous script, and self-evaluation scores every candidate 1.0.
pub struct ReferenceProvider {
    scripts: BTreeMap<String, String>,
}

impl ReferenceProvider {
    pub fn new(fixtures: &[Fixture]) -> Self {
        let mut scripts = BTreeMap::new();
        for f in fixtures {
            for v in ["full", "medium", "short"] {
                if let Some(d) = f.description_variant(v) {
                    scripts.insert(d.trim().to_string(), f.script.clone());
                }
            }
        }
        ReferenceProvider { scripts }
    }
}

/// Description embedded in a generation prompt.
pub fn prompt_description(prompt: &str) -> Option<&str> {
    let start = prompt.find(DESCRIPTION_MARKER)? + DESCRIPTION_MARKER.len();
    let rest = &prompt[start..];
    let end = rest.find(LABELS_MARKER).unwrap_or(rest.len());
    Some(rest[..end].trim())
}

impl ChatProvider for ReferenceProvider {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, ProviderError> {
        let last = messages.last().map(|m| m.content.as_str()).unwrap_or("");
        if last == OUTPUT_OPTIMIZATION.trim_end() {
            let prev = messages.iter().rev().find(|m| m.role == Role::Assistant);
            return prev.map(|m| m.content.clone()).ok_or_else(|| ProviderError::Scripted("no previous model".into()));
        }
        if last.starts_with(INPUT_OPTIMIZATION.trim_end()) {
            let at = last.rfind(INPUT_DESCRIPTION_MARKER).expect("prompt ends with the description");
            return Ok(last[at + INPUT_DESCRIPTION_MARKER.len()..].trim().to_string());
        }
        if last.starts_with(SELF_EVAL_OPENING) {
            let k = (1..).take_while(|i| last.contains(&format!("\nR{i}:\n"))).count();
            return Ok((1..=k).map(|i| format!("R{i}: 1.0")).collect::<Vec<_>>().join("\n"));
        }
        let first_user = messages.iter().find(|m| m.role == Role::User).map(|m| m.content.as_str()).unwrap_or("");
        let desc = prompt_description(first_user)
            .ok_or_else(|| ProviderError::Scripted("unrecognised prompt".into()))?;
        let script = self.scripts.get(desc).ok_or_else(|| ProviderError::Scripted("unknown description".into()))?;
        Ok(format!("```python\n{script}\n```"))
    }

    fn name(&self) -> String {
        "reference".into()
    }
}

/// Self-quality of each fixture's ground truth against its own log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub fixture: String,
    pub fitness: f64,
    pub precision: f64,
    pub quality: f64,
}

pub fn ground_truth_scores(fixtures: &[Fixture]) -> Vec<GroundTruth> {
    fixtures
        .iter()
        .map(|f| {
            let r = evaluate_model(&f.model, &f.log);
            GroundTruth { fixture: f.id.clone(), fitness: r.fitness, precision: r.precision, quality: r.quality }
        })
        .collect()
}
