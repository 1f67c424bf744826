use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use powlgen::conformance::evaluate_model;
use powlgen::diagnostics::Severity;
use powlgen::dsl;
use powlgen::llm::{self, build_provider, GenerationConfig, ProviderConfig, ProviderKind};
use powlgen::powl::{auto_fix_reuse, ModelJson, Node};
use powlgen::semantics::{enumerate_variants, read_log, simulate_log, write_log, write_xes, SimulationConfig};
use powlgen::service::{self, ServiceConfig};
use powlgen::translation::ExportFormat;

#[derive(Parser)]
#[command(version, about = "Build, check, translate and score POWL models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Bpmn,
    Pnml,
    Script,
    Dot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Provider {
    Openai,
    Anthropic,
    Gemini,
    Mock,
}

impl From<Provider> for ProviderKind {
    fn from(p: Provider) -> Self {
        match p {
            Provider::Openai => ProviderKind::OpenAi,
            Provider::Anthropic => ProviderKind::Anthropic,
            Provider::Gemini => ProviderKind::Gemini,
            Provider::Mock => ProviderKind::Mock,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "POWLGEN_DATA_DIR", default_value = "powlgen-data")]
        data_dir: PathBuf,
        #[arg(long, env = "POWLGEN_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, env = "POWLGEN_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "POWLGEN_PROVIDER", value_enum, default_value = "openai")]
        provider: Provider,
        #[arg(long, env = "POWLGEN_MODEL", default_value = "gpt-4o")]
        model: String,
        /// Reply script for sessions using the mock provider.
        #[arg(long, env = "POWLGEN_MOCK_SCRIPT")]
        mock_script: Option<PathBuf>,
        /// Browser origin allowed by CORS; any origin when omitted.
        #[arg(long, env = "POWLGEN_CORS_ORIGIN")]
        cors_origin: Option<String>,
    },
    /// Check a construction script (or an LLM reply containing one).
    Validate { model: PathBuf },
    /// Translate a model to a document format.
    Export {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "bpmn")]
        format: Format,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write the model's event log (one case per variant).
    Simulate {
        model: PathBuf,
        #[arg(long, default_value_t = 2)]
        loop_cap: usize,
        /// Emit XES instead of CSV.
        #[arg(long)]
        xes: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Score a model against an event log (CSV).
    Score {
        model: PathBuf,
        #[arg(long)]
        log: PathBuf,
    },
    /// Generate a model from a description file ("-" reads stdin).
    Generate {
        description: PathBuf,
        #[arg(long, value_enum, default_value = "openai")]
        provider: Provider,
        #[arg(long, default_value = "gpt-4o")]
        model: String,
        /// Environment variable holding the API key.
        #[arg(long)]
        api_key_env: Option<String>,
        #[arg(long)]
        mock_script: Option<PathBuf>,
        /// Write the full session record here as JSON.
        #[arg(long)]
        session_out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

type CliResult = Result<ExitCode, String>;

fn read_input(path: &Path) -> Result<String, String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| e.to_string())?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_output(out: Option<&Path>, doc: &str) -> Result<(), String> {
    match out {
        Some(p) => std::fs::write(p, doc).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            let tail = if doc.ends_with('\n') { "" } else { "\n" };
            match stdout.write_all(doc.as_bytes()).and_then(|()| stdout.write_all(tail.as_bytes())) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
                _ => Ok(()),
            }
        }
    }
}

/// Reads a model from a `.json` tree or a construction script. Reuse is
/// repaired with a note on stderr.
fn load_model(path: &Path) -> Result<Node, String> {
    let doc = read_input(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let tree: ModelJson = serde_json::from_str(&doc).map_err(|e| format!("{}: {e}", path.display()))?;
        return tree.to_node().map_err(|e| e.to_string());
    }
    match dsl::interpret(&doc) {
        Ok(ev) => {
            for d in ev.report.diagnostics() {
                eprintln!("{d}");
            }
            if ev.report.has_severity(Severity::Adjustable) {
                let (fixed, copies) = auto_fix_reuse(&ev.model);
                eprintln!("note: {copies} repeated sub-model(s) copied");
                return Ok(fixed);
            }
            Ok(ev.model)
        }
        Err(report) => {
            let lines: Vec<String> = report.diagnostics().iter().map(|d| d.to_string()).collect();
            Err(lines.join("\n"))
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Serve { data_dir, host, port, provider, model, mock_script, cors_origin } => {
            let mut cfg = ServiceConfig::new(data_dir);
            cfg.default_provider = provider.into();
            cfg.default_model = model;
            cfg.mock_script = mock_script;
            cfg.cors_origin = cors_origin;
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(service::serve(cfg, SocketAddr::new(host, port))).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { model } => {
            let doc = read_input(&model)?;
            let (report, ok) = match dsl::interpret(&doc) {
                Ok(ev) => (ev.report, true),
                Err(report) => (report, false),
            };
            for d in report.diagnostics() {
                println!("{d}");
            }
            if ok && report.diagnostics().is_empty() {
                println!("valid");
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Export { model, format, out } => {
            let node = load_model(&model)?;
            let doc = match format {
                Format::Json => serde_json::to_string_pretty(&ModelJson::from_node(&node)).map_err(|e| e.to_string())?,
                f => {
                    let f = match f {
                        Format::Bpmn => ExportFormat::Bpmn,
                        Format::Pnml => ExportFormat::Pnml,
                        Format::Script => ExportFormat::Script,
                        _ => ExportFormat::Dot,
                    };
                    f.render(&node).map_err(|e| e.to_string())?
                }
            };
            write_output(out.as_deref(), &doc)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { model, loop_cap, xes, out } => {
            let node = load_model(&model)?;
            let cfg = SimulationConfig { loop_cap, ..Default::default() };
            if enumerate_variants(&node, &cfg).truncated {
                eprintln!("warning: variant limit reached; the log is incomplete");
            }
            let log = simulate_log(&node, &cfg).map_err(|e| e.to_string())?;
            let doc = if xes { write_xes(&log) } else { write_log(&log).map_err(|e| e.to_string())? };
            write_output(out.as_deref(), &doc)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Score { model, log } => {
            let node = load_model(&model)?;
            let log = read_log(&read_input(&log)?).map_err(|e| e.to_string())?;
            let r = evaluate_model(&node, &log);
            let summary = serde_json::json!({
                "fitness": r.fitness,
                "precision": r.precision,
                "quality": r.quality,
                "cases": log.len(),
                "fitting_cases": r.per_trace.iter().filter(|t| t.fit).count(),
            });
            println!("{}", serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate { description, provider, model, api_key_env, mock_script, session_out, seed } => {
            let text = read_input(&description)?;
            let mut pcfg = ProviderConfig::new(provider.into(), model);
            pcfg.api_key_env = api_key_env;
            pcfg.mock_script = mock_script;
            let provider = build_provider(&pcfg).map_err(|e| e.to_string())?;
            let gcfg = GenerationConfig { seed, ..Default::default() };
            let session = llm::generate(&text, provider.as_ref(), &gcfg).map_err(|e| e.to_string())?;
            for rec in &session.iterations {
                eprintln!("attempt {}: {} diagnostic(s), {:.2}s", rec.attempt, rec.diagnostics.len(), rec.wall_secs);
                for d in &rec.diagnostics {
                    eprintln!("  {d}");
                }
            }
            if let Some(p) = &session_out {
                let doc = serde_json::to_string_pretty(&session).map_err(|e| e.to_string())?;
                std::fs::write(p, doc).map_err(|e| format!("{}: {e}", p.display()))?;
            }
            match &session.model {
                Some(m) if session.succeeded() => {
                    write_output(None, &dsl::render(m))?;
                    Ok(ExitCode::SUCCESS)
                }
                _ => {
                    eprintln!("generation failed: {:?}", session.failure);
                    Ok(ExitCode::from(2))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
