use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Parser, Subcommand};

use powlgen::bench::{
    self, ground_truth_scores, load_fixtures, load_provider_file, make_providers, run_matrix, RecordSink, RunConfig,
    Strategy,
};
use powlgen::semantics::SimulationConfig;

#[derive(Parser)]
#[command(about = "Run the generation benchmark and build its report tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run fixtures x providers x strategies; resumes from existing records.
    Run {
        #[arg(long, default_value_os_t = bench::default_fixture_dir())]
        fixtures: PathBuf,
        /// JSON list of provider configurations.
        #[arg(long)]
        providers: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "baseline")]
        strategies: Vec<Strategy>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Loop unrolling bound for the fixture logs.
        #[arg(long, default_value_t = 2)]
        loop_cap: usize,
        /// Write the report tables after the run.
        #[arg(long)]
        report: bool,
    },
    /// Build the report tables from the records in a run directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), bench::BenchError> {
    match cli.command {
        Command::Run { fixtures, providers, strategies, out, seed, loop_cap, report } => {
            let sim = SimulationConfig { loop_cap, ..Default::default() };
            let fixtures = load_fixtures(&fixtures, &sim)?;
            let entries = load_provider_file(&providers)?;
            let providers = make_providers(&entries, &fixtures)?;
            std::fs::create_dir_all(&out).map_err(|e| bench::BenchError::Io(out.display().to_string(), e))?;
            bench::write_ground_truth(&out, &ground_truth_scores(&fixtures))?;
            let records = out.join(bench::RECORDS_FILE);
            let sink = RecordSink::open(&records).map_err(|e| bench::BenchError::Io(records.display().to_string(), e))?;
            let mut cfg = RunConfig::default();
            cfg.generation.seed = seed;
            let written = run_matrix(&fixtures, &providers, &strategies, &cfg, &Mutex::new(sink))?;
            eprintln!("{} new records in {}", written.len(), records.display());
            if report {
                print_tables(&bench::write_reports(&out)?);
            }
        }
        Command::Report { input } => print_tables(&bench::write_reports(&input)?),
    }
    Ok(())
}

fn print_tables(tables: &[bench::Table]) {
    for t in tables.iter().filter(|t| !t.rows.is_empty()) {
        println!("{}", t.to_text());
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
