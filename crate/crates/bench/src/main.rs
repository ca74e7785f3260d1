use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use encact_bench::commands::{emit, sweep_csv};
use encact_bench::report::compare_csv;
use encact_bench::{
    cmd_approx_analyze, cmd_compare, cmd_gen_fixtures, cmd_infer, cmd_plan, BenchError, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "encact",
    version,
    about = "Encrypted-inference activation benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run encrypted inference and write a JSON report.
    Infer(Opts),
    /// Compare activation variants on the same weights and inputs (CSV table).
    Compare(Opts),
    /// Print the bootstrap plan as JSON; with --out also writes <out>.trace.csv.
    Plan(Opts),
    /// Chebyshev ReLU error and depth per degree (CSV).
    ApproxAnalyze(Opts),
    /// Write deterministic fixture weights and manifest.json to --out.
    GenFixtures(Opts),
}

#[derive(clap::Args)]
struct Opts {
    /// JSON file with any of the flag settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

impl Opts {
    fn resolve(self) -> Result<RunConfig, BenchError> {
        match &self.config {
            Some(path) => Ok(self.run.over(RunConfig::from_json_file(path)?)),
            None => Ok(self.run),
        }
    }
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Infer(o) => {
            let cfg = o.resolve()?;
            let report = cmd_infer(&cfg)?;
            if let Some(out) = &cfg.out {
                emit(
                    Some(&out.with_extension("records.csv")),
                    &report.records_csv(),
                )?;
            }
            emit(cfg.out.as_deref(), &report.to_json())?;
            eprintln!(
                "{} samples, mean {} cost units, {} bootstraps per sample",
                report.records.len(),
                report.mean_cost_units,
                report.plan.bootstrap_count
            );
        }
        Command::Compare(o) => {
            let cfg = o.resolve()?;
            emit(cfg.out.as_deref(), &compare_csv(&cmd_compare(&cfg)?))?;
        }
        Command::Plan(o) => {
            let cfg = o.resolve()?;
            let plan = cmd_plan(&cfg)?;
            if let Some(out) = &cfg.out {
                emit(Some(&out.with_extension("trace.csv")), &plan.trace_csv())?;
            }
            let json = serde_json::to_string_pretty(&plan).expect("plan serializes") + "\n";
            emit(cfg.out.as_deref(), &json)?;
        }
        Command::ApproxAnalyze(o) => {
            let cfg = o.resolve()?;
            emit(cfg.out.as_deref(), &sweep_csv(&cmd_approx_analyze(&cfg)?))?;
        }
        Command::GenFixtures(o) => {
            let cfg = o.resolve()?;
            let m = cmd_gen_fixtures(&cfg)?;
            eprintln!("wrote {} tensors and manifest.json", m.tensors.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(cli);
    eprintln!("elapsed {:.2?}", start.elapsed());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
