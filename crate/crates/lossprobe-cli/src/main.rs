//! `lossprobe` — data-loss testing against simulated lifecycle apps.
//!
//! Subcommands: `run` (campaigns), `replay` (reproduce a finding),
//! `corpus` (generate a fault-seeded benchmark), `eval` (score run bundles
//! against a manifest). Exit codes are stable: 0 success without findings,
//! 1 failure or replay mismatch, 2 usage error, 3 setup failure, 4 manifest
//! mismatch, 10 findings found.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lossprobe::bench::generate::uniform_mix;
use lossprobe::cli::{
    cmd_corpus, cmd_eval, cmd_replay, cmd_run, exit_codes, parse_mix, CliError, RunOptions,
};
use lossprobe::oracles::OracleMode;
use lossprobe::report::Budget;

#[derive(Parser)]
#[command(name = "lossprobe", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run exploration campaigns against an app spec and write report
    /// bundles.
    Run(RunArgs),
    /// Replay a recorded finding and check it reproduces.
    Replay(ReplayArgs),
    /// Generate a seeded corpus of faulty apps with a ground-truth manifest.
    Corpus(CorpusArgs),
    /// Evaluate per-app run bundles against a corpus manifest.
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    /// App spec file (RON).
    #[arg(long)]
    app: PathBuf,
    /// Action budget per campaign (deterministic).
    #[arg(long, conflicts_with = "budget_seconds")]
    budget_actions: Option<u64>,
    /// Wall-clock budget per campaign in seconds (non-deterministic).
    #[arg(long)]
    budget_seconds: Option<f64>,
    /// Probability of the uniformly-random action branch.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Oracle strategy: snapshot, property or both.
    #[arg(long, default_value = "both", value_parser = parse_oracle)]
    oracle: OracleMode,
    /// Number of campaigns; run i uses seed + i.
    #[arg(long, default_value_t = 3)]
    runs: u32,
    /// Optional setup script (RON list of events) executed before testing.
    #[arg(long)]
    setup: Option<PathBuf>,
    /// Extra settled reads after each rotation.
    #[arg(long, default_value_t = 3)]
    settle_retries: u32,
    /// Output directory (LOSSPROBE_OUT overrides).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Run bundle directory (contains config.ron).
    #[arg(long)]
    bundle: PathBuf,
    /// Finding id, e.g. f-000.
    #[arg(long)]
    finding: String,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    count: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fault pattern weights, e.g.
    /// `crash=1,modified_value=2,phantom_element=1`.
    #[arg(long)]
    mix: Option<String>,
    /// Output directory (LOSSPROBE_OUT overrides).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory holding `<app-id>/run-<i>/` bundles.
    #[arg(long)]
    bundles: PathBuf,
    #[arg(long, default_value_t = 3)]
    runs: u32,
}

fn parse_oracle(text: &str) -> Result<OracleMode, String> {
    match text {
        "snapshot" => Ok(OracleMode::Snapshot),
        "property" => Ok(OracleMode::Property),
        "both" => Ok(OracleMode::Both),
        other => Err(format!("unknown oracle mode {other:?}")),
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(args) => {
            let budget = match (args.budget_actions, args.budget_seconds) {
                (Some(actions), None) => Budget::Actions(actions),
                (None, Some(seconds)) => Budget::Seconds(seconds),
                _ => {
                    return Err(CliError::Usage(
                        "exactly one of --budget-actions or --budget-seconds is required".into(),
                    ))
                }
            };
            let opts = RunOptions {
                app: args.app,
                budget,
                epsilon: args.epsilon,
                seed: args.seed,
                oracle: args.oracle,
                runs: args.runs,
                setup: args.setup,
                settle_retries: args.settle_retries,
                out: args.out,
            };
            let (summaries, code) = cmd_run(&opts)?;
            let findings: usize = summaries.iter().map(|s| s.findings.len()).sum();
            println!(
                "{} campaign(s), {} finding(s), coverage {:.0}%",
                summaries.len(),
                findings,
                summaries
                    .iter()
                    .map(|s| s.activity_coverage())
                    .sum::<f64>()
                    / summaries.len() as f64
                    * 100.0
            );
            Ok(code)
        }
        Command::Replay(args) => {
            let (message, code) = cmd_replay(&args.bundle, &args.finding)?;
            println!("{message}");
            Ok(code)
        }
        Command::Corpus(args) => {
            let mix = match args.mix {
                None => uniform_mix(),
                Some(text) => parse_mix(&text)?,
            };
            let manifest = cmd_corpus(args.count, args.seed, &mix, &args.out)?;
            println!(
                "{} app(s), {} fault(s), manifest written",
                manifest.apps.len(),
                manifest.total_faults()
            );
            Ok(exit_codes::OK)
        }
        Command::Eval(args) => {
            let (result, code) = cmd_eval(&args.manifest, &args.bundles, args.runs)?;
            print!("{}", result.to_table());
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
