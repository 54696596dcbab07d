use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hullft_cli::{
    cmd_bench, cmd_schedule, cmd_select, cmd_synth, cmd_toytrain, configure_threads, exit_code, BenchArgs,
    ScheduleArgs, SelectArgs, SynthArgs, ToyTrainArgs,
};

/// Sparse convex training-set selection and gradient-reuse scheduling.
///
/// Set HULLFT_THREADS to cap internal parallelism.
#[derive(Debug, Parser)]
#[command(name = "hullft", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select an N-example training multiset for a query.
    Select(SelectArgs),
    /// Build a gradient-reuse training schedule.
    Schedule(ScheduleArgs),
    /// Train the least-squares toy model through a schedule.
    Toytrain(ToyTrainArgs),
    /// Time selectors and integerizers over a budget sweep (CSV).
    Bench(BenchArgs),
    /// Write a seeded synthetic pool (and optionally a query).
    Synth(SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Select(a) => cmd_select(a),
        Command::Schedule(a) => cmd_schedule(a),
        Command::Toytrain(a) => cmd_toytrain(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
    });
    match result {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
