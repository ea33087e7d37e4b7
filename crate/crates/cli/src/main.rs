use std::process::ExitCode;

use acs_cli::commands::{self, CommonArgs, Ctx};
use acs_cli::error::CliResult;
use clap::{Parser, Subcommand};

/// Automatic cyclical sampling experiments.
#[derive(Parser)]
#[command(name = "acs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tune a cyclical schedule per seed.
    Tune(CommonArgs),
    /// Run samplers and write traces, metrics and a summary.
    Sample(CommonArgs),
    /// Train an RBM with PCD or ACS-PCD.
    Learn(CommonArgs),
    /// Verify exact kernels on small quadratic targets.
    Theory(CommonArgs),
    /// Recompute metrics from persisted traces.
    Eval(CommonArgs),
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let (args, f): (&CommonArgs, fn(&Ctx) -> CliResult<()>) = match &cli.command {
        Command::Tune(a) => (a, commands::tune::run),
        Command::Sample(a) => (a, commands::sample::run),
        Command::Learn(a) => (a, commands::learn::run),
        Command::Theory(a) => (a, commands::theory::run),
        Command::Eval(a) => (a, commands::eval::run),
    };
    f(&Ctx::new(args)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // usage errors are config errors; clap's own code 2 means verification failure here
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("acs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
