use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use katu_cli::{run, Command, RunConfig, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "katu", version, about = "Katugampola fractional calculus toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Run the operator identity suite.
    Verify(Invocation),
    /// Solve one initial value problem with the power nonlinearity.
    Solve(Invocation),
    /// Classify blow-up across a parameter grid.
    Sweep(Invocation),
    /// Audit the test-function inequality chain.
    Audit(Invocation),
}

#[derive(Args)]
struct Invocation {
    /// Flat JSON config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

fn main() -> ExitCode {
    // usage errors are configuration errors, not the verify-failure code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (command, inv) = match cli.command {
        Sub::Verify(i) => (Command::Verify, i),
        Sub::Solve(i) => (Command::Solve, i),
        Sub::Sweep(i) => (Command::Sweep, i),
        Sub::Audit(i) => (Command::Audit, i),
    };
    let config = match &inv.config {
        Some(path) => match RunConfig::load(path) {
            Ok(file) => file.overlay(&inv.run),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => inv.run,
    };
    ExitCode::from(run(command, &config) as u8)
}
