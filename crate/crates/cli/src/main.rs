use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddlab::{execute, Command, Options};

#[derive(Parser)]
#[command(name = "ddlab", version, about = "Diffusive-dispersive regularizations of hyperbolic conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the admissibility conditions of the configured augmentation
    Check(Common),
    /// Run the solver for a single eps
    Run(Common),
    /// Run an eps (or xi) family and estimate the limit quantities
    Sweep(Common),
    /// Verify the entropy balance identity on manufactured fields
    Identity(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ddlab::EXIT_CONFIG } else { 0 });
        }
    };
    let (cmd, c) = match cli.command {
        Cmd::Check(c) => (Command::Check, c),
        Cmd::Run(c) => (Command::Run, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Identity(c) => (Command::Identity, c),
    };
    let opts = Options { config: c.config, out: c.out, seed: c.seed, quiet: c.quiet };
    ExitCode::from(execute(cmd, &opts))
}
