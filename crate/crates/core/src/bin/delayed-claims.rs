use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use delayed_claims::report::{run, RunOptions};

#[derive(Parser)]
#[command(name = "delayed-claims", version, about = "Rare-event probabilities for discounted claims with delays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a JSON run configuration.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; falls back to DELAYED_CLAIMS_THREADS.
        #[arg(long)]
        threads: Option<usize>,
        /// Master seed (overrides the config's `seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        config,
        out,
        threads,
        seed,
    } = cli.command;
    match run(&config, &RunOptions { out, threads, seed }) {
        Ok(summary) => {
            for file in &summary.files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
