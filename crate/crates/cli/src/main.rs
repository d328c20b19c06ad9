use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dialogic_cli::commands::{cmd_eval, cmd_synth, cmd_train};
use dialogic_cli::config::Mode;

/// Dialogic-instruction detection: synthesize corpora, train the
/// multi-task classifier, and run the per-category binary evaluation.
#[derive(Parser)]
#[command(name = "dialogic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic train/validation/test corpus.
    Synth {
        /// Experiment configuration file (JSON).
        #[arg(long)]
        config: PathBuf,
    },
    /// Train one run mode and keep the best-validation checkpoint.
    Train {
        /// Experiment configuration file (JSON).
        #[arg(long)]
        config: PathBuf,
        /// baseline: cross-entropy only; all: random contrastive partners;
        /// hard: partners from the misclassified-example pool.
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Evaluate a checkpoint on per-category binary test sets.
    Eval {
        /// Checkpoint file written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Experiment configuration file (JSON).
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { config } => cmd_synth(&config).map(|_| ()),
        Command::Train { config, mode } => cmd_train(&config, mode).map(|_| ()),
        Command::Eval { checkpoint, config } => cmd_eval(&checkpoint, &config).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
