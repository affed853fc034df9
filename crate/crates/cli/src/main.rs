use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gnet::synth::SynthSpec;
use gnet_cli::{
    cmd_eval, cmd_gradcheck, cmd_synth, cmd_train, GradcheckConfig, RunConfig, CONFIG_HELP,
    GRADCHECK_TOLERANCE,
};

/// Two-branch variational graph autoencoder for recognizing and predicting
/// manipulation actions from scene-graph sequences.
#[derive(Parser)]
#[command(name = "gnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a TOML run config.
    #[command(after_help = CONFIG_HELP)]
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a checkpoint on one split of its data.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset path; defaults to the one recorded in the checkpoint.
        #[arg(long)]
        data: Option<PathBuf>,
        /// train, val, test or all.
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Where confusion tables go; defaults to the checkpoint's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference check of the full model gradient on a small sample.
    /// Exits 0 iff the max relative error is below 1e-4.
    Gradcheck {
        /// Central-difference step, within [1e-6, 1e-3].
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        /// TOML sample/model description; defaults to a 4-node cycle.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, hide = true)]
        corrupt_backward: Option<f64>,
    },
    /// Write a synthetic sequence dataset.
    Synth {
        #[arg(long)]
        classes: usize,
        /// Sequences per class.
        #[arg(long)]
        seqs: usize,
        /// Frames per sequence.
        #[arg(long)]
        frames: usize,
        /// Probability that a frame carries its class motif.
        #[arg(long, default_value_t = 1.0)]
        strength: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(command: Command) -> gnet_cli::Result<bool> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Train { config } => {
            let config = RunConfig::load(&config)?;
            cmd_train(&config, &mut out)?;
        }
        Command::Eval {
            checkpoint,
            data,
            split,
            threads,
            out: dir,
        } => {
            cmd_eval(&checkpoint, data.as_deref(), &split, threads, dir.as_deref(), &mut out)?;
        }
        Command::Gradcheck {
            eps,
            config,
            corrupt_backward,
        } => {
            let config = match config {
                Some(p) => GradcheckConfig::load(&p)?,
                None => GradcheckConfig::default(),
            };
            let report = cmd_gradcheck(&config, eps, corrupt_backward, &mut out)?;
            return Ok(report.max_relative_error < GRADCHECK_TOLERANCE);
        }
        Command::Synth {
            classes,
            seqs,
            frames,
            strength,
            seed,
            out: path,
        } => {
            let spec = SynthSpec {
                classes,
                seqs_per_class: seqs,
                frames,
                strength,
                seed,
            };
            cmd_synth(&spec, &path, &mut out)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("gradient check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
