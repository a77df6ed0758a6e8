use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use linguareward::embedding::{Backend, EmbedderSpec, DEFAULT_DIM};
use linguareward::env::Task;
use linguareward::runner::{self, exit_code};
use linguareward::stats::TauVariant;

#[derive(Parser)]
#[command(name = "linguareward", version, about = "Semantic-reward experiments for continuous control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy from an experiment config.
    Train { config: PathBuf },
    /// Deterministic rollouts of a checkpoint, one JSON Lines file each.
    Rollout {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "rollouts")]
        out: PathBuf,
        /// Trace CSV for fluid checkpoints (default: built-in synthetic trace).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Rank-correlate two channels pooled over trajectory files.
    Correlate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Kendall variant: a or b.
        #[arg(long, default_value = "b")]
        variant: String,
        /// Write <out>.json and <out>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a semantic-reward run (A) against a baseline (B).
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the sentence describing a state.
    Describe {
        task: Task,
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        values: Vec<f64>,
    },
    /// Print embeddings of texts as JSON.
    Embed {
        #[arg(long)]
        backend: Backend,
        #[arg(long, required = true)]
        text: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_DIM)]
        dim: usize,
        #[arg(long)]
        url: Option<String>,
        /// Also report similarity to this task's goal sentence.
        #[arg(long)]
        goal: Option<Task>,
    },
}

/// Print one line; a closed pipe (e.g. `| head`) ends output quietly.
fn emit(line: impl Display) -> linguareward::Result<()> {
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> linguareward::Result<()> {
    match cli.command {
        Command::Train { config } => {
            let summary = runner::cmd_train(&config)?;
            emit(summary.checkpoint.display())?;
        }
        Command::Rollout { checkpoint, n, seed, out, trace } => {
            for path in runner::cmd_rollout(&checkpoint, n, seed, &out, trace.as_deref())? {
                emit(path.display())?;
            }
        }
        Command::Correlate { files, x, y, variant, out } => {
            let variant = match variant.as_str() {
                "a" => TauVariant::A,
                "b" => TauVariant::B,
                other => return Err(linguareward::Error::Config(format!("unknown variant {other:?}"))),
            };
            let report = runner::cmd_correlate(&files, &x, &y, variant, out.as_deref())?;
            emit(serde_json::to_string_pretty(&report)?)?;
        }
        Command::Compare { config_a, config_b, out } => {
            let row = runner::cmd_compare(&config_a, &config_b, out.as_deref())?;
            emit(serde_json::to_string_pretty(&row)?)?;
        }
        Command::Describe { task, values } => emit(runner::cmd_describe(task, &values)?)?,
        Command::Embed { backend, text, dim, url, goal } => {
            let spec = EmbedderSpec {
                remote_url: url,
                ..EmbedderSpec::new(backend, dim)
            };
            for out in runner::cmd_embed(&spec, &text, goal)? {
                emit(serde_json::to_string(&out)?)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
