//! `g2sqg`: preprocessing, two-stage training, generation, evaluation, graph
//! inspection and hop sweeps for the graph-to-sequence question generator.

mod commands;
mod failure;
mod manifest;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "g2sqg", version, about = "Graph-to-sequence question generation")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Replaces the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `key=value`, applied after the config file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Directory receiving every artifact of the run.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphArg {
    Static,
    Dynamic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate the corpora and write the vocabulary and corpus statistics.
    Preprocess {
        /// Write a synthetic corpus of this many training examples first and
        /// point `train_path`/`dev_path` at it.
        #[arg(long)]
        toy: Option<usize>,
        /// Validation size of the synthetic corpus.
        #[arg(long, default_value_t = 32)]
        toy_dev: usize,
    },
    /// Stage 1: cross-entropy training with validation-driven schedule.
    Train,
    /// Stage 2: self-critical fine-tuning from a checkpoint.
    Finetune {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Beam-search questions for every example of a corpus.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Corpus to generate for; defaults to `dev_path`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Graph construction; defaults to the checkpoint's.
        #[arg(long, value_enum)]
        graph: Option<GraphArg>,
        /// Beam width; defaults to `beam_width`.
        #[arg(long)]
        beam: Option<usize>,
    },
    /// Score generated questions against references.
    Evaluate {
        /// JSONL of `{id, tokens}` records, as written by `generate`.
        #[arg(long)]
        hypotheses: PathBuf,
        /// Corpus holding the reference questions.
        #[arg(long)]
        references: PathBuf,
        /// Checkpoint whose word vectors define WMD; WMD is skipped without it.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Dump the passage graph of one example.
    Graph {
        #[arg(long)]
        input: PathBuf,
        /// Example id; defaults to the first record.
        #[arg(long)]
        id: Option<String>,
        /// Needed for learned graphs.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<GraphArg>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Train one model per hop count and compare validation BLEU-4.
    SweepHops {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4])]
        hops: Vec<usize>,
        /// Also train without the alignment network at the configured hop count.
        #[arg(long)]
        ablate_dan: bool,
        /// Largest acceptable BLEU-4 spread across hop counts.
        #[arg(long)]
        band: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = failure::exit_code(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
