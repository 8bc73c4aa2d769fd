//! `coset`: probe, rank, expand and evaluate relation exemplar sets.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "coset", version, about = "Co-set expansion of relation exemplars", args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Each subcommand reads only those it needs.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Built-in schema (retacred, tacrev, semeval) or a schema JSON file.
    #[arg(long, global = true, default_value = "retacred")]
    pub schema: String,

    /// Embedding store file.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,

    /// Seed file: {"class": [["head", "tail"], ...]}.
    #[arg(long, global = true)]
    pub seeds: Option<PathBuf>,

    /// Pattern file; the two built-in patterns are used when omitted.
    #[arg(long, global = true)]
    pub patterns: Option<PathBuf>,

    /// TOML file with expansion settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed; overrides `master_seed` from --config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed seed-pattern probes and corpus mentions into a store file.
    Probe {
        /// `stub:<dim>` for the offline hashing provider, or the base URL of an embedding service.
        #[arg(long, default_value = "stub:64")]
        provider: String,

        /// TACRED-format dataset whose mentions become candidates.
        #[arg(long)]
        dataset: Option<PathBuf>,

        /// Provider request timeout in seconds.
        #[arg(long, default_value_t = 60)]
        timeout: u64,
    },
    /// Select contrastive classes for every seeded class.
    RankClasses,
    /// Grow exemplar sets from the seeds.
    Expand {
        /// Candidate pair ids, one per line (default: every mention in the store).
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
    /// Fuse classifier scores with pair-class similarity and evaluate.
    FuseEval {
        /// JSON lines of {pair_id, scores}.
        #[arg(long)]
        scores: PathBuf,

        /// Exemplar sets written by `expand` (default: the seeds).
        #[arg(long)]
        sets: Option<PathBuf>,

        /// TACRED-format dataset supplying gold labels.
        #[arg(long)]
        dataset: PathBuf,

        /// Fusion weights; more than one value runs a sweep.
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
    },
    /// Drop seeds whose head or tail is a stopword.
    FilterSeeds {
        /// One stopword per line (default: English pronouns).
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Convert SemEval-2010 Task 8 text into TACRED-format JSON.
    ConvertSemeval {
        #[arg(long)]
        input: PathBuf,
    },
    /// Re-run the command recorded in a manifest after checking input digests.
    Replay { manifest: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let argv: Vec<String> = std::env::args().collect();
    match commands::run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if e.is_environmental() { 2 } else { 1 })
        }
    }
}
