//! Command implementations behind the `simtune` binary.
//!
//! Commands read inputs through a [`files::FileSource`] and write results
//! to the filesystem and to a caller-supplied writer, so tests can run them
//! in-process and observe every file they read.

pub mod commands;
pub mod files;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::run;

#[derive(Debug, Parser)]
#[command(name = "simtune", version, about = "Label-free selection of search similarity configurations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index from a JSONL or TREC corpus.
    Index(IndexArgs),
    /// Run one query under one configuration.
    Search(SearchArgs),
    /// Inspect configuration sets.
    Configs {
        #[command(subcommand)]
        command: ConfigsCommand,
    },
    /// Run every configuration on every query and pick the best one.
    Select(SelectArgs),
    /// Score a selection directory against relevance judgments.
    Eval(EvalArgs),
    /// Write a seeded synthetic corpus, topics and qrels.
    GenSynthetic(GenSyntheticArgs),
    /// Dump estimator internals.
    Qpp {
        #[command(subcommand)]
        command: QppCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Trec,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Corpus file.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: Format,
    /// Index file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Configuration spec, e.g. `bm25:k1=0.9` or `dfr:IF:B:H2`.
    #[arg(long, default_value = "bm25")]
    pub config: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Query text.
    #[arg(required = true)]
    pub query: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum ConfigsCommand {
    /// Print canonical names, one per line.
    List {
        /// `usecase1`, `dfr-grid`, `dfr-grid+bm25`, `ib-grid`, `@file`, or specs separated by spaces.
        #[arg(long, conflicts_with_all = ["grid", "usecase1"])]
        set: Option<String>,
        /// Print a full grid.
        #[arg(long, value_enum, conflicts_with = "usecase1")]
        grid: Option<Grid>,
        /// Print the six-configuration set.
        #[arg(long)]
        usecase1: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Grid {
    Dfr,
    Ib,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Topics file, `qid<TAB>query text` per line.
    #[arg(long)]
    pub topics: PathBuf,
    /// `usecase1`, `dfr-grid`, `dfr-grid+bm25`, `ib-grid`, `@file`, or specs separated by spaces.
    #[arg(long, default_value = "usecase1")]
    pub configs: String,
    /// Retrieval depth.
    #[arg(long, default_value_t = simtune_core::DEFAULT_DEPTH as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory written by `select`.
    #[arg(long)]
    pub run_dir: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// Where to write `eval.json` and `eval.tsv`; defaults to the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenSyntheticArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_docs: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_queries: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum QppCommand {
    /// Per (query, configuration) likelihood, NQC and corpus score, or query weights.
    Dump(QppDumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpTable {
    Likelihoods,
    Weights,
    Focus,
}

#[derive(Debug, Args)]
pub struct QppDumpArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, value_enum, default_value = "likelihoods")]
    pub table: DumpTable,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status for command-line usage errors.
pub const EXIT_USAGE: u8 = 2;
/// Exit status when selection cannot proceed on the given benchmark.
pub const EXIT_SELECTION: u8 = 3;
/// Exit status when labeled evaluation cannot proceed.
pub const EXIT_EVAL: u8 = 4;

/// Maps a command error to the process exit status.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<simtune_core::selector::SelectionError>().is_some() {
        EXIT_SELECTION
    } else if err.downcast_ref::<simtune_core::eval::EvalError>().is_some() {
        EXIT_EVAL
    } else if err.downcast_ref::<clap::Error>().is_some() {
        EXIT_USAGE
    } else {
        1
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with<I, T>(args: I, files: &dyn files::FileSource, stdout: &mut dyn Write) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    run(&cli.command, files, stdout)
}
