use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "damteval",
    version,
    about = "Difficulty-aware MT evaluation and metric meta-evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every system: BERTScore and difficulty-aware BERTScore per system.
    Score(ScoreArgs),
    /// Absolute system-level correlations of metric columns with human scores.
    Correlate(CorrelateArgs),
    /// Signed correlations on the top-k systems for a range of k.
    Sweep(SweepArgs),
    /// Export token difficulty weights or their histogram.
    Difficulty(DifficultyArgs),
    /// Metric ranks against human ranks with per-system rank differences.
    RankReport(RankReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Tsv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tau {
    A,
    B,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "tsv")]
    pub output: OutputFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Reference segments, one per line.
    #[arg(long)]
    pub refs: PathBuf,
    /// Directory of hypothesis files; the filename stem is the system name.
    #[arg(long, required_unless_present = "manifest")]
    pub hyps_dir: Option<PathBuf>,
    /// EMB1 embeddings of the reference.
    #[arg(long)]
    pub emb_ref: PathBuf,
    /// Directory holding `<system>.emb1` for every system.
    #[arg(long, required_unless_present = "manifest")]
    pub emb_dir: Option<PathBuf>,
    /// TSV of `system<TAB>hypothesis path<TAB>EMB1 path`, overriding the directories.
    #[arg(long, conflicts_with_all = ["hyps_dir", "emb_dir"])]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub subset: SubsetArgs,
}

/// Restricts the system set to the best systems by human score.
#[derive(Debug, Args)]
pub struct SubsetArgs {
    /// Human scores TSV used to pick the top systems.
    #[arg(long, requires = "top")]
    pub human: Option<PathBuf>,
    #[command(flatten)]
    pub top: TopArgs,
}

#[derive(Debug, Args)]
#[group(id = "top", multiple = false)]
pub struct TopArgs {
    /// Keep floor(K × F) systems (at least 2).
    #[arg(long)]
    pub top_frac: Option<f64>,
    /// Keep the best K systems.
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Report vanilla BERTScore only.
    #[arg(long)]
    pub no_difficulty: bool,
    /// Leave the scored system out of its own difficulty average.
    #[arg(long, conflicts_with = "no_difficulty")]
    pub exclude_self: bool,
    /// Add a corpus BLEU column computed from the text files.
    #[arg(long)]
    pub bleu: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MetaArgs {
    /// Metric scores TSV: `system` column followed by one column per metric.
    #[arg(long)]
    pub scores: PathBuf,
    /// Human scores TSV: `system<TAB>score`.
    #[arg(long)]
    pub human: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub meta: MetaArgs,
    #[command(flatten)]
    pub top: TopArgs,
    #[arg(long, value_enum, default_value = "a")]
    pub tau: Tau,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub meta: MetaArgs,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    /// Defaults to the number of systems.
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long, value_enum, default_value = "a")]
    pub tau: Tau,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DifficultyArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = 50)]
    pub histogram_bins: usize,
    /// Emit one row per reference token instead of the histogram.
    #[arg(long)]
    pub per_token: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RankReportArgs {
    #[command(flatten)]
    pub meta: MetaArgs,
    /// `METRIC=lower` or `METRIC=higher`; metrics default to higher-better.
    #[arg(long = "direction", value_name = "METRIC=DIR")]
    pub directions: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}
