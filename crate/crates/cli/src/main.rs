mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Format;

#[derive(Debug, Parser)]
#[command(name = "hetblock", version, about = "Learn and run DNF blocking schemes over heterogeneous dataset pairs")]
pub struct Cli {
    /// JSON pipeline configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: current directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub left: Option<PathBuf>,
    #[arg(long)]
    pub right: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub left_format: Option<Format>,
    #[arg(long, value_enum)]
    pub right_format: Option<Format>,
    /// Id column of a left CSV (default `id`; `subject` for property tables).
    #[arg(long)]
    pub left_id: Option<String>,
    #[arg(long)]
    pub right_id: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MatcherArgs {
    /// Duplicates averaged into the similarity matrix.
    #[arg(long)]
    pub t: Option<usize>,
    /// Jaro–Winkler threshold of Soft-TFIDF.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Duplicates handed to the learner.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LearnerArgs {
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub term_cap: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StyleArg {
    Tabular,
    Rdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    NtToCsv,
    CsvToNt,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset pair with ground truth.
    Generate {
        #[arg(long, default_value_t = 300)]
        n_left: usize,
        #[arg(long, default_value_t = 300)]
        n_right: usize,
        #[arg(long, default_value_t = 100)]
        n_dups: usize,
        #[arg(long, value_enum, default_value_t = StyleArg::Tabular)]
        left_style: StyleArg,
        #[arg(long, value_enum, default_value_t = StyleArg::Tabular)]
        right_style: StyleArg,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long)]
        field_split: bool,
    },
    /// Convert between N-Triples and property-table CSV.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum)]
        direction: Direction,
    },
    /// Discover duplicates and field mappings.
    Match {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        matcher: MatcherArgs,
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        truth_mapping: Option<PathBuf>,
    },
    /// Learn a blocking scheme from duplicates and mappings.
    Learn {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        #[arg(long)]
        duplicates: PathBuf,
        #[arg(long)]
        mappings: PathBuf,
    },
    /// Run a scheme and write the candidate set.
    Block {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long)]
        block_cap: Option<usize>,
    },
    /// Compute RR, PC, PQ and f-score of a candidate set.
    Evaluate {
        #[arg(long)]
        gamma: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        n_left: Option<usize>,
        #[arg(long)]
        n_right: Option<usize>,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Match, learn, block and evaluate in one run.
    Pipeline {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        matcher: MatcherArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        /// User mapping file; skips the matcher.
        #[arg(long)]
        mappings: Option<PathBuf>,
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        truth_mapping: Option<PathBuf>,
        #[arg(long)]
        block_cap: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
