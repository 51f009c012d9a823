//! `tribunal`: generate, featurize, train and evaluate verdict predictors.
//!
//! Exit status: 0 success, 1 usage error, 2 data or validation error,
//! 3 internal invariant failure. Logs go to stderr; `-v` raises verbosity.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tribunal_core::eval::Task;
use tribunal_core::{ModelKind, Region};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "tribunal", version, about = "Crowdsourced toxic-behavior verdict prediction")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with ground truth.
    Gen(GenArgs),
    /// Check every case of a cases.jsonl file.
    Validate(ValidateArgs),
    /// Case, match and report counts per region.
    Summarize(SummarizeArgs),
    /// Write the feature matrix CSV and schema manifest.
    Extract(ExtractArgs),
    /// Grow a random forest on a feature matrix.
    Train(TrainArgs),
    /// Score a feature matrix with a trained model.
    Predict(PredictArgs),
    /// Rank features by information gain.
    Rank(RankArgs),
    /// Train on each agreement level, test on every level.
    EvalGrid(EvalGridArgs),
    /// Compare performance, report, chat and full models.
    EvalModels(EvalModelsArgs),
    /// Train on one corpus, test on another.
    EvalPortability(EvalPortabilityArgs),
    /// Crowd cost and victim-exposure estimates.
    Impact(ImpactArgs),
}

/// Flags shared by every forest-growing command.
#[derive(Debug, Args, Serialize)]
struct ForestFlags {
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    min_leaf: Option<usize>,
    #[arg(long)]
    features_per_split: Option<usize>,
    #[arg(long)]
    bootstrap: Option<bool>,
    /// Forest seed.
    #[arg(long, alias = "seed")]
    rng_seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
struct SplitFlags {
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    test_fraction: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct GenArgs {
    /// JSON file whose keys mirror these flags.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, alias = "n")]
    n_cases: Option<usize>,
    #[arg(long, alias = "seed")]
    rng_seed: Option<u64>,
    #[arg(long)]
    region: Option<Region>,
    #[arg(long)]
    punish_rate: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    agreement_mix: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    label_noise: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    clarity: Option<Vec<f64>>,
    #[arg(long)]
    report_link: Option<f64>,
    #[arg(long)]
    comment_link: Option<f64>,
    #[arg(long)]
    chat_link: Option<f64>,
    #[arg(long)]
    deaths_elevation: Option<f64>,
    #[arg(long)]
    report_shift: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    category_weights: Option<Vec<f64>>,
    /// Output directory for cases.jsonl and ground_truth.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ValidateArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SummarizeArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// One or more cases.jsonl files.
    #[arg(long, num_args = 1..)]
    input: Option<Vec<PathBuf>>,
    /// `table` or `json`.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ExtractArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    /// Feature CSV path; the schema manifest goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    #[command(flatten)]
    #[serde(flatten)]
    forest: ForestFlags,
    /// Model JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    /// Predictions CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct RankArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Feature CSV to rank.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Or a cases.jsonl file, featurized on the fly.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct EvalGridArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[command(flatten)]
    #[serde(flatten)]
    split: SplitFlags,
    #[command(flatten)]
    #[serde(flatten)]
    forest: ForestFlags,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct EvalModelsArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    #[command(flatten)]
    #[serde(flatten)]
    split: SplitFlags,
    #[command(flatten)]
    #[serde(flatten)]
    forest: ForestFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct EvalPortabilityArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Training corpus (cases.jsonl).
    #[arg(long)]
    train: Option<PathBuf>,
    /// Test corpus (cases.jsonl).
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    model: Option<ModelKind>,
    /// Zero the test corpus's chat features.
    #[arg(long)]
    zero_test_chat: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    forest: ForestFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ImpactArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Round the per-vote price to whole cents first.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    paper_mode: Option<bool>,
    /// `table` or `json`.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    ip_per_vote: Option<f64>,
    #[arg(long)]
    champion_ip: Option<f64>,
    #[arg(long)]
    champion_rp: Option<f64>,
    #[arg(long)]
    usd_per_bundle: Option<f64>,
    #[arg(long)]
    rp_per_bundle: Option<f64>,
    #[arg(long)]
    total_votes: Option<f64>,
    #[arg(long)]
    toxic_players: Option<f64>,
    #[arg(long)]
    votes_first_year: Option<f64>,
    #[arg(long)]
    votes_per_second: Option<f64>,
    #[arg(long)]
    majority_vote_fraction: Option<f64>,
    #[arg(long)]
    daily_players: Option<f64>,
    #[arg(long)]
    minutes_per_day: Option<f64>,
    #[arg(long)]
    match_minutes: Option<f64>,
    #[arg(long)]
    matches_per_day: Option<f64>,
    #[arg(long)]
    innocents_per_match: Option<f64>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => commands::gen(a.config.as_deref(), &a),
        Command::Validate(a) => commands::validate(a.config.as_deref(), &a),
        Command::Summarize(a) => commands::summarize(a.config.as_deref(), &a),
        Command::Extract(a) => commands::extract(a.config.as_deref(), &a),
        Command::Train(a) => commands::train(a.config.as_deref(), &a),
        Command::Predict(a) => commands::predict(a.config.as_deref(), &a),
        Command::Rank(a) => commands::rank(a.config.as_deref(), &a),
        Command::EvalGrid(a) => commands::eval_grid(a.config.as_deref(), &a),
        Command::EvalModels(a) => commands::eval_models(a.config.as_deref(), &a),
        Command::EvalPortability(a) => commands::eval_portability(a.config.as_deref(), &a),
        Command::Impact(a) => commands::impact(a.config.as_deref(), &a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    if let Err(e) = run(cli) {
        eprintln!("tribunal: {e}");
        std::process::exit(e.exit_code());
    }
}
