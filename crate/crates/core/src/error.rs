use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::domain::Violation;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Read(#[from] std::io::Error),
    #[error("line {line}: malformed case: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: invalid case: {}", join(.violations))]
    Invalid { line: usize, violations: Vec<Violation> },
    #[error("{0}")]
    Parse(String),
}

impl DataError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io { path: path.to_path_buf(), source }
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed row `{row}` (expected `word,valence`)")]
    Malformed { line: usize, row: String },
    #[error("line {line}: valence {value} for `{word}` outside [1, 9]")]
    OutOfRange { line: usize, word: String, value: f64 },
    #[error("line {line}: duplicate word `{word}`")]
    Duplicate { line: usize, word: String },
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("victim scope is only defined for communication categories, got {0}")]
    NotCommunication(crate::domain::ReportCategory),
    #[error("feature matrix: {0}")]
    Matrix(String),
}

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("gini impurity of an empty label set")]
    EmptyLabels,
    #[error("training set has only {0} labels; both punish and pardon rows are required")]
    SingleClass(&'static str),
    #[error("training set needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("expected a vector of {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("model schema `{model}` does not match feature schema `{features}`")]
    SchemaMismatch { model: String, features: String },
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("roc needs both classes, got {positives} positives and {negatives} negatives")]
    SingleClass { positives: usize, negatives: usize },
    #[error("score {0} is not a finite number")]
    NonFinite(f64),
    #[error("empty stratum: {0}")]
    EmptyStratum(String),
    #[error("schema mismatch: train `{train}` vs test `{test}`")]
    SchemaMismatch { train: String, test: String },
    #[error(transparent)]
    Forest(#[from] ForestError),
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("valence target {target} is infeasible: the lexicon word pools span [{low}, {high}]")]
    Infeasible { target: f64, low: f64, high: f64 },
}

#[derive(Debug, Error)]
pub enum ImpactError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}
