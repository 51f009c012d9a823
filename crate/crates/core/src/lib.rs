//! Prediction of crowdsourced toxic-behavior verdicts from reported matches.
//!
//! The pipeline: load or generate [`domain::Case`]s, map each to a fixed
//! 452-value feature vector ([`features`]), grow random forests ([`forest`])
//! and measure them with ROC/AUC experiments ([`eval`]). [`synth`] produces
//! labeled corpora with known planted signal; [`impact`] holds the crowd
//! cost and victim-exposure arithmetic.

pub mod domain;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod impact;
pub mod synth;
pub mod valence;

pub use domain::{AgreementLevel, Case, Decision, Region, ReportCategory};
pub use error::{DataError, EvalError, FeatureError, ForestError, LexiconError, SynthError};
pub use features::{FeatureMatrix, FeatureSchema, FeatureVector, ModelKind};
pub use forest::{Dataset, RandomForest, TrainConfig};
pub use valence::ValenceLexicon;
