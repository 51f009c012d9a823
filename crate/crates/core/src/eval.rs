//! ROC/AUC and the three experiment designs: agreement grid, four-model
//! comparison and cross-region portability.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{AgreementLevel, Case, Decision, Region};
use crate::error::EvalError;
use crate::features::{FeatureMatrix, FeatureVector, ModelKind};
use crate::forest::{fit_forest, Dataset, TrainConfig};
use crate::valence::ValenceLexicon;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores >= threshold are called positive; `None` for the (0,0) origin.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Area under the curve by the trapezoidal rule.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "fpr,tpr,threshold")?;
        for p in &self.points {
            match p.threshold {
                Some(t) => writeln!(w, "{},{},{}", p.fpr, p.tpr, t)?,
                None => writeln!(w, "{},{},inf", p.fpr, p.tpr)?,
            }
        }
        Ok(())
    }
}

/// ROC curve over every distinct score (tied scores share one point) and its
/// trapezoidal AUC. `true` labels are positives.
pub fn roc_auc(scores: &[(f64, bool)]) -> Result<(RocCurve, f64), EvalError> {
    if let Some(&(s, _)) = scores.iter().find(|(s, _)| !s.is_finite()) {
        return Err(EvalError::NonFinite(s));
    }
    let positives = scores.iter().filter(|(_, l)| *l).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass { positives, negatives });
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: None }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold: Some(s),
        });
    }
    let curve = RocCurve { points };
    let auc = curve.area().clamp(0.0, 1.0);
    Ok((curve, auc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Punish vs pardon.
    Decision,
    /// Overwhelming-majority pardons vs everything else.
    OmPardon,
    /// Overwhelming-majority punishments vs everything else.
    OmPunish,
}

impl Task {
    pub fn positive(self, decision: Decision, agreement: AgreementLevel) -> bool {
        let om = agreement == AgreementLevel::OverwhelmingMajority;
        match self {
            Task::Decision => decision == Decision::Punish,
            Task::OmPardon => om && decision == Decision::Pardon,
            Task::OmPunish => om && decision == Decision::Punish,
        }
    }

    pub fn label(self, row: &FeatureVector) -> bool {
        self.positive(row.label, row.agreement)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Decision => "decision",
            Task::OmPardon => "om_pardon",
            Task::OmPunish => "om_punish",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "decision" => Ok(Task::Decision),
            "om_pardon" => Ok(Task::OmPardon),
            "om_punish" => Ok(Task::OmPunish),
            _ => Err(format!("unknown task `{s}` (decision, om-pardon, om-punish)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Test,
    All,
}

/// Which rows an experiment trained or tested on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selector {
    pub partition: Partition,
    pub region: Option<Region>,
    pub agreement: Option<AgreementLevel>,
}

impl Selector {
    fn new(partition: Partition) -> Self {
        Self { partition, region: None, agreement: None }
    }

    fn agreement(mut self, a: AgreementLevel) -> Self {
        self.agreement = Some(a);
        self
    }

    fn region(mut self, r: Option<Region>) -> Self {
        self.region = r;
        self
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = match self.partition {
            Partition::Train => "train",
            Partition::Test => "test",
            Partition::All => "all",
        };
        f.write_str(part)?;
        if let Some(r) = self.region {
            write!(f, "/{}", r.as_str())?;
        }
        if let Some(a) = self.agreement {
            write!(f, "/{}", a.short())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub forest: TrainConfig,
    pub split_seed: u64,
    pub test_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { forest: TrainConfig::default(), split_seed: 0, test_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub task: Task,
    pub model: ModelKind,
    pub train_selector: Selector,
    pub test_selector: Selector,
    pub n_features: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub auc: f64,
    pub curve: RocCurve,
    pub config: EvalConfig,
    pub data_digest: String,
    pub fingerprint: String,
}

impl ExperimentReport {
    pub fn auc_display(&self) -> String {
        format!("{:.4}", self.auc)
    }
}

pub fn write_reports_csv<W: Write>(mut w: W, reports: &[ExperimentReport]) -> std::io::Result<()> {
    writeln!(w, "task,model,train_sel,test_sel,auc")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.task,
            r.model,
            r.train_selector,
            r.test_selector,
            r.auc_display()
        )?;
    }
    Ok(())
}

/// SHA-256 over the feature values and labels of a matrix.
pub fn matrix_digest(m: &FeatureMatrix) -> String {
    let mut h = Sha256::new();
    h.update(m.schema.tag().as_bytes());
    for r in &m.rows {
        for v in &r.values {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update([r.label as u8, r.agreement as u8, r.region as u8]);
    }
    hex::encode(h.finalize())
}

fn fingerprint(parts: &serde_json::Value) -> String {
    // Value maps are key-sorted, so this is canonical.
    hex::encode(Sha256::digest(parts.to_string().as_bytes()))
}

/// Seeded split that keeps each stratum's proportions: within every stratum
/// key, `round(test_fraction * n)` rows go to the test side.
pub fn stratified_split<K: Ord + Copy>(
    keys: &[K],
    test_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut strata: std::collections::BTreeMap<K, Vec<usize>> = Default::default();
    for (i, &k) in keys.iter().enumerate() {
        strata.entry(k).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (_, mut idx) in strata {
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn subset(m: &FeatureMatrix, idx: impl IntoIterator<Item = usize>) -> FeatureMatrix {
    FeatureMatrix { schema: m.schema.clone(), rows: idx.into_iter().map(|i| m.rows[i].clone()).collect() }
}

fn require_both(m: &FeatureMatrix, task: Task, what: impl Fn() -> String) -> Result<(), EvalError> {
    let pos = m.rows.iter().filter(|r| task.label(r)).count();
    if pos == 0 {
        return Err(EvalError::EmptyStratum(format!("{} has no positive cases", what())));
    }
    if pos == m.rows.len() {
        return Err(EvalError::EmptyStratum(format!("{} has no negative cases", what())));
    }
    Ok(())
}

struct Run<'a> {
    experiment: &'static str,
    task: Task,
    train: &'a FeatureMatrix,
    test: &'a FeatureMatrix,
    train_selector: Selector,
    test_selector: Selector,
    data_digest: &'a str,
}

fn run_one(run: Run<'_>, config: &EvalConfig) -> Result<ExperimentReport, EvalError> {
    if run.train.schema.tag() != run.test.schema.tag() {
        return Err(EvalError::SchemaMismatch { train: run.train.schema.tag(), test: run.test.schema.tag() });
    }
    let train = Dataset::from_matrix(run.train, |r| run.task.label(r));
    let test = Dataset::from_matrix(run.test, |r| run.task.label(r));
    let forest = fit_forest(&train, &config.forest)?;
    let scores = forest.predict_dataset(&test)?;
    let pairs: Vec<(f64, bool)> = scores.into_iter().zip(test.labels().iter().copied()).collect();
    let (curve, auc) = roc_auc(&pairs)?;
    let model = run.train.schema.model;
    let fp = fingerprint(&serde_json::json!({
        "experiment": run.experiment,
        "task": run.task,
        "model": model,
        "train_selector": run.train_selector,
        "test_selector": run.test_selector,
        "config": config,
        "data_digest": run.data_digest,
    }));
    Ok(ExperimentReport {
        experiment: run.experiment.to_string(),
        task: run.task,
        model,
        train_selector: run.train_selector,
        test_selector: run.test_selector,
        n_features: train.n_features(),
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        auc,
        curve,
        config: config.clone(),
        data_digest: run.data_digest.to_string(),
        fingerprint: fp,
    })
}

/// Forests grown on one agreement level, each tested on every level:
/// 9 reports ordered by (train level, test level).
pub fn run_agreement_grid(
    cases: &[Case],
    lexicon: &ValenceLexicon,
    model: ModelKind,
    config: &EvalConfig,
) -> Result<Vec<ExperimentReport>, EvalError> {
    let matrix = FeatureMatrix::extract(cases, lexicon, model);
    agreement_grid_on(&matrix, config)
}

pub fn agreement_grid_on(
    matrix: &FeatureMatrix,
    config: &EvalConfig,
) -> Result<Vec<ExperimentReport>, EvalError> {
    let task = Task::Decision;
    let digest = matrix_digest(matrix);
    let keys: Vec<_> = matrix.rows.iter().map(|r| (r.agreement, r.label)).collect();
    let (train_idx, test_idx) = stratified_split(&keys, config.test_fraction, config.split_seed);
    let cell = |idx: &[usize], a: AgreementLevel| {
        subset(matrix, idx.iter().copied().filter(|&i| matrix.rows[i].agreement == a))
    };
    let trains: Vec<_> = AgreementLevel::ALL.iter().map(|&a| cell(&train_idx, a)).collect();
    let tests: Vec<_> = AgreementLevel::ALL.iter().map(|&a| cell(&test_idx, a)).collect();
    for (i, &a) in AgreementLevel::ALL.iter().enumerate() {
        require_both(&trains[i], task, || format!("train agreement={a}"))?;
        require_both(&tests[i], task, || format!("test agreement={a}"))?;
    }
    let mut out = Vec::with_capacity(9);
    for (i, &ta) in AgreementLevel::ALL.iter().enumerate() {
        let train = Dataset::from_matrix(&trains[i], |r| task.label(r));
        let forest = fit_forest(&train, &config.forest)?;
        for (j, &sa) in AgreementLevel::ALL.iter().enumerate() {
            let test = Dataset::from_matrix(&tests[j], |r| task.label(r));
            let scores = forest.predict_dataset(&test)?;
            let pairs: Vec<_> = scores.into_iter().zip(test.labels().iter().copied()).collect();
            let (curve, auc) = roc_auc(&pairs)?;
            let train_selector = Selector::new(Partition::Train).agreement(ta);
            let test_selector = Selector::new(Partition::Test).agreement(sa);
            let fp = fingerprint(&serde_json::json!({
                "experiment": "agreement_grid",
                "task": task,
                "model": matrix.schema.model,
                "train_selector": train_selector,
                "test_selector": test_selector,
                "config": config,
                "data_digest": digest,
            }));
            out.push(ExperimentReport {
                experiment: "agreement_grid".into(),
                task,
                model: matrix.schema.model,
                train_selector,
                test_selector,
                n_features: train.n_features(),
                n_train: train.n_rows(),
                n_test: test.n_rows(),
                auc,
                curve,
                config: config.clone(),
                data_digest: digest.clone(),
                fingerprint: fp,
            });
        }
    }
    Ok(out)
}

/// Performance, report, chat and full models on one shared split.
pub fn run_model_comparison(
    cases: &[Case],
    lexicon: &ValenceLexicon,
    task: Task,
    config: &EvalConfig,
) -> Result<Vec<ExperimentReport>, EvalError> {
    let full = FeatureMatrix::extract(cases, lexicon, ModelKind::Full);
    model_comparison_on(&full, task, config)
}

pub fn model_comparison_on(
    full: &FeatureMatrix,
    task: Task,
    config: &EvalConfig,
) -> Result<Vec<ExperimentReport>, EvalError> {
    let digest = matrix_digest(full);
    let keys: Vec<bool> = full.rows.iter().map(|r| task.label(r)).collect();
    let (train_idx, test_idx) = stratified_split(&keys, config.test_fraction, config.split_seed);
    let train_full = subset(full, train_idx);
    let test_full = subset(full, test_idx);
    require_both(&train_full, task, || "train split".into())?;
    require_both(&test_full, task, || "test split".into())?;
    ModelKind::ALL
        .iter()
        .map(|&model| {
            let train = train_full.select(model);
            let test = test_full.select(model);
            run_one(
                Run {
                    experiment: "model_comparison",
                    task,
                    train: &train,
                    test: &test,
                    train_selector: Selector::new(Partition::Train),
                    test_selector: Selector::new(Partition::Test),
                    data_digest: &digest,
                },
                config,
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortabilityOptions {
    pub task: Task,
    pub model: ModelKind,
    /// Zero the test side's chat features (regions the lexicon cannot read).
    pub zero_test_chat: bool,
}

/// Trains on every case of corpus A and tests on every case of corpus B.
pub fn run_portability(
    train_cases: &[Case],
    test_cases: &[Case],
    lexicon: &ValenceLexicon,
    options: PortabilityOptions,
    config: &EvalConfig,
) -> Result<ExperimentReport, EvalError> {
    let train = FeatureMatrix::extract(train_cases, lexicon, options.model);
    let test = FeatureMatrix::extract(test_cases, lexicon, options.model);
    portability_on(&train, &test, options, config)
}

pub fn portability_on(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    options: PortabilityOptions,
    config: &EvalConfig,
) -> Result<ExperimentReport, EvalError> {
    if train.schema.tag() != test.schema.tag() {
        return Err(EvalError::SchemaMismatch { train: train.schema.tag(), test: test.schema.tag() });
    }
    let train = if train.schema.model == options.model { train.clone() } else { train.select(options.model) };
    let mut test = if test.schema.model == options.model { test.clone() } else { test.select(options.model) };
    if options.zero_test_chat {
        test.zero_chat();
    }
    require_both(&train, options.task, || "train corpus".into())?;
    require_both(&test, options.task, || "test corpus".into())?;
    let single_region = |m: &FeatureMatrix| {
        let first = m.rows.first().map(|r| r.region);
        first.filter(|&r| m.rows.iter().all(|x| x.region == r))
    };
    let mut digest = Sha256::new();
    digest.update(matrix_digest(&train));
    digest.update(matrix_digest(&test));
    digest.update([options.zero_test_chat as u8]);
    let digest = hex::encode(digest.finalize());
    run_one(
        Run {
            experiment: if options.zero_test_chat { "portability_zero_chat" } else { "portability" },
            task: options.task,
            train: &train,
            test: &test,
            train_selector: Selector::new(Partition::All).region(single_region(&train)),
            test_selector: Selector::new(Partition::All).region(single_region(&test)),
            data_digest: &digest,
        },
        config,
    )
}
