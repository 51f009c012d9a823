use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tribunal_core::domain::{load_dataset, summarize_dataset, parse_case, validate_case, write_cases, Case};
use tribunal_core::eval::{
    self, EvalConfig, ExperimentReport, PortabilityOptions, Task,
};
use tribunal_core::forest::{self, fit_forest, DEFAULT_BINS};
use tribunal_core::impact::{impact_report, EconomyParams, PopulationParams, ThroughputParams};
use tribunal_core::synth::{generate_dataset, GeneratorConfig};
use tribunal_core::{Dataset, FeatureMatrix, ModelKind, RandomForest, TrainConfig, ValenceLexicon};

use crate::config::resolve;
use crate::error::CliError;
use crate::manifest::{manifest_path_for, RunManifest};
use crate::{
    EvalGridArgs, EvalModelsArgs, EvalPortabilityArgs, ExtractArgs, GenArgs, ImpactArgs,
    PredictArgs, RankArgs, SummarizeArgs, TrainArgs, ValidateArgs,
};

fn required<T>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing required `--{}`", key.replace('_', "-"))))
}

fn lexicon(path: Option<&Path>, m: &mut RunManifest) -> Result<ValenceLexicon, CliError> {
    match path {
        Some(p) => {
            m.input(p)?;
            Ok(ValenceLexicon::load(p)?)
        }
        None => {
            log::warn!("no --lexicon given; using the built-in test lexicon");
            Ok(ValenceLexicon::builtin_test())
        }
    }
}

fn cases(path: &Path, m: &mut RunManifest) -> Result<Vec<Case>, CliError> {
    m.input(path)?;
    let cases = load_dataset(path)?;
    log::info!("loaded {} cases from {}", cases.len(), path.display());
    Ok(cases)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn read_matrix(path: &Path, m: &mut RunManifest) -> Result<FeatureMatrix, CliError> {
    m.input(path)?;
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(FeatureMatrix::read_csv(BufReader::new(f))?)
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Data(format!("stdout: {e}")))
        }
        _ => Ok(()),
    }
}

fn to_json<T: Serialize>(t: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(t).map_err(|e| CliError::Internal(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct GenParams {
    #[serde(flatten)]
    generator: GeneratorConfig,
    out: Option<PathBuf>,
    lexicon: Option<PathBuf>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            out: None,
            lexicon: None,
        }
    }
}

pub fn gen(config: Option<&Path>, args: &GenArgs) -> Result<(), CliError> {
    let (p, resolved): (GenParams, _) = resolve(config, args)?;
    let out = required(p.out, "out")?;
    let mut m = RunManifest::new("gen", resolved).seed("rng_seed", p.generator.rng_seed);
    let lex = lexicon(p.lexicon.as_deref(), &mut m)?;
    let corpus = generate_dataset(&p.generator, &lex)?;
    ensure_dir(&out)?;
    let cases_path = out.join("cases.jsonl");
    write_with(&cases_path, |w| write_cases(w, &corpus.cases))?;
    let truth_path = out.join("ground_truth.jsonl");
    write_with(&truth_path, |w| {
        for g in &corpus.ground_truth {
            serde_json::to_writer(&mut *w, g)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })?;
    m.output(&cases_path)?;
    m.output(&truth_path)?;
    m.write(&out.join("manifest.json"))?;
    log::info!("wrote {} cases to {}", corpus.cases.len(), cases_path.display());
    Ok(())
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct ValidateParams {
    input: Option<PathBuf>,
    manifest: Option<PathBuf>,
}

/// Reports every malformed or invalid line, not just the first.
pub fn validate(config: Option<&Path>, args: &ValidateArgs) -> Result<(), CliError> {
    let (p, resolved): (ValidateParams, _) = resolve(config, args)?;
    let input = required(p.input, "input")?;
    let text = std::fs::read_to_string(&input).map_err(|e| CliError::io(&input, e))?;
    let (mut ok, mut bad) = (0usize, 0usize);
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_case(line) {
            Err(msg) => {
                bad += 1;
                eprintln!("line {}: malformed case: {msg}", i + 1);
            }
            Ok(case) => {
                let v = validate_case(&case);
                if v.is_empty() {
                    ok += 1;
                } else {
                    bad += 1;
                    for x in v {
                        eprintln!("line {} ({}): {x}", i + 1, case.case_id);
                    }
                }
            }
        }
    }
    if let Some(path) = p.manifest {
        let mut m = RunManifest::new("validate", resolved);
        m.input(&input)?;
        m.write(&path)?;
    }
    if bad > 0 {
        return Err(CliError::Data(format!("{bad} invalid case(s), {ok} valid")));
    }
    emit(&format!("{ok} cases valid\n"))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct SummarizeParams {
    input: Vec<PathBuf>,
    format: String,
    manifest: Option<PathBuf>,
}

impl Default for SummarizeParams {
    fn default() -> Self {
        Self { input: Vec::new(), format: "table".into(), manifest: None }
    }
}

pub fn summarize(config: Option<&Path>, args: &SummarizeArgs) -> Result<(), CliError> {
    let (p, resolved): (SummarizeParams, _) = resolve(config, args)?;
    if p.input.is_empty() {
        return Err(CliError::Usage("missing required `--input`".into()));
    }
    let mut m = RunManifest::new("summarize", resolved);
    let mut all = Vec::new();
    for path in &p.input {
        all.extend(cases(path, &mut m)?);
    }
    let summary = summarize_dataset(&all);
    match p.format.as_str() {
        "table" => emit(&summary.to_table())?,
        "json" => emit(&(to_json(&summary.to_json())? + "\n"))?,
        other => return Err(CliError::Usage(format!("unknown format `{other}` (table, json)"))),
    }
    if let Some(path) = p.manifest {
        m.write(&path)?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct ExtractParams {
    input: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    model: ModelKind,
    out: Option<PathBuf>,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self { input: None, lexicon: None, model: ModelKind::Full, out: None }
    }
}

/// `features.csv` -> `features.schema.json`.
fn schema_path(features: &Path) -> PathBuf {
    features.with_extension("schema.json")
}

pub fn extract(config: Option<&Path>, args: &ExtractArgs) -> Result<(), CliError> {
    let (p, resolved): (ExtractParams, _) = resolve(config, args)?;
    let input = required(p.input, "input")?;
    let out = required(p.out, "out")?;
    let mut m = RunManifest::new("extract", resolved);
    let lex = lexicon(p.lexicon.as_deref(), &mut m)?;
    let cases = cases(&input, &mut m)?;
    let matrix = FeatureMatrix::extract(&cases, &lex, p.model);
    write_with(&out, |w| matrix.write_csv(w))?;
    let schema = schema_path(&out);
    std::fs::write(&schema, to_json(&matrix.schema.manifest())? + "\n")
        .map_err(|e| CliError::io(&schema, e))?;
    m.output(&out)?;
    m.output(&schema)?;
    m.write(&manifest_path_for(&out))?;
    log::info!("{} rows x {} features -> {}", matrix.len(), matrix.schema.len(), out.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct TrainParams {
    features: Option<PathBuf>,
    task: Task,
    #[serde(flatten)]
    forest: TrainConfig,
    out: Option<PathBuf>,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self { features: None, task: Task::Decision, forest: TrainConfig::default(), out: None }
    }
}

pub fn train(config: Option<&Path>, args: &TrainArgs) -> Result<(), CliError> {
    let (p, resolved): (TrainParams, _) = resolve(config, args)?;
    let features = required(p.features, "features")?;
    let out = required(p.out, "out")?;
    let mut m = RunManifest::new("train", resolved).seed("rng_seed", p.forest.rng_seed);
    let matrix = read_matrix(&features, &mut m)?;
    let data = Dataset::from_matrix(&matrix, |r| p.task.label(r));
    let model = fit_forest(&data, &p.forest)?;
    std::fs::write(&out, model.to_json()).map_err(|e| CliError::io(&out, e))?;
    m.output(&out)?;
    m.write(&manifest_path_for(&out))?;
    log::info!("{} trees on {} rows -> {}", model.trees.len(), data.n_rows(), out.display());
    Ok(())
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct PredictParams {
    model: Option<PathBuf>,
    features: Option<PathBuf>,
    out: Option<PathBuf>,
}

pub fn predict(config: Option<&Path>, args: &PredictArgs) -> Result<(), CliError> {
    let (p, resolved): (PredictParams, _) = resolve(config, args)?;
    let model_path = required(p.model, "model")?;
    let features = required(p.features, "features")?;
    let mut m = RunManifest::new("predict", resolved);
    m.input(&model_path)?;
    let text = std::fs::read_to_string(&model_path).map_err(|e| CliError::io(&model_path, e))?;
    let model = RandomForest::from_json(&text)?;
    let matrix = read_matrix(&features, &mut m)?;
    model.check_schema(&matrix.schema.tag())?;
    let data = Dataset::from_matrix(&matrix, |r| r.label.is_punish());
    let scores = model.predict_dataset(&data)?;
    let body = |w: &mut dyn Write| -> std::io::Result<()> {
        writeln!(w, "row,score,label")?;
        for (i, (s, r)) in scores.iter().zip(&matrix.rows).enumerate() {
            writeln!(w, "{i},{},{}", tribunal_core::features::format_sig9(*s), r.label.as_str())?;
        }
        Ok(())
    };
    match p.out {
        Some(out) => {
            write_with(&out, |w| body(w))?;
            m.output(&out)?;
            m.write(&manifest_path_for(&out))?;
        }
        None => {
            let mut buf = Vec::new();
            body(&mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
            emit(&String::from_utf8_lossy(&buf))?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct RankParams {
    features: Option<PathBuf>,
    input: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    model: ModelKind,
    task: Task,
    bins: usize,
    top: usize,
    manifest: Option<PathBuf>,
}

impl Default for RankParams {
    fn default() -> Self {
        Self {
            features: None,
            input: None,
            lexicon: None,
            model: ModelKind::Full,
            task: Task::Decision,
            bins: DEFAULT_BINS,
            top: 20,
            manifest: None,
        }
    }
}

pub fn rank(config: Option<&Path>, args: &RankArgs) -> Result<(), CliError> {
    let (p, resolved): (RankParams, _) = resolve(config, args)?;
    if p.bins < 2 {
        return Err(CliError::Usage("bins must be >= 2".into()));
    }
    let mut m = RunManifest::new("rank", resolved);
    let matrix = match (&p.features, &p.input) {
        (Some(f), None) => read_matrix(f, &mut m)?,
        (None, Some(i)) => {
            let lex = lexicon(p.lexicon.as_deref(), &mut m)?;
            FeatureMatrix::extract(&cases(i, &mut m)?, &lex, p.model)
        }
        _ => return Err(CliError::Usage("give exactly one of `--features` or `--input`".into())),
    };
    let data = Dataset::from_matrix(&matrix, |r| p.task.label(r));
    let ranked = forest::rank_features_information_gain(&data, p.bins);
    let mut text = String::from("rank\tgain\tfeature\n");
    for (i, g) in ranked.iter().take(p.top).enumerate() {
        text.push_str(&format!("{}\t{:.6}\t{}\n", i + 1, g.gain, g.name));
    }
    emit(&text)?;
    if let Some(path) = p.manifest {
        m.write(&path)?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct EvalParams {
    input: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    model: ModelKind,
    task: Task,
    split_seed: u64,
    test_fraction: f64,
    #[serde(flatten)]
    forest: TrainConfig,
    out: Option<PathBuf>,
}

impl Default for EvalParams {
    fn default() -> Self {
        let e = EvalConfig::default();
        Self {
            input: None,
            lexicon: None,
            model: ModelKind::Full,
            task: Task::Decision,
            split_seed: e.split_seed,
            test_fraction: e.test_fraction,
            forest: e.forest,
            out: None,
        }
    }
}

impl EvalParams {
    fn eval_config(&self) -> Result<EvalConfig, CliError> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(CliError::Usage(format!(
                "test_fraction {} not in (0, 1)",
                self.test_fraction
            )));
        }
        Ok(EvalConfig {
            forest: self.forest.clone(),
            split_seed: self.split_seed,
            test_fraction: self.test_fraction,
        })
    }
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect()
}

/// One JSON and one ROC CSV per experiment, plus `reports.csv`, which is
/// also echoed to stdout.
fn write_reports(
    out: &Path,
    reports: &[ExperimentReport],
    m: &mut RunManifest,
) -> Result<(), CliError> {
    ensure_dir(out)?;
    for r in reports {
        let name = format!(
            "{}_{}_{}_{}_{}",
            r.experiment,
            r.task,
            r.model,
            slug(&r.train_selector.to_string()),
            slug(&r.test_selector.to_string())
        );
        let json = out.join(format!("{name}.json"));
        std::fs::write(&json, to_json(r)? + "\n").map_err(|e| CliError::io(&json, e))?;
        let roc = out.join(format!("roc_{name}.csv"));
        write_with(&roc, |w| r.curve.write_csv(w))?;
        m.output(&json)?;
        m.output(&roc)?;
    }
    let csv = out.join("reports.csv");
    write_with(&csv, |w| eval::write_reports_csv(w, reports))?;
    m.output(&csv)?;
    m.write(&out.join("manifest.json"))?;
    let text = std::fs::read_to_string(&csv).map_err(|e| CliError::io(&csv, e))?;
    emit(&text)?;
    Ok(())
}

pub fn eval_grid(config: Option<&Path>, args: &EvalGridArgs) -> Result<(), CliError> {
    let (p, resolved): (EvalParams, _) = resolve(config, args)?;
    if p.task != Task::Decision {
        return Err(CliError::Usage("eval-grid only runs the decision task".into()));
    }
    let input = required(p.input.clone(), "input")?;
    let out = required(p.out.clone(), "out")?;
    let ec = p.eval_config()?;
    let mut m = RunManifest::new("eval-grid", resolved)
        .seed("rng_seed", ec.forest.rng_seed)
        .seed("split_seed", ec.split_seed);
    let lex = lexicon(p.lexicon.as_deref(), &mut m)?;
    let cases = cases(&input, &mut m)?;
    let reports = eval::run_agreement_grid(&cases, &lex, p.model, &ec)?;
    write_reports(&out, &reports, &mut m)
}

pub fn eval_models(config: Option<&Path>, args: &EvalModelsArgs) -> Result<(), CliError> {
    let (p, resolved): (EvalParams, _) = resolve(config, args)?;
    if p.model != ModelKind::Full {
        return Err(CliError::Usage("eval-models always compares all models; drop `model`".into()));
    }
    let input = required(p.input.clone(), "input")?;
    let out = required(p.out.clone(), "out")?;
    let ec = p.eval_config()?;
    let mut m = RunManifest::new("eval-models", resolved)
        .seed("rng_seed", ec.forest.rng_seed)
        .seed("split_seed", ec.split_seed);
    let lex = lexicon(p.lexicon.as_deref(), &mut m)?;
    let cases = cases(&input, &mut m)?;
    let reports = eval::run_model_comparison(&cases, &lex, p.task, &ec)?;
    write_reports(&out, &reports, &mut m)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct PortabilityParams {
    train: Option<PathBuf>,
    test: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    task: Task,
    model: ModelKind,
    zero_test_chat: bool,
    #[serde(flatten)]
    forest: TrainConfig,
    out: Option<PathBuf>,
}

impl Default for PortabilityParams {
    fn default() -> Self {
        Self {
            train: None,
            test: None,
            lexicon: None,
            task: Task::Decision,
            model: ModelKind::Full,
            zero_test_chat: false,
            forest: TrainConfig::default(),
            out: None,
        }
    }
}

pub fn eval_portability(config: Option<&Path>, args: &EvalPortabilityArgs) -> Result<(), CliError> {
    let (p, resolved): (PortabilityParams, _) = resolve(config, args)?;
    let train_path = required(p.train, "train")?;
    let test_path = required(p.test, "test")?;
    let out = required(p.out, "out")?;
    let ec = EvalConfig { forest: p.forest.clone(), ..EvalConfig::default() };
    let mut m = RunManifest::new("eval-portability", resolved).seed("rng_seed", ec.forest.rng_seed);
    let lex = lexicon(p.lexicon.as_deref(), &mut m)?;
    let train = cases(&train_path, &mut m)?;
    let test = cases(&test_path, &mut m)?;
    let options = PortabilityOptions { task: p.task, model: p.model, zero_test_chat: p.zero_test_chat };
    let report = eval::run_portability(&train, &test, &lex, options, &ec)?;
    write_reports(&out, &[report], &mut m)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct ImpactParams {
    paper_mode: bool,
    format: String,
    #[serde(flatten)]
    economy: EconomyParams,
    #[serde(flatten)]
    throughput: ThroughputParams,
    #[serde(flatten)]
    population: PopulationParams,
    manifest: Option<PathBuf>,
}

impl Default for ImpactParams {
    fn default() -> Self {
        Self {
            paper_mode: false,
            format: "table".into(),
            economy: EconomyParams::default(),
            throughput: ThroughputParams::default(),
            population: PopulationParams::default(),
            manifest: None,
        }
    }
}

pub fn impact(config: Option<&Path>, args: &ImpactArgs) -> Result<(), CliError> {
    let (p, resolved): (ImpactParams, _) = resolve(config, args)?;
    let all = [
        ("ip_per_vote", p.economy.ip_per_vote),
        ("champion_ip", p.economy.champion_ip),
        ("champion_rp", p.economy.champion_rp),
        ("usd_per_bundle", p.economy.usd_per_bundle),
        ("rp_per_bundle", p.economy.rp_per_bundle),
        ("total_votes", p.throughput.total_votes),
        ("toxic_players", p.throughput.toxic_players),
        ("votes_first_year", p.throughput.votes_first_year),
        ("votes_per_second", p.throughput.votes_per_second),
        ("majority_vote_fraction", p.throughput.majority_vote_fraction),
        ("daily_players", p.population.daily_players),
        ("minutes_per_day", p.population.minutes_per_day),
        ("match_minutes", p.population.match_minutes),
        ("matches_per_day", p.population.matches_per_day),
        ("innocents_per_match", p.population.innocents_per_match),
    ];
    if let Some((k, v)) = all.iter().find(|(_, v)| !v.is_finite() || *v < 0.0) {
        return Err(CliError::Usage(format!("{k} must be a non-negative number, got {v}")));
    }
    if p.throughput.majority_vote_fraction > 1.0 {
        return Err(CliError::Usage("majority_vote_fraction must be <= 1".into()));
    }
    if !p.population.is_consistent() {
        log::warn!("matches_per_day differs from minutes_per_day / match_minutes");
    }
    let r = impact_report(&p.economy, &p.throughput, &p.population, p.paper_mode)?;
    match p.format.as_str() {
        "table" => emit(&r.to_table())?,
        "json" => emit(&(to_json(&r)? + "\n"))?,
        other => return Err(CliError::Usage(format!("unknown format `{other}` (table, json)"))),
    }
    if let Some(path) = p.manifest {
        RunManifest::new("impact", resolved).write(&path)?;
    }
    Ok(())
}
