//! Seeded synthetic Tribunal-style corpora with planted, logged signal.
//!
//! Each case gets a latent verdict and a signed signal strength whose
//! magnitude grows with reviewer agreement. The observed decision is the
//! latent verdict flipped with an agreement-dependent probability, so
//! low-agreement cases are both weaker and noisier. Planted effects:
//!
//! * ally and enemy report probabilities rise with the signal (strongest for
//!   verbal abuse allies, the planted dominant feature);
//! * report comments become more likely with the signal;
//! * offenders in communication matches talk more when the signal is high;
//! * punished intentional feeders die more;
//! * offender chat valence is drawn to hit a target mean per observed
//!   (decision, agreement) cell.
//!
//! Only the valence targets come from published figures; every other
//! distribution here is an invented default.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    AgreementLevel, Case, ChatMessage, Decision, Match, PlayerStats, Region, Report,
    ReportCategory, ReportSource, Role, ALLIES_PER_MATCH, ENEMIES_PER_MATCH,
};
use crate::error::SynthError;
use crate::valence::{ValenceLexicon, ValenceTally};

/// Feature carrying the strongest planted report link.
pub const DOMINANT_FEATURE: &str = "verbal.abuse.allied.report.count";

const FILLER: [&str; 20] = [
    "mid", "lane", "gank", "push", "top", "bot", "jungle", "ward", "drag", "baron", "ult",
    "flash", "lol", "gg", "ff", "pls", "now", "go", "back", "omg",
];

const COMMENTS: [&str; 6] = [
    "flamed the whole team",
    "kept dying on purpose",
    "typing insults all game",
    "refused to help and raged",
    "spammed pings and chat",
    "said he would feed",
];

/// Mean offender valence per observed verdict, overall and among
/// overwhelming-majority cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValenceTargets {
    pub punished_mean: f64,
    pub pardoned_mean: f64,
    pub om_punished_mean: f64,
    pub om_pardoned_mean: f64,
}

impl Default for ValenceTargets {
    fn default() -> Self {
        Self {
            punished_mean: 5.725,
            pardoned_mean: 5.779,
            om_punished_mean: 5.699,
            om_pardoned_mean: 5.751,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_cases: usize,
    pub region: Region,
    /// Probability that a case's latent verdict is punish.
    pub punish_rate: f64,
    /// Probabilities of majority, strong majority, overwhelming majority.
    pub agreement_mix: [f64; 3],
    pub valence_targets: ValenceTargets,
    /// Label-flip probability per agreement level (majority first).
    pub label_noise: [f64; 3],
    /// Signal magnitude per agreement level (majority first).
    pub clarity: [f64; 3],
    /// Logit change of report probabilities per unit of signal.
    pub report_link: f64,
    /// Logit change of the comment probability per unit of signal.
    pub comment_link: f64,
    /// Log-rate change of offender messages in communication matches.
    pub chat_link: f64,
    /// Extra expected deaths for punished intentional feeders.
    pub deaths_elevation: f64,
    /// Logit offset on every report probability (regional drift).
    pub report_shift: f64,
    /// Sampling weights of each match's reported category, in enum order.
    pub category_weights: [f64; 7],
    pub rng_seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_cases: 1000,
            region: Region::Na,
            punish_rate: 0.5,
            agreement_mix: [0.06, 0.10, 0.84],
            valence_targets: ValenceTargets::default(),
            label_noise: [0.25, 0.12, 0.03],
            clarity: [0.15, 0.3, 1.2],
            report_link: 2.0,
            comment_link: 0.8,
            chat_link: 0.5,
            deaths_elevation: 4.0,
            report_shift: 0.0,
            category_weights: [0.06, 0.16, 0.14, 0.36, 0.14, 0.04, 0.10],
            rng_seed: 0,
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<(), SynthError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(SynthError::Config(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

fn check_weights(name: &str, w: &[f64]) -> Result<(), SynthError> {
    for &x in w {
        check_prob(name, x)?;
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-6 {
        return Err(SynthError::Config(format!("{name} sums to {s}, expected 1")));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.punish_rate > 0.0 && self.punish_rate < 1.0) {
            return Err(SynthError::Config(format!("punish_rate {} not in (0,1)", self.punish_rate)));
        }
        check_weights("agreement_mix", &self.agreement_mix)?;
        check_weights("category_weights", &self.category_weights)?;
        for &p in &self.label_noise {
            check_prob("label_noise", p)?;
        }
        if self.clarity.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(SynthError::Config("clarity must be finite and >= 0".into()));
        }
        let t = &self.valence_targets;
        if t.punished_mean > t.pardoned_mean || t.om_punished_mean > t.om_pardoned_mean {
            return Err(SynthError::Config(
                "punished valence targets must not exceed pardoned targets".into(),
            ));
        }
        for (name, v) in [
            ("report_link", self.report_link),
            ("comment_link", self.comment_link),
            ("chat_link", self.chat_link),
            ("deaths_elevation", self.deaths_elevation),
            ("report_shift", self.report_shift),
        ] {
            if !v.is_finite() {
                return Err(SynthError::Config(format!("{name} must be finite")));
            }
        }
        if self.deaths_elevation < 0.0 {
            return Err(SynthError::Config("deaths_elevation must be >= 0".into()));
        }
        Ok(())
    }

    /// Offender valence target for an observed (decision, agreement) cell.
    /// Overwhelming-majority cells use their own targets; the others are set
    /// so that the mixture over agreement levels hits the overall targets.
    pub fn valence_target(&self, decision: Decision, agreement: AgreementLevel) -> f64 {
        let t = &self.valence_targets;
        let (overall, om) = match decision {
            Decision::Punish => (t.punished_mean, t.om_punished_mean),
            Decision::Pardon => (t.pardoned_mean, t.om_pardoned_mean),
        };
        let w = self.agreement_mix[2];
        if agreement == AgreementLevel::OverwhelmingMajority || w >= 1.0 {
            om
        } else {
            (overall - w * om) / (1.0 - w)
        }
    }
}

/// What the generator planted in one match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchTruth {
    pub category: ReportCategory,
    pub ally_report_prob: f64,
    pub enemy_report_prob: f64,
    pub reports: usize,
    pub offender_messages: usize,
}

/// What the generator planted in one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub case_id: String,
    pub latent_decision: Decision,
    pub decision: Decision,
    pub agreement: AgreementLevel,
    pub label_flipped: bool,
    /// Signed strength: positive leans punish.
    pub signal: f64,
    pub valence_target: f64,
    pub high_word_prob: f64,
    pub matches: Vec<MatchTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpus {
    pub config: GeneratorConfig,
    pub cases: Vec<Case>,
    pub ground_truth: Vec<GroundTruth>,
    pub dominant_feature: String,
}

impl SyntheticCorpus {
    /// (cases, matches, reports) as recorded while generating.
    pub fn emitted_counts(&self) -> (u64, u64, u64) {
        let matches = self.ground_truth.iter().map(|g| g.matches.len() as u64).sum();
        let reports = self
            .ground_truth
            .iter()
            .flat_map(|g| &g.matches)
            .map(|m| m.reports as u64)
            .sum();
        (self.ground_truth.len() as u64, matches, reports)
    }
}

/// Two lexicon word pools for valence mixtures.
struct WordPools<'a> {
    low: Vec<(&'a str, f64)>,
    high: Vec<(&'a str, f64)>,
    filler: Vec<&'static str>,
    low_mean: f64,
    high_mean: f64,
}

const LOW_POOL_MAX: f64 = 4.5;
const HIGH_POOL_MIN: f64 = 6.5;

impl<'a> WordPools<'a> {
    fn new(lexicon: &'a ValenceLexicon) -> Result<Self, SynthError> {
        let low: Vec<_> = lexicon.entries().filter(|e| e.1 < LOW_POOL_MAX).collect();
        let high: Vec<_> = lexicon.entries().filter(|e| e.1 > HIGH_POOL_MIN).collect();
        if low.is_empty() || high.is_empty() {
            return Err(SynthError::Config(format!(
                "lexicon needs words below {LOW_POOL_MAX} and above {HIGH_POOL_MIN}"
            )));
        }
        let mean = |p: &[(&str, f64)]| p.iter().map(|e| e.1).sum::<f64>() / p.len() as f64;
        Ok(Self {
            low_mean: mean(&low),
            high_mean: mean(&high),
            filler: FILLER.iter().copied().filter(|w| !lexicon.contains(w)).collect(),
            low,
            high,
        })
    }

    fn high_prob(&self, target: f64) -> Result<f64, SynthError> {
        if !(self.low_mean..=self.high_mean).contains(&target) {
            return Err(SynthError::Infeasible { target, low: self.low_mean, high: self.high_mean });
        }
        Ok((target - self.low_mean) / (self.high_mean - self.low_mean))
    }

    fn lexicon_word(&self, rng: &mut ChaCha8Rng, high_prob: f64) -> &'a str {
        let pool = if rng.random_bool(high_prob) { &self.high } else { &self.low };
        pool[rng.random_range(0..pool.len())].0
    }

    /// One chat line: 1 + Poisson(3) tokens, 60% lexicon words.
    fn message(&self, rng: &mut ChaCha8Rng, high_prob: f64, force_word: bool) -> String {
        let n = 1 + poisson(rng, 3.0);
        let forced = if force_word { rng.random_range(0..n) } else { usize::MAX };
        let words: Vec<&str> = (0..n)
            .map(|i| {
                if i == forced || rng.random_bool(0.6) || self.filler.is_empty() {
                    self.lexicon_word(rng, high_prob)
                } else {
                    self.filler[rng.random_range(0..self.filler.len())]
                }
            })
            .collect();
        words.join(" ")
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> usize {
    Binomial::new(n, p.clamp(0.0, 1.0)).expect("valid binomial").sample(rng) as usize
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn pick_weighted<T: Copy>(rng: &mut ChaCha8Rng, items: &[T], weights: &[f64]) -> T {
    let mut u: f64 = rng.random();
    for (item, &w) in items.iter().zip(weights) {
        if u < w {
            return *item;
        }
        u -= w;
    }
    *items.last().unwrap()
}

fn player(rng: &mut ChaCha8Rng, role: Role, duration: u32) -> PlayerStats {
    let minutes = duration as f64 / 60.0;
    PlayerStats {
        role,
        kills: poisson(rng, 5.0) as u32,
        deaths: poisson(rng, 5.0) as u32,
        assists: poisson(rng, 7.0) as u32,
        damage_dealt: (minutes * rng.random_range(400.0..900.0)).round() as u64,
        damage_received: (minutes * rng.random_range(400.0..900.0)).round() as u64,
        gold_earned: (minutes * rng.random_range(250.0..450.0)).round() as u64,
        time_played: duration,
    }
}

struct CaseContext<'a> {
    config: &'a GeneratorConfig,
    pools: &'a WordPools<'a>,
    latent_punish: bool,
    signal: f64,
    high_word_prob: f64,
}

fn gen_match(rng: &mut ChaCha8Rng, ctx: &CaseContext<'_>, first: bool) -> (Match, MatchTruth) {
    let cfg = ctx.config;
    let z = ctx.signal;
    let category = pick_weighted(rng, &ReportCategory::ALL, &cfg.category_weights);
    let duration = rng.random_range(20 * 60..=50 * 60u32);

    let mut players = Vec::with_capacity(10);
    let mut offender = player(rng, Role::Offender, duration);
    if category == ReportCategory::IntentionalFeeding && ctx.latent_punish {
        offender.deaths += poisson(rng, cfg.deaths_elevation * z.abs()) as u32;
        offender.damage_dealt /= 2;
    }
    if rng.random_bool(0.05) {
        offender.time_played = (duration as f64 * rng.random_range(0.3..1.0)) as u32;
    }
    players.push(offender);
    players.extend((0..ALLIES_PER_MATCH).map(|_| player(rng, Role::Ally, duration)));
    players.extend((0..ENEMIES_PER_MATCH).map(|_| player(rng, Role::Enemy, duration)));

    let comm = category.is_communication();
    let ally_weight = if category == ReportCategory::VerbalAbuse { 1.5 } else { 1.0 };
    let (ally_base, enemy_base) = if comm { (-0.3, -0.5) } else { (0.3, -1.5) };
    let ally_p = sigmoid(ally_base + cfg.report_link * ally_weight * z + cfg.report_shift);
    let enemy_p = sigmoid(enemy_base + 0.5 * cfg.report_link * z + cfg.report_shift);
    let allies = binomial(rng, ALLIES_PER_MATCH as u64, ally_p);
    let enemies = binomial(rng, ENEMIES_PER_MATCH as u64, enemy_p);
    let comment_p = sigmoid(-1.0 + cfg.comment_link * z);
    let mut reports: Vec<Report> = std::iter::repeat_n(ReportSource::Ally, allies)
        .chain(std::iter::repeat_n(ReportSource::Enemy, enemies))
        .map(|source| Report {
            source,
            category,
            comment: rng
                .random_bool(comment_p)
                .then(|| COMMENTS[rng.random_range(0..COMMENTS.len())].to_string()),
        })
        .collect();
    if reports.is_empty() {
        reports.push(Report { source: ReportSource::Ally, category, comment: None });
    }
    // A stray report in another category never overturns the plurality.
    if reports.len() >= 3 && rng.random_bool(0.3) {
        let other = loop {
            let c = ReportCategory::ALL[rng.random_range(0..ReportCategory::COUNT)];
            if c != category {
                break c;
            }
        };
        let i = rng.random_range(0..reports.len());
        reports[i].category = other;
    }

    let offender_rate = if comm { 4.0 * (cfg.chat_link * z).exp() } else { 4.0 };
    let mut n_off = poisson(rng, offender_rate);
    if first {
        n_off = n_off.max(1);
    }
    let mut chat: Vec<ChatMessage> = Vec::new();
    for i in 0..n_off {
        chat.push(ChatMessage {
            speaker_role: Role::Offender,
            text: ctx.pools.message(rng, ctx.high_word_prob, first && i == 0),
        });
    }
    for (role, rate) in [(Role::Ally, 3.0), (Role::Enemy, 2.0)] {
        for _ in 0..poisson(rng, rate) {
            chat.push(ChatMessage {
                speaker_role: role,
                text: ctx.pools.message(rng, 0.65, false),
            });
        }
    }
    // interleave speakers
    for i in (1..chat.len()).rev() {
        let j = rng.random_range(0..=i);
        chat.swap(i, j);
    }

    let truth = MatchTruth {
        category,
        ally_report_prob: ally_p,
        enemy_report_prob: enemy_p,
        reports: reports.len(),
        offender_messages: n_off,
    };
    let m = Match {
        duration,
        offender_won: rng.random_bool(0.35),
        players,
        reports,
        chat,
    };
    (m, truth)
}

fn gen_case(
    config: &GeneratorConfig,
    pools: &WordPools<'_>,
    index: usize,
) -> Result<(Case, GroundTruth), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(index as u64);
    let agreement = pick_weighted(&mut rng, &AgreementLevel::ALL, &config.agreement_mix);
    let latent_punish = rng.random_bool(config.punish_rate);
    let latent = if latent_punish { Decision::Punish } else { Decision::Pardon };
    // Reviewers err on weak cases: the flip probability falls linearly with
    // the case's signal strength and averages to the schedule.
    let u: f64 = rng.random();
    let flip_p = (2.0 * config.label_noise[agreement.index()] * (1.0 - u)).min(1.0);
    let flipped = rng.random_bool(flip_p);
    let decision = if flipped { latent.flipped() } else { latent };
    let magnitude = config.clarity[agreement.index()] * (0.05 + 1.75 * u);
    let signal = if latent_punish { magnitude } else { -magnitude };
    let valence_target = config.valence_target(decision, agreement);
    let high_word_prob = pools.high_prob(valence_target)?;
    let ctx = CaseContext { config, pools, latent_punish, signal, high_word_prob };

    let n_matches = rng.random_range(1..=5usize);
    let (matches, truths): (Vec<_>, Vec<_>) =
        (0..n_matches).map(|i| gen_match(&mut rng, &ctx, i == 0)).unzip();
    let case_id = format!("{}-{}-{index:06}", config.region, config.rng_seed);
    let truth = GroundTruth {
        case_id: case_id.clone(),
        latent_decision: latent,
        decision,
        agreement,
        label_flipped: flipped,
        signal,
        valence_target,
        high_word_prob,
        matches: truths,
    };
    let case = Case { case_id, region: config.region, decision, agreement, matches };
    Ok((case, truth))
}

/// Deterministic for a given config; case `i` only depends on the seed and
/// `i`, so generation runs in parallel.
pub fn generate_dataset(
    config: &GeneratorConfig,
    lexicon: &ValenceLexicon,
) -> Result<SyntheticCorpus, SynthError> {
    config.validate()?;
    let pools = WordPools::new(lexicon)?;
    for d in [Decision::Punish, Decision::Pardon] {
        for a in AgreementLevel::ALL {
            pools.high_prob(config.valence_target(d, a))?;
        }
    }
    let generated: Vec<(Case, GroundTruth)> = (0..config.n_cases)
        .into_par_iter()
        .map(|i| gen_case(config, &pools, i))
        .collect::<Result<_, _>>()?;
    let (cases, ground_truth) = generated.into_iter().unzip();
    Ok(SyntheticCorpus {
        config: config.clone(),
        cases,
        ground_truth,
        dominant_feature: DOMINANT_FEATURE.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValenceCell {
    pub decision: Decision,
    pub agreement: Option<AgreementLevel>,
    pub cases: usize,
    /// Cases whose offender said at least one lexicon word.
    pub scored: usize,
    pub mean: f64,
    /// 10th, 25th, 50th, 75th and 90th percentiles.
    pub quantiles: [f64; 5],
    /// Mean planted target, when ground truth is available.
    pub planted_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Overall cells (agreement `None`) first, then one per agreement level.
    pub cells: Vec<ValenceCell>,
    /// Pearson correlation between a match's report count and the punish label.
    pub report_label_correlation: f64,
}

impl CalibrationReport {
    pub fn cell(&self, decision: Decision, agreement: Option<AgreementLevel>) -> &ValenceCell {
        self.cells
            .iter()
            .find(|c| c.decision == decision && c.agreement == agreement)
            .expect("all cells present")
    }

    /// Pardoned minus punished offender valence.
    pub fn gap(&self, agreement: Option<AgreementLevel>) -> f64 {
        self.cell(Decision::Pardon, agreement).mean - self.cell(Decision::Punish, agreement).mean
    }

    pub fn planted_gap(&self, agreement: Option<AgreementLevel>) -> Option<f64> {
        Some(
            self.cell(Decision::Pardon, agreement).planted_mean?
                - self.cell(Decision::Punish, agreement).planted_mean?,
        )
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Measured offender valence per (decision, agreement) and the report-count
/// association with punishment. Cases whose offender valence is 0 (no
/// lexicon word) are left out of the valence statistics.
pub fn corpus_report(
    cases: &[Case],
    lexicon: &ValenceLexicon,
    truth: Option<&[GroundTruth]>,
) -> CalibrationReport {
    let planted: BTreeMap<&str, f64> = truth
        .unwrap_or_default()
        .iter()
        .map(|g| (g.case_id.as_str(), g.valence_target))
        .collect();
    let scored: Vec<(Decision, AgreementLevel, f64, Option<f64>)> = cases
        .iter()
        .map(|c| {
            let mut t = ValenceTally::default();
            for m in &c.matches {
                for msg in m.chat.iter().filter(|x| x.speaker_role == Role::Offender) {
                    t.add_text(lexicon, &msg.text);
                }
            }
            (c.decision, c.agreement, t.score(lexicon), planted.get(c.case_id.as_str()).copied())
        })
        .collect();

    let mut cells = Vec::new();
    let levels = std::iter::once(None).chain(AgreementLevel::ALL.map(Some));
    for agreement in levels {
        for decision in [Decision::Punish, Decision::Pardon] {
            let rows: Vec<_> = scored
                .iter()
                .filter(|r| r.0 == decision && agreement.is_none_or(|a| r.1 == a))
                .collect();
            let mut values: Vec<f64> = rows.iter().map(|r| r.2).filter(|&v| v >= 1.0).collect();
            values.sort_by(f64::total_cmp);
            let mean = if values.is_empty() {
                0.0
            } else {
                values.iter().sum::<f64>() / values.len() as f64
            };
            let targets: Vec<f64> =
                rows.iter().filter(|r| r.2 >= 1.0).filter_map(|r| r.3).collect();
            let planted_mean = (truth.is_some() && !targets.is_empty())
                .then(|| targets.iter().sum::<f64>() / targets.len() as f64);
            cells.push(ValenceCell {
                decision,
                agreement,
                cases: rows.len(),
                scored: values.len(),
                mean,
                quantiles: [0.1, 0.25, 0.5, 0.75, 0.9].map(|q| quantile(&values, q)),
                planted_mean,
            });
        }
    }

    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for c in cases {
        for m in &c.matches {
            xs.push(m.reports.len() as f64);
            ys.push(c.decision.is_punish() as u8 as f64);
        }
    }
    CalibrationReport { cells, report_label_correlation: pearson(&xs, &ys) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_case;
    use crate::features::most_common_report_type;

    fn small(seed: u64, n: usize) -> SyntheticCorpus {
        let cfg = GeneratorConfig { n_cases: n, rng_seed: seed, ..Default::default() };
        generate_dataset(&cfg, &ValenceLexicon::builtin_test()).unwrap()
    }

    #[test]
    fn empty_and_deterministic() {
        assert!(small(1, 0).cases.is_empty());
        assert_eq!(small(42, 50), small(42, 50));
        assert_ne!(small(42, 50).cases, small(43, 50).cases);
    }

    #[test]
    fn prefix_stable_across_sizes() {
        // per-case substreams: the first cases do not depend on n_cases
        assert_eq!(small(5, 10).cases[..], small(5, 30).cases[..10]);
    }

    #[test]
    fn cases_are_valid_and_match_truth() {
        let c = small(3, 300);
        for (case, truth) in c.cases.iter().zip(&c.ground_truth) {
            assert!(validate_case(case).is_empty(), "{:?}", validate_case(case));
            assert!((1..=5).contains(&case.matches.len()));
            assert_eq!(case.decision, truth.decision);
            assert_eq!(truth.label_flipped, truth.decision != truth.latent_decision);
            for (m, t) in case.matches.iter().zip(&truth.matches) {
                assert_eq!(most_common_report_type(m), t.category);
                assert_eq!(m.reports.len(), t.reports);
            }
        }
    }

    #[test]
    fn infeasible_target() {
        let cfg = GeneratorConfig {
            valence_targets: ValenceTargets {
                punished_mean: 1.2,
                om_punished_mean: 1.2,
                ..Default::default()
            },
            ..Default::default()
        };
        let err = generate_dataset(&cfg, &ValenceLexicon::builtin_test()).unwrap_err();
        assert!(matches!(err, SynthError::Infeasible { .. }));
    }

    #[test]
    fn bad_configs() {
        let lex = ValenceLexicon::builtin_test();
        let bad = [
            GeneratorConfig { punish_rate: 1.0, ..Default::default() },
            GeneratorConfig { agreement_mix: [0.5, 0.5, 0.5], ..Default::default() },
            GeneratorConfig { label_noise: [1.5, 0.1, 0.0], ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(generate_dataset(&cfg, &lex), Err(SynthError::Config(_))));
        }
    }

    #[test]
    fn non_om_targets_restore_overall_mean() {
        let cfg = GeneratorConfig::default();
        let w = cfg.agreement_mix;
        for d in [Decision::Punish, Decision::Pardon] {
            let mix: f64 = AgreementLevel::ALL
                .iter()
                .map(|&a| w[a.index()] * cfg.valence_target(d, a))
                .sum();
            let overall = match d {
                Decision::Punish => cfg.valence_targets.punished_mean,
                Decision::Pardon => cfg.valence_targets.pardoned_mean,
            };
            assert!((mix - overall).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_targets_give_equal_means() {
        let t = 5.75;
        let cfg = GeneratorConfig {
            n_cases: 20_000,
            rng_seed: 11,
            valence_targets: ValenceTargets {
                punished_mean: t,
                pardoned_mean: t,
                om_punished_mean: t,
                om_pardoned_mean: t,
            },
            ..Default::default()
        };
        let lex = ValenceLexicon::builtin_test();
        let c = generate_dataset(&cfg, &lex).unwrap();
        let r = corpus_report(&c.cases, &lex, Some(&c.ground_truth));
        assert!(r.gap(None).abs() < 0.04, "{}", r.gap(None));
        assert_eq!(r.planted_gap(None), Some(0.0));
    }

    #[test]
    fn default_ordering_and_report_link() {
        let lex = ValenceLexicon::builtin_test();
        let c = small(7, 3000);
        let r = corpus_report(&c.cases, &lex, Some(&c.ground_truth));
        assert!(r.cell(Decision::Punish, None).mean < r.cell(Decision::Pardon, None).mean);
        assert!(r.report_label_correlation > 0.1, "{}", r.report_label_correlation);
        let (n, m, rep) = c.emitted_counts();
        let s = crate::domain::summarize_dataset(&c.cases).total();
        assert_eq!((s.cases, s.matches, s.reports), (n, m, rep));
    }
}
