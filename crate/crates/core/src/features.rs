//! Case to feature-vector mapping.
//!
//! Every match in a case is assigned to the category reported most often in
//! it. Per-match statistics are then summarized per category group (mean and
//! population standard deviation), so a case always produces the same fixed
//! layout no matter how many matches it holds or in which order they come.
//!
//! Layout of the full vector:
//!
//! | family      | per category | categories | case level | total |
//! |-------------|--------------|------------|------------|-------|
//! | performance | 52           | 7          | 0          | 364   |
//! | report      | 4            | 7          | 0          | 28    |
//! | chat        | 8            | 7          | 4          | 60    |

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::domain::{
    AgreementLevel, Case, Decision, Match, Region, ReportCategory, ReportSource, Role,
};
use crate::error::{DataError, FeatureError};
use crate::valence::{RoleTallies, ValenceLexicon, ValenceTally};

pub const SCHEMA_VERSION: &str = "tribunal-features/1";

pub const PERFORMANCE_PER_CATEGORY: usize = 52;
pub const REPORT_PER_CATEGORY: usize = 4;
pub const CHAT_PER_CATEGORY: usize = 8;
pub const CHAT_CASE_LEVEL: usize = 4;

pub const PERFORMANCE_LEN: usize = PERFORMANCE_PER_CATEGORY * ReportCategory::COUNT;
pub const REPORT_LEN: usize = REPORT_PER_CATEGORY * ReportCategory::COUNT;
pub const CHAT_LEN: usize = CHAT_PER_CATEGORY * ReportCategory::COUNT + CHAT_CASE_LEVEL;
pub const FULL_LEN: usize = PERFORMANCE_LEN + REPORT_LEN + CHAT_LEN;

const OFFENDER_STATS: [&str; 9] = [
    "kills",
    "deaths",
    "assists",
    "kda",
    "damage.dealt",
    "damage.received",
    "gold",
    "gpm",
    "time.played",
];

// Per-player means except `kda`, which is the team ratio.
const TEAM_STATS: [&str; 8] = [
    "kills",
    "deaths",
    "assists",
    "kda",
    "kda.avg.per.player",
    "damage.dealt",
    "damage.received",
    "gpm",
];

const REPORT_STATS: [&str; 4] = [
    "allied.report.count",
    "enemy.report.count",
    "allied.report.comment.count",
    "enemy.report.comment.count",
];

const CASE_CHAT_STATS: [&str; 4] = [
    "case.offender.valence",
    "case.all.valence",
    "case.offender.msg.count",
    "case.total.msg.count",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    Performance,
    Report,
    Chat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Performance,
    Report,
    Chat,
    Full,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] =
        [ModelKind::Performance, ModelKind::Report, ModelKind::Chat, ModelKind::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Performance => "performance",
            ModelKind::Report => "report",
            ModelKind::Chat => "chat",
            ModelKind::Full => "full",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            ModelKind::Performance => "P",
            ModelKind::Report => "R",
            ModelKind::Chat => "C",
            ModelKind::Full => "F",
        }
    }

    /// Index range of this model's features inside the full vector.
    pub fn range(self) -> std::ops::Range<usize> {
        match self {
            ModelKind::Performance => 0..PERFORMANCE_LEN,
            ModelKind::Report => PERFORMANCE_LEN..PERFORMANCE_LEN + REPORT_LEN,
            ModelKind::Chat => PERFORMANCE_LEN + REPORT_LEN..FULL_LEN,
            ModelKind::Full => 0..FULL_LEN,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "performance" | "p" => Ok(ModelKind::Performance),
            "report" | "r" => Ok(ModelKind::Report),
            "chat" | "c" => Ok(ModelKind::Chat),
            "full" | "f" => Ok(ModelKind::Full),
            _ => Err(FeatureError::Matrix(format!("unknown model `{s}`"))),
        }
    }
}

/// Ordered feature names and family tags for one model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: String,
    pub model: ModelKind,
    pub names: Vec<String>,
    pub families: Vec<FeatureFamily>,
}

static FULL_SCHEMA: LazyLock<FeatureSchema> = LazyLock::new(build_full_schema);

fn build_full_schema() -> FeatureSchema {
    let mut names = Vec::with_capacity(FULL_LEN);
    let mut families = Vec::with_capacity(FULL_LEN);
    let mut push = |name: String, fam: FeatureFamily| {
        names.push(name);
        families.push(fam);
    };
    for c in ReportCategory::ALL {
        let p = c.feature_prefix();
        for s in OFFENDER_STATS {
            push(format!("{p}.offender.{s}"), FeatureFamily::Performance);
            push(format!("{p}.offender.{s}.sd"), FeatureFamily::Performance);
        }
        for side in ["allies", "enemies"] {
            for s in TEAM_STATS {
                push(format!("{p}.{side}.{s}"), FeatureFamily::Performance);
                push(format!("{p}.{side}.{s}.sd"), FeatureFamily::Performance);
            }
        }
        push(format!("{p}.match.count"), FeatureFamily::Performance);
        push(format!("{p}.loss.rate"), FeatureFamily::Performance);
    }
    for c in ReportCategory::ALL {
        for s in REPORT_STATS {
            push(format!("{}.{s}", c.feature_prefix()), FeatureFamily::Report);
        }
    }
    for c in ReportCategory::ALL {
        let p = c.feature_prefix();
        for s in [
            "offender.valence",
            "offender.valence.sd",
            "victim.valence",
            "bystander.valence",
            "offender.chat.msgs",
            "offender.chat.msgs.sd",
            "total.chat.msgs",
            "total.chat.msgs.sd",
        ] {
            push(format!("{p}.{s}"), FeatureFamily::Chat);
        }
    }
    for s in CASE_CHAT_STATS {
        push(s.to_string(), FeatureFamily::Chat);
    }
    FeatureSchema { version: SCHEMA_VERSION.to_string(), model: ModelKind::Full, names, families }
}

impl FeatureSchema {
    pub fn full() -> &'static FeatureSchema {
        &FULL_SCHEMA
    }

    pub fn for_model(model: ModelKind) -> FeatureSchema {
        let full = Self::full();
        let r = model.range();
        FeatureSchema {
            version: full.version.clone(),
            model,
            names: full.names[r.clone()].to_vec(),
            families: full.families[r].to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Version string that ties a model file to the features it was fit on.
    pub fn tag(&self) -> String {
        format!("{}:{}", self.version, self.model)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn count(&self, family: FeatureFamily) -> usize {
        self.families.iter().filter(|&&f| f == family).count()
    }

    /// Machine-readable manifest: version, model and the ordered feature list.
    pub fn manifest(&self) -> serde_json::Value {
        let features: Vec<_> = self
            .names
            .iter()
            .zip(&self.families)
            .map(|(n, f)| serde_json::json!({ "name": n, "family": f }))
            .collect();
        serde_json::json!({
            "schema_version": self.version,
            "tag": self.tag(),
            "model": self.model,
            "features": features,
        })
    }

    /// Identifies which model a CSV header belongs to.
    pub fn from_names(names: &[String]) -> Option<FeatureSchema> {
        ModelKind::ALL
            .into_iter()
            .map(Self::for_model)
            .find(|s| s.names.as_slice() == names)
    }
}

/// Whose chat counts as the victims' in a communication offense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VictimScope {
    Allies,
    Enemies,
    AllPlayers,
}

/// Category with the most reports in the match; ties go to the category
/// declared first in [`ReportCategory`]. A match without reports (which
/// validation rejects) falls back to the first category.
pub fn most_common_report_type(m: &Match) -> ReportCategory {
    let mut counts = [0usize; ReportCategory::COUNT];
    for r in &m.reports {
        counts[r.category.index()] += 1;
    }
    let mut best = 0;
    for i in 1..counts.len() {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    ReportCategory::ALL[best]
}

pub fn victim_scope(m: &Match) -> Result<VictimScope, FeatureError> {
    let category = most_common_report_type(m);
    if !category.is_communication() {
        return Err(FeatureError::NotCommunication(category));
    }
    Ok(scope_from_sources(m))
}

fn scope_from_sources(m: &Match) -> VictimScope {
    let allies = m.reports.iter().any(|r| r.source == ReportSource::Ally);
    let enemies = m.reports.iter().any(|r| r.source == ReportSource::Enemy);
    match (allies, enemies) {
        (true, false) => VictimScope::Allies,
        (false, true) => VictimScope::Enemies,
        _ => VictimScope::AllPlayers,
    }
}

/// Everything the extractors need from one match.
#[derive(Debug, Clone)]
struct MatchProfile {
    category: ReportCategory,
    offender: [f64; 9],
    allies: [f64; 8],
    enemies: [f64; 8],
    lost: f64,
    reports: [f64; 4],
    offender_valence: f64,
    victim_valence: f64,
    bystander_valence: f64,
    offender_msgs: f64,
    total_msgs: f64,
    tallies: RoleTallies,
}

fn team_stats(m: &Match, role: Role) -> [f64; 8] {
    let minutes = m.duration_minutes();
    let players: Vec<_> = m.players_with_role(role).collect();
    if players.is_empty() {
        return [0.0; 8];
    }
    let n = players.len() as f64;
    // Summed in sorted order so the result does not depend on roster order.
    let sum = |f: &dyn Fn(&crate::domain::PlayerStats) -> f64| -> f64 {
        let mut v: Vec<f64> = players.iter().map(|p| f(p)).collect();
        v.sort_by(f64::total_cmp);
        v.iter().sum()
    };
    let kills = sum(&|p| p.kills as f64);
    let deaths = sum(&|p| p.deaths as f64);
    let assists = sum(&|p| p.assists as f64);
    [
        kills / n,
        deaths / n,
        assists / n,
        (kills + assists) / (deaths + 1.0),
        sum(&|p| p.kda()) / n,
        sum(&|p| p.damage_dealt as f64) / n,
        sum(&|p| p.damage_received as f64) / n,
        sum(&|p| p.gold_earned as f64 / minutes) / n,
    ]
}

fn profile(m: &Match, lexicon: &ValenceLexicon) -> MatchProfile {
    let category = most_common_report_type(m);
    let offender = match m.offender() {
        Some(o) => [
            o.kills as f64,
            o.deaths as f64,
            o.assists as f64,
            o.kda(),
            o.damage_dealt as f64,
            o.damage_received as f64,
            o.gold_earned as f64,
            o.gold_earned as f64 / m.duration_minutes(),
            o.time_played as f64,
        ],
        None => [0.0; 9],
    };
    let mut reports = [0.0; 4];
    for r in &m.reports {
        let commented = r.comment.is_some() as u8 as f64;
        match r.source {
            ReportSource::Ally => {
                reports[0] += 1.0;
                reports[2] += commented;
            }
            ReportSource::Enemy => {
                reports[1] += 1.0;
                reports[3] += commented;
            }
        }
    }
    let tallies = RoleTallies::of_match(lexicon, m);
    let (victim_valence, bystander_valence) = if category.is_communication() {
        match scope_from_sources(m) {
            VictimScope::Allies => {
                (tallies.allies.score(lexicon), tallies.enemies.score(lexicon))
            }
            VictimScope::Enemies => {
                (tallies.enemies.score(lexicon), tallies.allies.score(lexicon))
            }
            VictimScope::AllPlayers => {
                let mut victims = tallies.allies.clone();
                victims.merge(&tallies.enemies);
                (victims.score(lexicon), 0.0)
            }
        }
    } else {
        (tallies.allies.score(lexicon), tallies.enemies.score(lexicon))
    };
    let offender_msgs = m.chat.iter().filter(|c| c.speaker_role == Role::Offender).count();
    MatchProfile {
        category,
        offender,
        allies: team_stats(m, Role::Ally),
        enemies: team_stats(m, Role::Enemy),
        lost: if m.offender_won { 0.0 } else { 1.0 },
        reports,
        offender_valence: tallies.offender.score(lexicon),
        victim_valence,
        bystander_valence,
        offender_msgs: offender_msgs as f64,
        total_msgs: m.chat.len() as f64,
        tallies,
    }
}

/// Population mean and standard deviation. Values are summed in sorted order
/// so the result does not depend on match order; the mean is clamped to the
/// sample range.
fn mean_std(values: &mut [f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = (values.iter().sum::<f64>() / n).clamp(values[0], values[values.len() - 1]);
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let mut sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    sq.sort_by(f64::total_cmp);
    (mean, (sq.iter().sum::<f64>() / n).sqrt())
}

fn group_stat(group: &[&MatchProfile], f: impl Fn(&MatchProfile) -> f64) -> (f64, f64) {
    let mut v: Vec<f64> = group.iter().map(|p| f(p)).collect();
    mean_std(&mut v)
}

struct Grouped {
    profiles: Vec<MatchProfile>,
}

impl Grouped {
    fn new(case: &Case, lexicon: &ValenceLexicon) -> Self {
        Self { profiles: case.matches.iter().map(|m| profile(m, lexicon)).collect() }
    }

    fn group(&self, c: ReportCategory) -> Vec<&MatchProfile> {
        self.profiles.iter().filter(|p| p.category == c).collect()
    }
}

fn performance_into(g: &Grouped, out: &mut Vec<f64>) {
    for c in ReportCategory::ALL {
        let group = g.group(c);
        let start = out.len();
        if group.is_empty() {
            out.resize(start + PERFORMANCE_PER_CATEGORY, 0.0);
            continue;
        }
        for i in 0..OFFENDER_STATS.len() {
            let (m, s) = group_stat(&group, |p| p.offender[i]);
            out.extend([m, s]);
        }
        for side in 0..2 {
            for i in 0..TEAM_STATS.len() {
                let (m, s) =
                    group_stat(&group, |p| if side == 0 { p.allies[i] } else { p.enemies[i] });
                out.extend([m, s]);
            }
        }
        out.push(group.len() as f64);
        out.push(group_stat(&group, |p| p.lost).0);
        debug_assert_eq!(out.len() - start, PERFORMANCE_PER_CATEGORY);
    }
}

fn report_into(g: &Grouped, out: &mut Vec<f64>) {
    for c in ReportCategory::ALL {
        let group = g.group(c);
        for i in 0..REPORT_PER_CATEGORY {
            out.push(group_stat(&group, |p| p.reports[i]).0);
        }
    }
}

fn chat_into(g: &Grouped, lexicon: &ValenceLexicon, out: &mut Vec<f64>) {
    for c in ReportCategory::ALL {
        let group = g.group(c);
        let (ov, ov_sd) = group_stat(&group, |p| p.offender_valence);
        let (om, om_sd) = group_stat(&group, |p| p.offender_msgs);
        let (tm, tm_sd) = group_stat(&group, |p| p.total_msgs);
        out.extend([
            ov,
            ov_sd,
            group_stat(&group, |p| p.victim_valence).0,
            group_stat(&group, |p| p.bystander_valence).0,
            om,
            om_sd,
            tm,
            tm_sd,
        ]);
    }
    let mut offender = ValenceTally::default();
    let mut all = ValenceTally::default();
    for p in &g.profiles {
        offender.merge(&p.tallies.offender);
        all.merge(&p.tallies.all());
    }
    out.extend([
        offender.score(lexicon),
        all.score(lexicon),
        g.profiles.iter().map(|p| p.offender_msgs).sum(),
        g.profiles.iter().map(|p| p.total_msgs).sum(),
    ]);
}

pub fn extract_performance_features(case: &Case) -> Vec<f64> {
    // Performance statistics never look at chat, so any lexicon will do.
    let lexicon = ValenceLexicon::from_entries(Vec::<(&str, f64)>::new()).unwrap();
    let mut out = Vec::with_capacity(PERFORMANCE_LEN);
    performance_into(&Grouped::new(case, &lexicon), &mut out);
    out
}

pub fn extract_report_features(case: &Case) -> Vec<f64> {
    let lexicon = ValenceLexicon::from_entries(Vec::<(&str, f64)>::new()).unwrap();
    let mut out = Vec::with_capacity(REPORT_LEN);
    report_into(&Grouped::new(case, &lexicon), &mut out);
    out
}

pub fn extract_chat_features(case: &Case, lexicon: &ValenceLexicon) -> Vec<f64> {
    let mut out = Vec::with_capacity(CHAT_LEN);
    chat_into(&Grouped::new(case, lexicon), lexicon, &mut out);
    out
}

/// All 452 values in schema order.
pub fn extract_full(case: &Case, lexicon: &ValenceLexicon) -> Vec<f64> {
    let g = Grouped::new(case, lexicon);
    let mut out = Vec::with_capacity(FULL_LEN);
    performance_into(&g, &mut out);
    report_into(&g, &mut out);
    chat_into(&g, lexicon, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Decision,
    pub agreement: AgreementLevel,
    pub region: Region,
}

impl FeatureVector {
    /// Restricts a full vector to one model's slice.
    pub fn select(&self, model: ModelKind) -> FeatureVector {
        assert_eq!(self.values.len(), FULL_LEN, "select() needs a full vector");
        FeatureVector { values: self.values[model.range()].to_vec(), ..self.clone() }
    }
}

pub fn extract_feature_vector(
    case: &Case,
    lexicon: &ValenceLexicon,
    model: ModelKind,
) -> FeatureVector {
    let g = Grouped::new(case, lexicon);
    let mut values = Vec::with_capacity(model.range().len());
    if matches!(model, ModelKind::Performance | ModelKind::Full) {
        performance_into(&g, &mut values);
    }
    if matches!(model, ModelKind::Report | ModelKind::Full) {
        report_into(&g, &mut values);
    }
    if matches!(model, ModelKind::Chat | ModelKind::Full) {
        chat_into(&g, lexicon, &mut values);
    }
    FeatureVector { values, label: case.decision, agreement: case.agreement, region: case.region }
}

/// Rows of feature vectors under one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub schema: FeatureSchema,
    pub rows: Vec<FeatureVector>,
}

impl FeatureMatrix {
    pub fn extract(cases: &[Case], lexicon: &ValenceLexicon, model: ModelKind) -> Self {
        use rayon::prelude::*;
        let rows = cases.par_iter().map(|c| extract_feature_vector(c, lexicon, model)).collect();
        Self { schema: FeatureSchema::for_model(model), rows }
    }

    pub fn select(&self, model: ModelKind) -> FeatureMatrix {
        if model == self.schema.model {
            return self.clone();
        }
        assert_eq!(self.schema.model, ModelKind::Full, "can only narrow a full matrix");
        FeatureMatrix {
            schema: FeatureSchema::for_model(model),
            rows: self.rows.iter().map(|r| r.select(model)).collect(),
        }
    }

    /// Sets every chat-family column to 0 (lexicon-less regions).
    pub fn zero_chat(&mut self) {
        let cols: Vec<usize> = (0..self.schema.len())
            .filter(|&i| self.schema.families[i] == FeatureFamily::Chat)
            .collect();
        for r in &mut self.rows {
            for &i in &cols {
                r.values[i] = 0.0;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = self.schema.names.join(",");
        header.push_str(",label,agreement,region\n");
        w.write_all(header.as_bytes())?;
        let mut line = String::new();
        for r in &self.rows {
            line.clear();
            for v in &r.values {
                line.push_str(&format_sig9(*v));
                line.push(',');
            }
            line.push_str(r.label.as_str());
            line.push(',');
            line.push_str(r.agreement.as_str());
            line.push(',');
            line.push_str(r.region.as_str());
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self, FeatureError> {
        let err = |line: usize, msg: String| FeatureError::Matrix(format!("line {line}: {msg}"));
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(h) => h.map_err(|e| err(1, e.to_string()))?,
            None => return Err(err(1, "empty file".into())),
        };
        let cols: Vec<String> = header.split(',').map(str::to_string).collect();
        let n = cols.len();
        if n < 3 || cols[n - 3..] != ["label", "agreement", "region"] {
            return Err(err(1, "header must end with label,agreement,region".into()));
        }
        let schema = FeatureSchema::from_names(&cols[..n - 3])
            .ok_or_else(|| err(1, "header does not match any known feature schema".into()))?;
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line.map_err(|e| err(line_no, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n {
                return Err(err(line_no, format!("expected {n} fields, got {}", fields.len())));
            }
            let values = fields[..n - 3]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| err(line_no, format!("`{f}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let field = |s: &str| FeatureError::Matrix(format!("line {line_no}: {s}"));
            rows.push(FeatureVector {
                values,
                label: fields[n - 3].parse().map_err(|e: DataError| field(&e.to_string()))?,
                agreement: fields[n - 2].parse().map_err(|e: DataError| field(&e.to_string()))?,
                region: fields[n - 1].parse().map_err(|e: DataError| field(&e.to_string()))?,
            });
        }
        Ok(Self { schema, rows })
    }
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros dropped.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
