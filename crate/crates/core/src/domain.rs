//! Case data model and the `cases.jsonl` corpus format.
//!
//! A case bundles up to five reported matches of one accused player together
//! with the crowd verdict (decision plus agreement level). Every other module
//! consumes these types; nothing here derives labels from votes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::ops::{Add, AddAssign};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

pub const MAX_MATCHES_PER_CASE: usize = 5;
pub const MAX_COMMENT_CHARS: usize = 500;
pub const ALLIES_PER_MATCH: usize = 4;
pub const ENEMIES_PER_MATCH: usize = 5;
pub const PLAYERS_PER_MATCH: usize = 1 + ALLIES_PER_MATCH + ENEMIES_PER_MATCH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Na,
    Euw,
    Kr,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Na, Region::Euw, Region::Kr];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Na => "na",
            Region::Euw => "euw",
            Region::Kr => "kr",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::Na => "NA",
            Region::Euw => "EUW",
            Region::Kr => "KR",
        }
    }
}

impl FromStr for Region {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "na" => Ok(Region::Na),
            "euw" => Ok(Region::Euw),
            "kr" => Ok(Region::Kr),
            _ => Err(DataError::Parse(format!("unknown region `{s}` (expected na, euw or kr)"))),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Punish,
    Pardon,
}

impl Decision {
    pub fn is_punish(self) -> bool {
        self == Decision::Punish
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Punish => "punish",
            Decision::Pardon => "pardon",
        }
    }

    pub fn flipped(self) -> Decision {
        match self {
            Decision::Punish => Decision::Pardon,
            Decision::Pardon => Decision::Punish,
        }
    }
}

impl FromStr for Decision {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "punish" => Ok(Decision::Punish),
            "pardon" => Ok(Decision::Pardon),
            _ => Err(DataError::Parse(format!("unknown decision `{s}`"))),
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Reviewer consensus, ordered from weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementLevel {
    Majority,
    StrongMajority,
    OverwhelmingMajority,
}

impl AgreementLevel {
    pub const ALL: [AgreementLevel; 3] = [
        AgreementLevel::Majority,
        AgreementLevel::StrongMajority,
        AgreementLevel::OverwhelmingMajority,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgreementLevel::Majority => "majority",
            AgreementLevel::StrongMajority => "strong_majority",
            AgreementLevel::OverwhelmingMajority => "overwhelming_majority",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            AgreementLevel::Majority => "M",
            AgreementLevel::StrongMajority => "SM",
            AgreementLevel::OverwhelmingMajority => "OM",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for AgreementLevel {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "majority" | "m" => Ok(AgreementLevel::Majority),
            "strong_majority" | "sm" => Ok(AgreementLevel::StrongMajority),
            "overwhelming_majority" | "om" => Ok(AgreementLevel::OverwhelmingMajority),
            _ => Err(DataError::Parse(format!("unknown agreement level `{s}`"))),
        }
    }
}

impl fmt::Display for AgreementLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The seven report categories that can reach a case. Unskilled player,
/// refusing to communicate and leaving/AFK reports are not part of the
/// corpus. Declaration order is the tie-break order used when picking a
/// match's most common category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportCategory {
    AssistingEnemyTeam,
    IntentionalFeeding,
    OffensiveLanguage,
    VerbalAbuse,
    NegativeAttitude,
    InappropriateName,
    Spamming,
}

impl ReportCategory {
    pub const COUNT: usize = 7;
    pub const ALL: [ReportCategory; 7] = [
        ReportCategory::AssistingEnemyTeam,
        ReportCategory::IntentionalFeeding,
        ReportCategory::OffensiveLanguage,
        ReportCategory::VerbalAbuse,
        ReportCategory::NegativeAttitude,
        ReportCategory::InappropriateName,
        ReportCategory::Spamming,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ReportCategory::AssistingEnemyTeam => "assisting_enemy_team",
            ReportCategory::IntentionalFeeding => "intentional_feeding",
            ReportCategory::OffensiveLanguage => "offensive_language",
            ReportCategory::VerbalAbuse => "verbal_abuse",
            ReportCategory::NegativeAttitude => "negative_attitude",
            ReportCategory::InappropriateName => "inappropriate_name",
            ReportCategory::Spamming => "spamming",
        }
    }

    /// Dotted prefix used in feature names, e.g. `verbal.abuse`.
    pub fn feature_prefix(self) -> &'static str {
        match self {
            ReportCategory::AssistingEnemyTeam => "assisting.enemy.team",
            ReportCategory::IntentionalFeeding => "intentionally.feeding",
            ReportCategory::OffensiveLanguage => "offensive.language",
            ReportCategory::VerbalAbuse => "verbal.abuse",
            ReportCategory::NegativeAttitude => "negative.attitude",
            ReportCategory::InappropriateName => "inappropriate.name",
            ReportCategory::Spamming => "spamming",
        }
    }

    /// Offenses expressed through chat; victims are derived from who reported.
    pub fn is_communication(self) -> bool {
        matches!(
            self,
            ReportCategory::VerbalAbuse
                | ReportCategory::OffensiveLanguage
                | ReportCategory::NegativeAttitude
        )
    }
}

impl fmt::Display for ReportCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Offender,
    Ally,
    Enemy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportSource {
    Ally,
    Enemy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerStats {
    pub role: Role,
    pub kills: u32,
    pub deaths: u32,
    pub assists: u32,
    pub damage_dealt: u64,
    pub damage_received: u64,
    pub gold_earned: u64,
    /// Seconds.
    pub time_played: u32,
}

impl PlayerStats {
    pub fn kda(&self) -> f64 {
        kda(self.kills, self.deaths, self.assists)
    }
}

/// (kills + assists) / (deaths + 1)
pub fn kda(kills: u32, deaths: u32, assists: u32) -> f64 {
    (kills as f64 + assists as f64) / (deaths as f64 + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub source: ReportSource,
    pub category: ReportCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatMessage {
    pub speaker_role: Role,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Match {
    /// Seconds.
    pub duration: u32,
    pub offender_won: bool,
    pub players: Vec<PlayerStats>,
    pub reports: Vec<Report>,
    #[serde(default)]
    pub chat: Vec<ChatMessage>,
}

impl Match {
    pub fn offender(&self) -> Option<&PlayerStats> {
        self.players.iter().find(|p| p.role == Role::Offender)
    }

    pub fn players_with_role(&self, role: Role) -> impl Iterator<Item = &PlayerStats> {
        self.players.iter().filter(move |p| p.role == role)
    }

    pub fn duration_minutes(&self) -> f64 {
        self.duration as f64 / 60.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    pub case_id: String,
    pub region: Region,
    pub decision: Decision,
    pub agreement: AgreementLevel,
    pub matches: Vec<Match>,
}

impl Case {
    pub fn report_count(&self) -> usize {
        self.matches.iter().map(|m| m.reports.len()).sum()
    }
}

/// One broken invariant: which type, which field, and what rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub type_name: &'static str,
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(type_name: &'static str, field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self { type_name, field: field.into(), rule: rule.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}: {}", self.type_name, self.field, self.rule)
    }
}

/// Checks every structural invariant of a case. An empty list means the case
/// is accepted by all downstream extractors.
pub fn validate_case(case: &Case) -> Vec<Violation> {
    let mut out = Vec::new();
    if case.case_id.is_empty() {
        out.push(Violation::new("Case", "case_id", "must be non-empty"));
    }
    let n = case.matches.len();
    if n == 0 {
        out.push(Violation::new("Case", "matches", "count 0 < 1"));
    } else if n > MAX_MATCHES_PER_CASE {
        out.push(Violation::new("Case", "matches", format!("count {n} > {MAX_MATCHES_PER_CASE}")));
    }
    for (i, m) in case.matches.iter().enumerate() {
        validate_match(m, i, &mut out);
    }
    out
}

fn validate_match(m: &Match, index: usize, out: &mut Vec<Violation>) {
    let at = |field: &str| format!("matches[{index}].{field}");
    if m.duration == 0 {
        out.push(Violation::new("Match", at("duration"), "must be > 0"));
    }
    if m.players.len() != PLAYERS_PER_MATCH {
        out.push(Violation::new(
            "Match",
            at("players"),
            format!("count {} != {PLAYERS_PER_MATCH}", m.players.len()),
        ));
    }
    for (role, expected) in [
        (Role::Offender, 1),
        (Role::Ally, ALLIES_PER_MATCH),
        (Role::Enemy, ENEMIES_PER_MATCH),
    ] {
        let got = m.players_with_role(role).count();
        if got != expected {
            out.push(Violation::new(
                "Match",
                at("players"),
                format!("{got} {role:?} rows, expected {expected}").to_lowercase(),
            ));
        }
    }
    for (j, p) in m.players.iter().enumerate() {
        if p.time_played > m.duration {
            out.push(Violation::new(
                "PlayerStats",
                format!("matches[{index}].players[{j}].time_played"),
                format!("{} > match duration {}", p.time_played, m.duration),
            ));
        }
    }
    if m.reports.is_empty() {
        out.push(Violation::new("Match", at("reports"), "must contain at least 1 report"));
    }
    for (j, r) in m.reports.iter().enumerate() {
        if let Some(c) = &r.comment {
            let chars = c.chars().count();
            let field = format!("matches[{index}].reports[{j}].comment");
            if chars == 0 {
                out.push(Violation::new("Report", field, "present but empty"));
            } else if chars > MAX_COMMENT_CHARS {
                out.push(Violation::new(
                    "Report",
                    field,
                    format!("length {chars} > {MAX_COMMENT_CHARS}"),
                ));
            }
        }
    }
}

/// Parses one JSON line into a case, naming the offending field on schema
/// errors.
pub fn parse_case(line: &str) -> Result<Case, String> {
    let de = &mut serde_json::Deserializer::from_str(line);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." || path.is_empty() {
            e.inner().to_string()
        } else {
            format!("field `{path}`: {}", e.inner())
        }
    })
}

/// Canonical serialization: keys sorted, floats in shortest round-trip form.
pub fn to_canonical_json(case: &Case) -> String {
    // serde_json::Map is a BTreeMap here, so going through Value sorts keys.
    let value = serde_json::to_value(case).expect("case serializes");
    serde_json::to_string(&value).expect("value serializes")
}

pub fn read_cases<R: BufRead>(reader: R) -> Result<Vec<Case>, DataError> {
    let mut cases = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let case = parse_case(&line).map_err(|message| DataError::Json { line: line_no, message })?;
        let violations = validate_case(&case);
        if !violations.is_empty() {
            return Err(DataError::Invalid { line: line_no, violations });
        }
        cases.push(case);
    }
    Ok(cases)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Case>, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    read_cases(BufReader::new(file))
}

pub fn write_cases<W: Write>(mut w: W, cases: &[Case]) -> std::io::Result<()> {
    for c in cases {
        writeln!(w, "{}", to_canonical_json(c))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub cases: u64,
    pub matches: u64,
    pub reports: u64,
}

impl Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            cases: self.cases + o.cases,
            matches: self.matches + o.matches,
            reports: self.reports + o.reports,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

/// Per-region corpus tallies in the layout of a data-collection table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub regions: BTreeMap<Region, Counts>,
}

impl DatasetSummary {
    pub fn region(&self, r: Region) -> Counts {
        self.regions.get(&r).copied().unwrap_or_default()
    }

    pub fn total(&self) -> Counts {
        self.regions.values().fold(Counts::default(), |a, &b| a + b)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        for r in Region::ALL {
            obj.insert(r.as_str().into(), serde_json::to_value(self.region(r)).unwrap());
        }
        obj.insert("total".into(), serde_json::to_value(self.total()).unwrap());
        serde_json::Value::Object(obj)
    }

    /// Fixed-column table, rows Cases / Matches / Reports.
    pub fn to_table(&self) -> String {
        let mut s = format!("{:<10}", "");
        for r in Region::ALL {
            s.push_str(&format!("{:>14}", r.label()));
        }
        s.push_str(&format!("{:>14}\n", "Total"));
        let rows: [(&str, fn(&Counts) -> u64); 3] = [
            ("Cases", |c| c.cases),
            ("Matches", |c| c.matches),
            ("Reports", |c| c.reports),
        ];
        for (name, get) in rows {
            s.push_str(&format!("{name:<10}"));
            for r in Region::ALL {
                s.push_str(&format!("{:>14}", get(&self.region(r))));
            }
            s.push_str(&format!("{:>14}\n", get(&self.total())));
        }
        s
    }
}

impl Add for DatasetSummary {
    type Output = DatasetSummary;
    fn add(mut self, o: DatasetSummary) -> DatasetSummary {
        for (r, c) in o.regions {
            *self.regions.entry(r).or_default() += c;
        }
        self
    }
}

pub fn summarize_dataset<'a>(cases: impl IntoIterator<Item = &'a Case>) -> DatasetSummary {
    let mut s = DatasetSummary::default();
    for c in cases {
        *s.regions.entry(c.region).or_default() += Counts {
            cases: 1,
            matches: c.matches.len() as u64,
            reports: c.report_count() as u64,
        };
    }
    s
}
