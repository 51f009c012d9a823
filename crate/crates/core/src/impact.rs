//! Crowd-review cost and victim-exposure arithmetic.
//!
//! Defaults are the published platform figures: 5 IP paid per majority vote,
//! a 450 IP champion also sold for 260 RP, 1380 RP for $10, 105M votes over
//! 560k toxic players, 47M votes in the first year at 1.49 votes/s, and 12M
//! daily players spending 83 minutes (2.21 matches) per day.

use serde::{Deserialize, Serialize};

use crate::error::ImpactError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EconomyParams {
    pub ip_per_vote: f64,
    pub champion_ip: f64,
    pub champion_rp: f64,
    pub usd_per_bundle: f64,
    pub rp_per_bundle: f64,
}

impl Default for EconomyParams {
    fn default() -> Self {
        Self {
            ip_per_vote: 5.0,
            champion_ip: 450.0,
            champion_rp: 260.0,
            usd_per_bundle: 10.0,
            rp_per_bundle: 1380.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThroughputParams {
    pub total_votes: f64,
    pub toxic_players: f64,
    pub votes_first_year: f64,
    pub votes_per_second: f64,
    pub majority_vote_fraction: f64,
}

impl Default for ThroughputParams {
    fn default() -> Self {
        Self {
            total_votes: 105_000_000.0,
            toxic_players: 560_000.0,
            votes_first_year: 47_000_000.0,
            votes_per_second: 1.49,
            majority_vote_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationParams {
    pub daily_players: f64,
    /// Taken as given. The published monthly-hours figure would imply about
    /// 166.7 minutes per player per day.
    pub minutes_per_day: f64,
    pub match_minutes: f64,
    pub matches_per_day: f64,
    pub innocents_per_match: f64,
}

impl Default for PopulationParams {
    fn default() -> Self {
        Self {
            daily_players: 12_000_000.0,
            minutes_per_day: 83.0,
            match_minutes: 37.5,
            matches_per_day: 2.21,
            innocents_per_match: 9.0,
        }
    }
}

impl PopulationParams {
    /// matches_per_day should equal minutes_per_day / match_minutes to two
    /// decimals.
    pub fn is_consistent(&self) -> bool {
        (self.matches_per_day - self.minutes_per_day / self.match_minutes).abs() < 0.01
    }
}

/// USD paid per majority vote.
pub fn vote_cost_usd(e: &EconomyParams) -> f64 {
    e.ip_per_vote * (e.champion_rp / e.champion_ip) * (e.usd_per_bundle / e.rp_per_bundle)
}

pub fn votes_per_case(t: &ThroughputParams) -> Result<f64, ImpactError> {
    if t.toxic_players <= 0.0 {
        return Err(ImpactError::NonPositive("toxic_players"));
    }
    Ok(t.total_votes / t.toxic_players)
}

pub fn seconds_per_case(t: &ThroughputParams) -> Result<f64, ImpactError> {
    if t.votes_per_second <= 0.0 {
        return Err(ImpactError::NonPositive("votes_per_second"));
    }
    Ok(votes_per_case(t)? / t.votes_per_second)
}

/// First-year crowd cost. In paper mode the per-vote price is first rounded
/// to whole cents, which makes the headline figure exact.
pub fn first_year_cost_usd(t: &ThroughputParams, e: &EconomyParams, paper_mode: bool) -> f64 {
    let paid_votes = t.votes_first_year * t.majority_vote_fraction;
    if paper_mode {
        let cents = (vote_cost_usd(e) * 100.0).round();
        paid_votes * cents / 100.0
    } else {
        paid_votes * vote_cost_usd(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DailyExposure {
    pub toxic_per_day: f64,
    pub toxic_matches_per_day: f64,
    pub innocents_exposed_per_day: f64,
}

pub fn victims_protected(
    t: &ThroughputParams,
    p: &PopulationParams,
) -> Result<DailyExposure, ImpactError> {
    let toxic_per_day = t.votes_first_year / votes_per_case(t)? / 365.0;
    let toxic_matches_per_day = toxic_per_day * p.matches_per_day;
    Ok(DailyExposure {
        toxic_per_day,
        toxic_matches_per_day,
        innocents_exposed_per_day: toxic_matches_per_day * p.innocents_per_match,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpactReport {
    pub paper_mode: bool,
    pub vote_cost_usd: f64,
    pub votes_per_case: f64,
    pub seconds_per_case: f64,
    pub first_year_cost_usd: f64,
    pub toxic_per_day: f64,
    pub toxic_matches_per_day: f64,
    pub innocents_exposed_per_day: f64,
}

pub fn impact_report(
    e: &EconomyParams,
    t: &ThroughputParams,
    p: &PopulationParams,
    paper_mode: bool,
) -> Result<ImpactReport, ImpactError> {
    let daily = victims_protected(t, p)?;
    let cost = vote_cost_usd(e);
    Ok(ImpactReport {
        paper_mode,
        vote_cost_usd: if paper_mode { (cost * 100.0).round() / 100.0 } else { cost },
        votes_per_case: votes_per_case(t)?,
        seconds_per_case: seconds_per_case(t)?,
        first_year_cost_usd: first_year_cost_usd(t, e, paper_mode),
        toxic_per_day: daily.toxic_per_day,
        toxic_matches_per_day: daily.toxic_matches_per_day,
        innocents_exposed_per_day: daily.innocents_exposed_per_day,
    })
}

fn thousands(x: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, x.abs());
    let (int, frac) = s.split_once('.').map_or((s.as_str(), ""), |(a, b)| (a, b));
    let mut grouped = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    let sign = if x < 0.0 { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{grouped}")
    } else {
        format!("{sign}{grouped}.{frac}")
    }
}

impl ImpactReport {
    pub fn to_table(&self) -> String {
        let rows = [
            ("cost per vote (USD)", format!("{:.4}", self.vote_cost_usd)),
            ("votes per case", format!("{}", self.votes_per_case)),
            ("seconds per case", format!("{:.2}", self.seconds_per_case)),
            ("first-year crowd cost (USD)", format!("{}", self.first_year_cost_usd.round())),
            ("toxic players warned per day", thousands(self.toxic_per_day, 2)),
            ("toxic matches per day", thousands(self.toxic_matches_per_day, 2)),
            ("innocents exposed per day", thousands(self.innocents_exposed_per_day, 2)),
        ];
        let mut s = String::new();
        for (label, value) in rows {
            s.push_str(&format!("{label:<32}{value:>16}\n"));
        }
        s
    }
}
