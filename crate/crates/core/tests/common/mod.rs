//! Fixture builders and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use tribunal_core::domain::{
    AgreementLevel, Case, ChatMessage, Decision, Match, PlayerStats, Region, Report,
    ReportCategory, ReportSource, Role,
};
use tribunal_core::ValenceLexicon;

pub fn player(role: Role, k: u32, d: u32, a: u32, dealt: u64, recv: u64, gold: u64, t: u32) -> PlayerStats {
    PlayerStats {
        role,
        kills: k,
        deaths: d,
        assists: a,
        damage_dealt: dealt,
        damage_received: recv,
        gold_earned: gold,
        time_played: t,
    }
}

/// Offender plus 4 allies and 5 enemies whose stats vary with `seed`.
pub fn roster(duration: u32, offender: PlayerStats, seed: u32) -> Vec<PlayerStats> {
    let mut v = vec![offender];
    for i in 0..4u32 {
        let s = seed + i;
        v.push(player(Role::Ally, s % 7, (s * 3) % 5, (s * 5) % 9, 9000 + 611 * s as u64, 8000 + 433 * s as u64, 7000 + 257 * s as u64, duration));
    }
    for i in 0..5u32 {
        let s = seed + 10 + i;
        v.push(player(Role::Enemy, (s * 2) % 11, s % 4, (s * 7) % 10, 10_000 + 503 * s as u64, 7500 + 389 * s as u64, 8100 + 199 * s as u64, duration));
    }
    v
}

pub fn report(source: ReportSource, category: ReportCategory, comment: Option<&str>) -> Report {
    Report { source, category, comment: comment.map(str::to_string) }
}

pub fn chat(role: Role, text: &str) -> ChatMessage {
    ChatMessage { speaker_role: role, text: text.to_string() }
}

pub fn mk_match(duration: u32, won: bool, offender: PlayerStats, seed: u32, reports: Vec<Report>, chat: Vec<ChatMessage>) -> Match {
    Match { duration, offender_won: won, players: roster(duration, offender, seed), reports, chat }
}

pub fn mk_case(id: &str, decision: Decision, agreement: AgreementLevel, matches: Vec<Match>) -> Case {
    Case { case_id: id.to_string(), region: Region::Na, decision, agreement, matches }
}

use ReportCategory::*;
use ReportSource::{Ally as A, Enemy as E};

/// Two verbal-abuse matches with hand-checked numbers (see the fixture test).
pub fn two_match_verbal_abuse() -> Case {
    let m1 = mk_match(
        1800,
        false,
        player(Role::Offender, 5, 4, 3, 12_000, 15_000, 9_000, 1800),
        1,
        vec![
            report(A, VerbalAbuse, Some("flamed us")),
            report(A, VerbalAbuse, None),
            report(A, VerbalAbuse, None),
            report(E, VerbalAbuse, None),
        ],
        vec![
            chat(Role::Offender, "you are bad and stupid"),
            chat(Role::Offender, "noob"),
            chat(Role::Ally, "sorry"),
            chat(Role::Enemy, "gg good game"),
        ],
    );
    let m2 = mk_match(
        2400,
        true,
        player(Role::Offender, 1, 10, 2, 6_000, 20_000, 8_000, 2100),
        2,
        vec![report(A, VerbalAbuse, None), report(A, VerbalAbuse, Some("so rude"))],
        vec![chat(Role::Offender, "hate this"), chat(Role::Ally, "love you all")],
    );
    mk_case("va-2", Decision::Punish, AgreementLevel::OverwhelmingMajority, vec![m1, m2])
}

/// Twelve cases covering every category, every victim scope, category ties,
/// leavers, comments, empty chat and five-match cases.
pub fn fixture_corpus() -> Vec<Case> {
    let off = |k, d, a, t| player(Role::Offender, k, d, a, 7000 + 100 * k as u64, 9000 + 50 * d as u64, 6000 + 300 * a as u64, t);
    let mut out = vec![two_match_verbal_abuse()];
    out.push(mk_case(
        "feed-1",
        Decision::Punish,
        AgreementLevel::StrongMajority,
        vec![
            mk_match(1500, false, off(0, 14, 1, 1500), 3, vec![report(A, IntentionalFeeding, None), report(A, IntentionalFeeding, None)], vec![]),
            mk_match(2000, false, off(1, 12, 0, 2000), 4, vec![report(A, IntentionalFeeding, Some("fed")); 4], vec![chat(Role::Ally, "stop feeding")]),
        ],
    ));
    out.push(mk_case(
        "enemy-scope",
        Decision::Pardon,
        AgreementLevel::Majority,
        vec![mk_match(2200, true, off(6, 2, 8, 2200), 5, vec![report(E, OffensiveLanguage, Some("rude")), report(E, OffensiveLanguage, None)], vec![chat(Role::Offender, "nice try"), chat(Role::Enemy, "trash talk"), chat(Role::Ally, "win win")])],
    ));
    out.push(mk_case(
        "all-scope",
        Decision::Punish,
        AgreementLevel::Majority,
        vec![mk_match(1900, false, off(3, 6, 4, 1900), 6, vec![report(A, NegativeAttitude, None), report(E, NegativeAttitude, None)], vec![chat(Role::Offender, "ugh sad"), chat(Role::Ally, "happy happy"), chat(Role::Enemy, "bad")])],
    ));
    out.push(mk_case(
        "tie",
        Decision::Pardon,
        AgreementLevel::OverwhelmingMajority,
        vec![mk_match(2100, true, off(8, 1, 9, 2100), 7, vec![report(A, VerbalAbuse, None), report(A, VerbalAbuse, None), report(E, IntentionalFeeding, None), report(E, IntentionalFeeding, None)], vec![chat(Role::Offender, "great fun")])],
    ));
    out.push(mk_case(
        "leaver",
        Decision::Punish,
        AgreementLevel::OverwhelmingMajority,
        vec![mk_match(2500, false, off(0, 3, 0, 600), 8, vec![report(A, AssistingEnemyTeam, Some("afk")), report(E, Spamming, None), report(A, AssistingEnemyTeam, None)], vec![])],
    ));
    out.push(mk_case(
        "name",
        Decision::Pardon,
        AgreementLevel::StrongMajority,
        vec![mk_match(1700, true, off(4, 4, 4, 1700), 9, vec![report(E, InappropriateName, None)], vec![chat(Role::Enemy, "lol")])],
    ));
    out.push(mk_case(
        "spam-5",
        Decision::Punish,
        AgreementLevel::StrongMajority,
        (0..5)
            .map(|i| {
                mk_match(
                    1600 + 100 * i,
                    i % 2 == 0,
                    off(i, 5 - i, 2 * i, 1600 + 100 * i),
                    10 + i,
                    vec![report(A, Spamming, if i == 2 { Some("spam") } else { None }); 1 + i as usize],
                    vec![chat(Role::Offender, "go go go"); i as usize],
                )
            })
            .collect(),
    ));
    out.push(mk_case(
        "mixed-3",
        Decision::Pardon,
        AgreementLevel::Majority,
        vec![
            mk_match(2000, true, off(7, 2, 11, 2000), 20, vec![report(A, VerbalAbuse, None)], vec![chat(Role::Offender, "good job team"), chat(Role::Ally, "thanks good")]),
            mk_match(2300, false, off(2, 9, 3, 2300), 21, vec![report(E, IntentionalFeeding, None), report(E, IntentionalFeeding, Some("inting"))], vec![]),
            mk_match(1800, true, off(5, 5, 5, 1800), 22, vec![report(A, VerbalAbuse, Some("abuse")), report(E, VerbalAbuse, None)], vec![chat(Role::Offender, "Idiot! IDIOT."), chat(Role::Enemy, "kill kill war")]),
        ],
    ));
    out.push(mk_case(
        "apostrophes",
        Decision::Punish,
        AgreementLevel::OverwhelmingMajority,
        vec![mk_match(2600, false, off(1, 8, 2, 2600), 30, vec![report(A, OffensiveLanguage, None); 3], vec![chat(Role::Offender, "'hate' you're 'rage'"), chat(Role::Ally, "...")])],
    ));
    out.push(mk_case(
        "quiet",
        Decision::Pardon,
        AgreementLevel::OverwhelmingMajority,
        vec![
            mk_match(1900, true, off(9, 0, 12, 1900), 31, vec![report(E, NegativeAttitude, None)], vec![]),
            mk_match(2000, true, off(10, 1, 7, 2000), 32, vec![report(E, NegativeAttitude, None), report(E, NegativeAttitude, None)], vec![]),
        ],
    ));
    out.push(mk_case(
        "assist-enemy",
        Decision::Punish,
        AgreementLevel::Majority,
        vec![
            mk_match(2400, false, off(0, 7, 1, 2400), 40, vec![report(A, AssistingEnemyTeam, None); 3], vec![chat(Role::Offender, "lazy")]),
            mk_match(2100, false, off(2, 6, 0, 2100), 41, vec![report(A, AssistingEnemyTeam, Some("helping them")), report(A, VerbalAbuse, None)], vec![chat(Role::Offender, "loser loser")]),
        ],
    ));
    out
}

// ---------------------------------------------------------------- valence

/// Tokenizes by walking characters; independent of the library tokenizer.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        let t: &str = cur.trim_matches('\'');
        if !t.is_empty() {
            out.push(t.to_lowercase());
        }
        cur.clear();
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '\'' {
            cur.push(ch);
        } else {
            flush(&mut cur, &mut out);
        }
    }
    flush(&mut cur, &mut out);
    out
}

/// Counts each lexicon word's occurrences and returns the count-weighted
/// mean valence, or 0 when nothing matches.
pub fn oracle_valence(lexicon: &ValenceLexicon, texts: &[&str]) -> f64 {
    let table: HashMap<&str, f64> = lexicon.entries().collect();
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for t in texts {
        for tok in oracle_tokens(t) {
            if table.contains_key(tok.as_str()) {
                *counts.entry(tok).or_default() += 1;
            }
        }
    }
    let n: u64 = counts.values().sum();
    if n == 0 {
        return 0.0;
    }
    counts.iter().map(|(w, &c)| table[w.as_str()] * c as f64).sum::<f64>() / n as f64
}

// --------------------------------------------------------------- features

fn plurality(m: &Match) -> ReportCategory {
    let mut best = (0usize, ReportCategory::ALL[0]);
    for c in ReportCategory::ALL {
        let n = m.reports.iter().filter(|r| r.category == c).count();
        if n > best.0 {
            best = (n, c);
        }
    }
    best.1
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn sd(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

fn kda(p: &PlayerStats) -> f64 {
    (p.kills + p.assists) as f64 / (p.deaths + 1) as f64
}

fn texts(m: &Match, roles: &[Role]) -> Vec<String> {
    m.chat.iter().filter(|c| roles.contains(&c.speaker_role)).map(|c| c.text.clone()).collect()
}

fn val(lex: &ValenceLexicon, t: &[String]) -> f64 {
    let refs: Vec<&str> = t.iter().map(String::as_str).collect();
    oracle_valence(lex, &refs)
}

/// Every named feature computed directly from its definition.
pub fn oracle_features(case: &Case, lex: &ValenceLexicon) -> BTreeMap<String, f64> {
    let mut f = BTreeMap::new();
    for c in ReportCategory::ALL {
        let p = c.feature_prefix();
        let group: Vec<&Match> = case.matches.iter().filter(|m| plurality(m) == c).collect();
        let mut put = |name: String, values: Vec<f64>, with_sd: bool| {
            f.insert(name.clone(), mean(&values));
            if with_sd {
                f.insert(format!("{name}.sd"), sd(&values));
            }
        };
        let off = |m: &Match| m.players.iter().find(|x| x.role == Role::Offender).unwrap().clone();
        let mins = |m: &Match| m.duration as f64 / 60.0;
        let col = |g: &dyn Fn(&Match) -> f64| group.iter().map(|m| g(m)).collect::<Vec<f64>>();
        put(format!("{p}.offender.kills"), col(&|m| off(m).kills as f64), true);
        put(format!("{p}.offender.deaths"), col(&|m| off(m).deaths as f64), true);
        put(format!("{p}.offender.assists"), col(&|m| off(m).assists as f64), true);
        put(format!("{p}.offender.kda"), col(&|m| kda(&off(m))), true);
        put(format!("{p}.offender.damage.dealt"), col(&|m| off(m).damage_dealt as f64), true);
        put(format!("{p}.offender.damage.received"), col(&|m| off(m).damage_received as f64), true);
        put(format!("{p}.offender.gold"), col(&|m| off(m).gold_earned as f64), true);
        put(format!("{p}.offender.gpm"), col(&|m| off(m).gold_earned as f64 / mins(m)), true);
        put(format!("{p}.offender.time.played"), col(&|m| off(m).time_played as f64), true);
        for (side, role) in [("allies", Role::Ally), ("enemies", Role::Enemy)] {
            let team = |m: &Match| m.players.iter().filter(|x| x.role == role).cloned().collect::<Vec<_>>();
            let per = |m: &Match, g: &dyn Fn(&PlayerStats) -> f64| mean(&team(m).iter().map(g).collect::<Vec<_>>());
            put(format!("{p}.{side}.kills"), col(&|m| per(m, &|x| x.kills as f64)), true);
            put(format!("{p}.{side}.deaths"), col(&|m| per(m, &|x| x.deaths as f64)), true);
            put(format!("{p}.{side}.assists"), col(&|m| per(m, &|x| x.assists as f64)), true);
            put(
                format!("{p}.{side}.kda"),
                col(&|m| {
                    let t = team(m);
                    let k: u32 = t.iter().map(|x| x.kills).sum();
                    let d: u32 = t.iter().map(|x| x.deaths).sum();
                    let a: u32 = t.iter().map(|x| x.assists).sum();
                    (k + a) as f64 / (d + 1) as f64
                }),
                true,
            );
            put(format!("{p}.{side}.kda.avg.per.player"), col(&|m| per(m, &kda)), true);
            put(format!("{p}.{side}.damage.dealt"), col(&|m| per(m, &|x| x.damage_dealt as f64)), true);
            put(format!("{p}.{side}.damage.received"), col(&|m| per(m, &|x| x.damage_received as f64)), true);
            put(format!("{p}.{side}.gpm"), col(&|m| per(m, &|x| x.gold_earned as f64 / mins(m))), true);
        }
        f.insert(format!("{p}.match.count"), group.len() as f64);
        f.insert(format!("{p}.loss.rate"), mean(&col(&|m| if m.offender_won { 0.0 } else { 1.0 })));

        let count = |m: &Match, s: ReportSource, commented: bool| {
            m.reports.iter().filter(|r| r.source == s && (!commented || r.comment.is_some())).count() as f64
        };
        f.insert(format!("{p}.allied.report.count"), mean(&col(&|m| count(m, A, false))));
        f.insert(format!("{p}.enemy.report.count"), mean(&col(&|m| count(m, E, false))));
        f.insert(format!("{p}.allied.report.comment.count"), mean(&col(&|m| count(m, A, true))));
        f.insert(format!("{p}.enemy.report.comment.count"), mean(&col(&|m| count(m, E, true))));

        let ov = col(&|m| val(lex, &texts(m, &[Role::Offender])));
        f.insert(format!("{p}.offender.valence"), mean(&ov));
        f.insert(format!("{p}.offender.valence.sd"), sd(&ov));
        let vb = |m: &Match| -> (f64, f64) {
            let ally = m.reports.iter().any(|r| r.source == A);
            let enemy = m.reports.iter().any(|r| r.source == E);
            if c.is_communication() && ally && enemy {
                (val(lex, &texts(m, &[Role::Ally, Role::Enemy])), 0.0)
            } else if c.is_communication() && enemy {
                (val(lex, &texts(m, &[Role::Enemy])), val(lex, &texts(m, &[Role::Ally])))
            } else {
                (val(lex, &texts(m, &[Role::Ally])), val(lex, &texts(m, &[Role::Enemy])))
            }
        };
        f.insert(format!("{p}.victim.valence"), mean(&col(&|m| vb(m).0)));
        f.insert(format!("{p}.bystander.valence"), mean(&col(&|m| vb(m).1)));
        let om = col(&|m| texts(m, &[Role::Offender]).len() as f64);
        f.insert(format!("{p}.offender.chat.msgs"), mean(&om));
        f.insert(format!("{p}.offender.chat.msgs.sd"), sd(&om));
        let tm = col(&|m| m.chat.len() as f64);
        f.insert(format!("{p}.total.chat.msgs"), mean(&tm));
        f.insert(format!("{p}.total.chat.msgs.sd"), sd(&tm));
    }
    let all_roles = [Role::Offender, Role::Ally, Role::Enemy];
    let pooled = |roles: &[Role]| -> Vec<String> { case.matches.iter().flat_map(|m| texts(m, roles)).collect() };
    f.insert("case.offender.valence".into(), val(lex, &pooled(&[Role::Offender])));
    f.insert("case.all.valence".into(), val(lex, &pooled(&all_roles)));
    f.insert("case.offender.msg.count".into(), pooled(&[Role::Offender]).len() as f64);
    f.insert("case.total.msg.count".into(), pooled(&all_roles).len() as f64);
    f
}

// ------------------------------------------------------------------- auc

/// P(score_pos > score_neg) + 0.5 P(tie) over all positive/negative pairs.
pub fn pairwise_auc(scores: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            wins += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

// ----------------------------------------------------------------- split

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSplit {
    pub feature: usize,
    pub threshold: f64,
    pub decrease: f64,
}

fn gini(pos: usize, n: usize) -> f64 {
    let p = pos as f64 / n as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Exhaustive search: every feature, every midpoint between distinct sorted
/// values. Candidates are compared exactly as fractions
/// sum_side pos*(n_side-pos)/n_side; ties go to lower (feature, threshold).
pub fn brute_force_split(rows: &[Vec<f64>], labels: &[bool], min_leaf: usize) -> Option<OracleSplit> {
    let n = rows.len();
    let min_leaf = min_leaf.max(1);
    let total_pos = labels.iter().filter(|&&l| l).count();
    // (numerator, denominator) of the weighted-impurity proxy
    let parent = ((total_pos * (n - total_pos)) as u128, n as u128);
    let mut best: Option<(u128, u128, usize, f64)> = None;
    for f in 0..rows[0].len() {
        let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = tribunal_core::forest::midpoint(w[0], w[1]);
            let left: Vec<usize> = (0..n).filter(|&i| rows[i][f] <= t).collect();
            let (nl, nr) = (left.len(), n - left.len());
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let pl = left.iter().filter(|&&i| labels[i]).count();
            let pr = total_pos - pl;
            let num = (pl * (nl - pl) * nr + pr * (nr - pr) * nl) as u128;
            let den = (nl * nr) as u128;
            let better = match best {
                None => true,
                Some((bn, bd, bf, bt)) => {
                    let (a, b) = (num * bd, bn * den);
                    a < b || (a == b && (f, t) < (bf, bt))
                }
            };
            if better {
                best = Some((num, den, f, t));
            }
        }
    }
    let (num, den, f, t) = best?;
    if num * parent.1 >= parent.0 * den {
        return None;
    }
    let left: Vec<usize> = (0..n).filter(|&i| rows[i][f] <= t).collect();
    let pl = left.iter().filter(|&&i| labels[i]).count();
    let nl = left.len();
    let child = nl as f64 / n as f64 * gini(pl, nl)
        + (n - nl) as f64 / n as f64 * gini(total_pos - pl, n - nl);
    Some(OracleSplit { feature: f, threshold: t, decrease: gini(total_pos, n) - child })
}
