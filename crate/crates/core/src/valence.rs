//! Lexicon-based valence scoring of chat text.
//!
//! The valence of a text is the frequency-weighted mean of the lexicon scores
//! of the words it contains: sum(v_i * f_i) / sum(f_i). Text without any
//! lexicon word scores 0.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::domain::{Match, Role};
use crate::error::LexiconError;

pub const MIN_VALENCE: f64 = 1.0;
pub const MAX_VALENCE: f64 = 9.0;

const TEST_LEXICON: &str = include_str!("../data/test_lexicon.csv");

/// Word to valence map. Words are stored lowercased and sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct ValenceLexicon {
    words: Vec<(String, f64)>,
    index: HashMap<String, usize>,
}

impl ValenceLexicon {
    pub fn from_entries<I, S>(entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (i, (word, value)) in entries.into_iter().enumerate() {
            insert(&mut map, i + 1, word.as_ref(), value)?;
        }
        Ok(Self::from_map(map))
    }

    fn from_map(map: BTreeMap<String, f64>) -> Self {
        let words: Vec<_> = map.into_iter().collect();
        let index = words.iter().enumerate().map(|(i, (w, _))| (w.clone(), i)).collect();
        Self { words, index }
    }

    /// Parses `word,valence` rows (comma or tab). `#` lines and a leading
    /// header row are skipped.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut map = BTreeMap::new();
        let mut seen_data = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let sep = if line.contains('\t') { '\t' } else { ',' };
            let cols: Vec<&str> = line.split(sep).map(str::trim).collect();
            let malformed = || LexiconError::Malformed { line: line_no, row: line.to_string() };
            if cols.len() != 2 || cols[0].is_empty() {
                return Err(malformed());
            }
            let value = match cols[1].parse::<f64>() {
                Ok(v) => v,
                Err(_) if !seen_data => {
                    seen_data = true;
                    continue;
                }
                Err(_) => return Err(malformed()),
            };
            seen_data = true;
            insert(&mut map, line_no, cols[0], value)?;
        }
        Ok(Self::from_map(map))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|source| LexiconError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// The bundled ~50-word lexicon with invented scores.
    pub fn builtin_test() -> Self {
        Self::parse(TEST_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.lookup(word).map(|i| self.words[i].1)
    }

    fn lookup(&self, word: &str) -> Option<usize> {
        match self.index.get(word) {
            Some(&i) => Some(i),
            None if word.chars().any(char::is_uppercase) => {
                self.index.get(&word.to_lowercase()).copied()
            }
            None => None,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> {
        self.words.iter().map(|(w, v)| (w.as_str(), *v))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lookup(word).is_some()
    }

    /// Text form accepted by [`ValenceLexicon::parse`].
    pub fn to_csv(&self) -> String {
        let mut s = String::from("word,valence\n");
        for (w, v) in &self.words {
            s.push_str(&format!("{w},{v}\n"));
        }
        s
    }
}

fn insert(
    map: &mut BTreeMap<String, f64>,
    line: usize,
    word: &str,
    value: f64,
) -> Result<(), LexiconError> {
    let word = word.to_lowercase();
    if !(MIN_VALENCE..=MAX_VALENCE).contains(&value) {
        return Err(LexiconError::OutOfRange { line, word, value });
    }
    if map.insert(word.clone(), value).is_some() {
        return Err(LexiconError::Duplicate { line, word });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedText {
    pub tokens: Vec<String>,
}

/// Lowercases and splits on anything that is not alphanumeric or an
/// apostrophe. Apostrophes survive only inside a word.
pub fn tokenize(text: &str) -> TokenizedText {
    let tokens = raw_tokens(text).map(str::to_lowercase).collect();
    TokenizedText { tokens }
}

fn raw_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
}

/// Accumulates lexicon hits across any number of texts. Scoring a tally of
/// several texts equals scoring their concatenation.
#[derive(Debug, Clone, Default)]
pub struct ValenceTally {
    counts: BTreeMap<usize, u64>,
}

impl ValenceTally {
    pub fn add_text(&mut self, lexicon: &ValenceLexicon, text: &str) {
        for tok in raw_tokens(text) {
            let hit = if tok.chars().any(char::is_uppercase) {
                lexicon.lookup(&tok.to_lowercase())
            } else {
                lexicon.lookup(tok)
            };
            if let Some(i) = hit {
                *self.counts.entry(i).or_default() += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &ValenceTally) {
        for (&i, &n) in &other.counts {
            *self.counts.entry(i).or_default() += n;
        }
    }

    /// Number of lexicon-word occurrences seen.
    pub fn matched(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn score(&self, lexicon: &ValenceLexicon) -> f64 {
        let total = self.matched();
        if total == 0 {
            return 0.0;
        }
        // Summed in lexicon order so the result is independent of token order.
        let weighted: f64 = self.counts.iter().map(|(&i, &n)| lexicon.words[i].1 * n as f64).sum();
        (weighted / total as f64).clamp(MIN_VALENCE, MAX_VALENCE)
    }
}

pub fn score_text(lexicon: &ValenceLexicon, text: &str) -> f64 {
    let mut t = ValenceTally::default();
    t.add_text(lexicon, text);
    t.score(lexicon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoleValences {
    pub offender: f64,
    pub allies: f64,
    pub enemies: f64,
    pub all: f64,
}

/// Per-role tallies of one match's chat.
#[derive(Debug, Clone, Default)]
pub struct RoleTallies {
    pub offender: ValenceTally,
    pub allies: ValenceTally,
    pub enemies: ValenceTally,
}

impl RoleTallies {
    pub fn of_match(lexicon: &ValenceLexicon, m: &Match) -> Self {
        let mut t = RoleTallies::default();
        for msg in &m.chat {
            let slot = match msg.speaker_role {
                Role::Offender => &mut t.offender,
                Role::Ally => &mut t.allies,
                Role::Enemy => &mut t.enemies,
            };
            slot.add_text(lexicon, &msg.text);
        }
        t
    }

    pub fn all(&self) -> ValenceTally {
        let mut all = self.offender.clone();
        all.merge(&self.allies);
        all.merge(&self.enemies);
        all
    }
}

pub fn role_valences(lexicon: &ValenceLexicon, m: &Match) -> RoleValences {
    let t = RoleTallies::of_match(lexicon, m);
    RoleValences {
        offender: t.offender.score(lexicon),
        allies: t.allies.score(lexicon),
        enemies: t.enemies.score(lexicon),
        all: t.all().score(lexicon),
    }
}
