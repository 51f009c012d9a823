mod common;

use common::*;
use proptest::prelude::*;
use tribunal_core::domain::{parse_case, read_cases, summarize_dataset, to_canonical_json, validate_case, write_cases};
use tribunal_core::impact::{impact_report, EconomyParams, PopulationParams, ThroughputParams};
use tribunal_core::synth::{corpus_report, generate_dataset, GeneratorConfig};
use tribunal_core::valence::{score_text, tokenize, ValenceTally};
use tribunal_core::{LexiconError, Region, SynthError, ValenceLexicon};

fn lex() -> ValenceLexicon {
    ValenceLexicon::builtin_test()
}

/// Text built from lexicon words in mixed case, fillers, digits,
/// apostrophes, punctuation and non-ASCII letters.
fn chat_text() -> impl Strategy<Value = String> {
    let words: Vec<String> = lex().entries().map(|(w, _)| w.to_string()).collect();
    let piece = prop_oneof![
        4 => prop::sample::select(words),
        1 => prop::sample::select(vec!["gg".to_string(), "ez".into(), "xd".into(), "mid".into(), "123".into(), "café".into(), "über".into()]),
    ];
    let case = prop_oneof![Just(0u8), Just(1), Just(2)];
    let sep = prop::sample::select(vec![" ", "  ", ", ", "!", "...", "'", " '", "' ", "\t", "-", "?!"]);
    prop::collection::vec((piece, case, sep), 0..25).prop_map(|parts| {
        parts
            .into_iter()
            .map(|(w, c, s)| {
                let w = match c {
                    0 => w,
                    1 => w.to_uppercase(),
                    _ => {
                        let mut ch = w.chars();
                        ch.next().map(|f| f.to_uppercase().chain(ch).collect()).unwrap_or_default()
                    }
                };
                format!("{w}{s}")
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn scoring_matches_the_counting_oracle(a in chat_text(), b in chat_text()) {
        let l = lex();
        prop_assert_eq!(tokenize(&a).tokens, oracle_tokens(&a));
        let got = score_text(&l, &a);
        prop_assert!((got - oracle_valence(&l, &[&a])).abs() < 1e-12);
        prop_assert!(got == 0.0 || (1.0..=9.0).contains(&got));
        // A tally over two texts scores like their concatenation.
        let mut t = ValenceTally::default();
        t.add_text(&l, &a);
        t.add_text(&l, &b);
        let joined = format!("{a} {b}");
        prop_assert!((t.score(&l) - score_text(&l, &joined)).abs() < 1e-12);
        prop_assert!((t.score(&l) - oracle_valence(&l, &[&a, &b])).abs() < 1e-12);
    }

    #[test]
    fn generated_cases_are_valid_and_faithful(
        n in 0usize..25,
        seed in any::<u64>(),
        punish_rate in 0.05f64..0.95,
        report_link in 0.0f64..3.0,
        region in prop::sample::select(Region::ALL.to_vec()),
    ) {
        let cfg = GeneratorConfig { n_cases: n, rng_seed: seed, punish_rate, report_link, region, ..GeneratorConfig::default() };
        let corpus = generate_dataset(&cfg, &lex()).unwrap();
        prop_assert_eq!(corpus.cases.len(), n);
        prop_assert_eq!(&corpus, &generate_dataset(&cfg, &lex()).unwrap());
        for (c, g) in corpus.cases.iter().zip(&corpus.ground_truth) {
            prop_assert!(validate_case(c).is_empty(), "{:?}", validate_case(c));
            prop_assert_eq!(c.region, region);
            prop_assert_eq!(&c.case_id, &g.case_id);
            prop_assert_eq!(c.decision, g.decision);
            prop_assert_eq!(c.agreement, g.agreement);
            prop_assert_eq!(g.label_flipped, g.decision != g.latent_decision);
            prop_assert!((0.0..=1.0).contains(&g.high_word_prob));
            prop_assert_eq!(c.matches.len(), g.matches.len());
            for (m, t) in c.matches.iter().zip(&g.matches) {
                prop_assert_eq!(m.reports.len(), t.reports);
                prop_assert!(!m.reports.is_empty());
            }
            prop_assert_eq!(&parse_case(&to_canonical_json(c)).unwrap(), c);
        }
        let s = summarize_dataset(&corpus.cases).total();
        let (cases, matches, reports) = corpus.emitted_counts();
        prop_assert_eq!((s.cases as u64, s.matches as u64, s.reports as u64), (cases, matches, reports));
    }
}

#[test]
fn jsonl_round_trip() {
    let cases = fixture_corpus();
    let mut buf = Vec::new();
    write_cases(&mut buf, &cases).unwrap();
    assert_eq!(read_cases(buf.as_slice()).unwrap(), cases);
}

#[test]
fn lexicon_parsing_errors() {
    assert!(matches!(ValenceLexicon::parse("word,valence\ngood,10"), Err(LexiconError::OutOfRange { line: 2, .. })));
    assert!(matches!(ValenceLexicon::parse("good,5\nGood,6"), Err(LexiconError::Duplicate { line: 2, .. })));
    assert!(matches!(ValenceLexicon::parse("good,5\nbad,x"), Err(LexiconError::Malformed { line: 2, .. })));
    let l = lex();
    assert_eq!(ValenceLexicon::parse(&l.to_csv()).unwrap(), l);
}

#[test]
fn planted_valence_ordering_holds_at_scale() {
    let corpus = generate_dataset(&GeneratorConfig { n_cases: 4000, rng_seed: 21, ..GeneratorConfig::default() }, &lex()).unwrap();
    let report = corpus_report(&corpus.cases, &lex(), Some(&corpus.ground_truth));
    assert!(report.gap(None) > 0.0, "pardoned offenders use more positive words");
    assert!(report.report_label_correlation > 0.1);
}

#[test]
fn infeasible_targets_are_rejected() {
    let mut cfg = GeneratorConfig { n_cases: 10, ..GeneratorConfig::default() };
    let t = &mut cfg.valence_targets;
    (t.punished_mean, t.pardoned_mean, t.om_punished_mean, t.om_pardoned_mean) = (8.9, 8.9, 8.9, 8.9);
    assert!(matches!(generate_dataset(&cfg, &lex()), Err(SynthError::Infeasible { .. })));
    cfg.valence_targets.punished_mean = 9.5;
    assert!(matches!(generate_dataset(&cfg, &lex()), Err(SynthError::Config(_))));
}

#[test]
fn impact_literals() {
    let (e, t, p) = (EconomyParams::default(), ThroughputParams::default(), PopulationParams::default());
    let rounded = impact_report(&e, &t, &p, true).unwrap();
    assert_eq!(rounded.vote_cost_usd, 0.02);
    assert!((rounded.first_year_cost_usd - 470_000.0).abs() < 1e-6);
    assert!((rounded.votes_per_case - 187.5).abs() < 1e-12);
    assert!((rounded.seconds_per_case - 187.5 / 1.49).abs() < 1e-9);
    let exact = impact_report(&e, &t, &p, false).unwrap();
    assert!((exact.first_year_cost_usd - 491_948.47).abs() < 0.01, "{}", exact.first_year_cost_usd);
    assert!((exact.toxic_per_day - 686.7580).abs() < 1e-3);
    assert!((exact.toxic_matches_per_day - 1517.7352).abs() < 1e-3);
    assert!((exact.innocents_exposed_per_day - 13_659.617).abs() < 1e-2);
}
