mod common;

use dialex::parsing::{extract_answer_section, parse_label, render_gold, AnswerParser};
use dialex::types::Answer;
use dialex::{canonicalize_value, parse_belief_state, AliasTable, BeliefState, TaskKind};
use proptest::prelude::*;

use common::{belief_state, slot_universe};

const TIME_KEYS: [&str; 3] = ["taxi-leaveat", "train-arriveby", "restaurant-booktime"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn canonicalization_is_idempotent(value in "\\PC{0,24}", key in prop::sample::select(vec!["hotel-area", "taxi-leaveat", "hotel-name"])) {
        let once = canonicalize_value(key, &value);
        prop_assert_eq!(canonicalize_value(key, &once), once);
    }

    #[test]
    fn clock_times_normalize(h in 0u32..24, m in 0u32..60, key in prop::sample::select(TIME_KEYS.to_vec())) {
        let want = format!("{h:02}:{m:02}");
        prop_assert_eq!(canonicalize_value(key, &format!("{h}:{m:02}")), want.clone());
        let (h12, suffix) = match h { 0 => (12, "am"), 1..=11 => (h, "am"), 12 => (12, "pm"), _ => (h - 12, "pm") };
        prop_assert_eq!(canonicalize_value(key, &format!("{h12}:{m:02} {suffix}")), want);
    }

    #[test]
    fn rendered_gold_parses_back(state in belief_state(6)) {
        let text = render_gold(&Answer::BeliefState(state.clone()));
        let parsed = parse_belief_state(&text, &slot_universe());
        prop_assert!(!parsed.parse_failure);
        prop_assert_eq!(parsed.state, state);
    }

    #[test]
    fn parsed_keys_stay_in_schema(text in "[a-z_ :,;=\\-\\n0-9]{0,80}") {
        let schema = vec!["hotel-area".to_string(), "taxi-leaveat".to_string()];
        let parsed = parse_belief_state(&text, &schema);
        prop_assert!(parsed.state.keys().all(|k| schema.iter().any(|s| s == k)));
    }

    #[test]
    fn answer_section_follows_last_marker(prefix in "\\PC{0,30}", body in "[b-z :,]{0,30}") {
        let raw = format!("{prefix}\nAnswer: {body}");
        prop_assert_eq!(extract_answer_section(&raw).trim(), body.trim());
    }
}

#[test]
fn every_alias_maps_to_its_canonical_form() {
    let table = AliasTable::builtin();
    assert!(!table.is_empty());
    for (alias, canonical) in table.iter() {
        assert_eq!(canonicalize_value("hotel-area", alias), canonical, "alias {alias:?}");
        assert_eq!(canonicalize_value("hotel-area", canonical), canonical);
    }
}

#[test]
fn fuzzy_and_strict_key_matching() {
    let space = vec!["taxi-arriveby".to_string()];
    for text in ["taxi-arriveby: 12:45", "taxi arriveby: 12:45", "taxi_arrive_by: 12:45", "Taxi-ArriveBy = 12:45"] {
        let p = parse_belief_state(text, &space);
        assert_eq!(p.state.get("taxi-arriveby"), Some("12:45"), "{text}");
    }
    let strict = AnswerParser::default().strict(true);
    let p = strict.parse_belief_state("taxi arriveby: 12:45", &space);
    assert!(p.state.is_empty());
    assert_eq!(p.unknown_keys, 1);
    assert!(p.parse_failure);
}

#[test]
fn free_text_responses() {
    let space = slot_universe();
    let raw = "USER: wants a train.\nSo the state is:\nAnswer: 1. train-day: Sunday\n2. train-leaveat: after 5:30 pm\n3. hotel-area: none";
    let parser = AnswerParser::default();
    let p = parser.parse_answer(raw, TaskKind::Dst, &space);
    let want: BeliefState = [("train-day", "sunday")].into_iter().collect();
    let Some(Answer::BeliefState(got)) = p.answer else { panic!("no state") };
    // An unparseable time is kept verbatim rather than dropped.
    assert_eq!(got.get("train-day"), want.get("train-day"));
    assert!(got.get("train-leaveat").is_some());
    assert!(got.get("hotel-area").is_none());
    assert!(!p.parse_failure);
}

#[test]
fn empty_state_cues() {
    let space = slot_universe();
    for text in ["none", "Answer: None.", "No slots have been specified."] {
        let p = parse_belief_state(text, &space);
        assert!(p.state.is_empty() && !p.parse_failure, "{text}");
    }
    assert!(parse_belief_state("I cannot tell.", &space).parse_failure);
}

#[test]
fn labels_prefer_earliest_then_longest() {
    let labels: Vec<String> = ["joy", "neutral", "sadness"].map(String::from).to_vec();
    assert_eq!(parse_label("Answer: Neutral, maybe joy", &labels).as_deref(), Some("neutral"));
    assert_eq!(parse_label("nothing here", &labels), None);
    let actions: Vec<String> = ["ask for pin", "ask for pin again"].map(String::from).to_vec();
    assert_eq!(parse_label("ask for pin again please", &actions).as_deref(), Some("ask for pin again"));
    let letters: Vec<String> = ["A", "B", "C", "D"].map(String::from).to_vec();
    let p = AnswerParser::default().parse_answer("The answer is (B).", TaskKind::ResponseSelection, &letters);
    assert_eq!(p.answer, Some(Answer::Candidate(1)));
}
