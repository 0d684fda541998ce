#![allow(dead_code)]

use std::path::PathBuf;

use dialex::types::{Answer, BeliefState, PredictionRecord, RecordStatus, TaskKind};
use proptest::prelude::*;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

pub const DOMAINS: [&str; 3] = ["hotel", "taxi", "train"];
pub const SLOTS: [&str; 4] = ["area", "day", "leaveat", "arriveby"];
pub const VALUES: [&str; 5] = ["east", "centre", "12:45", "sunday", "dontcare"];

pub fn slot_universe() -> Vec<String> {
    DOMAINS
        .iter()
        .flat_map(|d| SLOTS.iter().map(move |s| format!("{d}-{s}")))
        .collect()
}

/// Random belief state with at most `max_slots` slots.
pub fn belief_state(max_slots: usize) -> impl Strategy<Value = BeliefState> {
    proptest::collection::btree_map(0..DOMAINS.len() * SLOTS.len(), 0..VALUES.len(), 0..=max_slots).prop_map(|m| {
        let keys = slot_universe();
        let mut s = BeliefState::new();
        for (k, v) in m {
            s.insert(keys[k].clone(), VALUES[v]).unwrap();
        }
        s
    })
}

pub fn record(id: &str, kind: TaskKind, gold: Answer, parsed: Option<Answer>, answer_space: Vec<String>) -> PredictionRecord {
    let mut r = PredictionRecord {
        instance_id: id.to_string(),
        dataset: match kind {
            TaskKind::Dst => "multiwoz21",
            TaskKind::NextAction => "starv2",
            TaskKind::Erc => "meld",
            TaskKind::ResponseSelection => "mutual",
        }
        .to_string(),
        task_kind: kind,
        strategy_name: "vanilla".into(),
        model_id: "gpt-3.5-turbo".into(),
        seed: 0,
        shots: 0,
        prompt_digest: String::new(),
        raw_text: String::new(),
        parsed,
        gold,
        correct: false,
        status: RecordStatus::Ok,
        unknown_keys: 0,
        answer_space,
    };
    r.correct = r.score().unwrap();
    r
}

pub fn dst_record(id: &str, gold: BeliefState, parsed: BeliefState) -> PredictionRecord {
    record(id, TaskKind::Dst, Answer::BeliefState(gold), Some(Answer::BeliefState(parsed)), slot_universe())
}
