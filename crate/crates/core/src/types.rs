//! Domain types shared by every stage of the pipeline.
//!
//! A [`TaskInstance`] is one evaluable unit: a dialogue context, a question
//! about it, and the gold [`Answer`]. Model output is parsed back into an
//! `Answer` of the same shape and compared with [`compare_answers`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    System,
}

impl Speaker {
    pub fn as_str(self) -> &'static str {
        match self {
            Speaker::User => "USER",
            Speaker::System => "SYSTEM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
    pub turn_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion_label: Option<String>,
    /// Display name for corpora with named speakers (MELD). Rendered in
    /// place of the role when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_name: Option<String>,
    /// Gold system action for this turn (STARv2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_label: Option<String>,
}

impl Utterance {
    pub fn new(speaker: Speaker, turn_index: usize, text: impl Into<String>) -> Self {
        Utterance {
            speaker,
            text: text.into(),
            turn_index,
            emotion_label: None,
            speaker_name: None,
            action_label: None,
        }
    }

    /// The prefix shown before the utterance text in prompts.
    pub fn display_speaker(&self) -> &str {
        self.speaker_name
            .as_deref()
            .unwrap_or_else(|| self.speaker.as_str())
    }
}

fn check_utterances(owner: &str, utterances: &[Utterance]) -> Result<()> {
    for (i, u) in utterances.iter().enumerate() {
        if u.text.trim().is_empty() {
            return Err(Error::record(owner, format!("utterance {i} has empty text")));
        }
        if u.turn_index != i {
            return Err(Error::record(
                owner,
                format!("turn indices must be contiguous from 0 (found {} at position {i})", u.turn_index),
            ));
        }
    }
    Ok(())
}

/// Validates a `domain-slot` key: split at the first hyphen, both parts
/// non-empty, no uppercase characters, no surrounding whitespace.
pub fn is_valid_slot_key(key: &str) -> bool {
    match key.split_once('-') {
        Some((domain, slot)) => {
            !domain.is_empty()
                && !slot.is_empty()
                && key.trim() == key
                && domain.trim() == domain
                && slot.trim() == slot
                && !key.chars().any(char::is_uppercase)
        }
        None => false,
    }
}

/// Splits a slot key into `(domain, slot)`.
pub fn split_slot_key(key: &str) -> Option<(&str, &str)> {
    key.split_once('-')
}

/// Mapping from `domain-slot` keys to canonical values. Absent slots are
/// absent keys; a textual "none" is never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, String>", into = "BTreeMap<String, String>")]
pub struct BeliefState(BTreeMap<String, String>);

impl BeliefState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) -> Result<()> {
        let key = key.into();
        let value = value.into();
        if !is_valid_slot_key(&key) {
            return Err(Error::Contract(format!("malformed slot key {key:?}")));
        }
        if value.is_empty() || value.eq_ignore_ascii_case("none") {
            return Err(Error::Contract(format!(
                "slot {key} has value {value:?}; absence must be encoded by omitting the key"
            )));
        }
        self.0.insert(key, value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// True when every assignment in `self` also appears in `other`.
    pub fn is_subset_of(&self, other: &BeliefState) -> bool {
        self.iter().all(|(k, v)| other.get(k) == Some(v))
    }
}

impl TryFrom<BTreeMap<String, String>> for BeliefState {
    type Error = Error;

    fn try_from(map: BTreeMap<String, String>) -> Result<Self> {
        let mut state = BeliefState::new();
        for (k, v) in map {
            state.insert(k, v)?;
        }
        Ok(state)
    }
}

impl From<BeliefState> for BTreeMap<String, String> {
    fn from(state: BeliefState) -> Self {
        state.0
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for BeliefState {
    /// Panics on a malformed pair; intended for literals in tests and examples.
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        let mut state = BeliefState::new();
        for (k, v) in iter {
            state.insert(k, v).expect("valid belief-state literal");
        }
        state
    }
}

impl fmt::Display for BeliefState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let pairs: Vec<String> = self.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        f.write_str(&pairs.join(", "))
    }
}

/// Cumulative gold state after the user turn at `turn_index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnState {
    pub turn_index: usize,
    pub state: BeliefState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub domains: BTreeSet<String>,
    pub utterances: Vec<Utterance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_turn_gold_states: Option<Vec<TurnState>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_next_action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_candidates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_response_index: Option<usize>,
}

impl Dialogue {
    pub fn new(id: impl Into<String>, utterances: Vec<Utterance>) -> Self {
        Dialogue {
            id: id.into(),
            domains: BTreeSet::new(),
            utterances,
            per_turn_gold_states: None,
            gold_next_action: None,
            response_candidates: None,
            gold_response_index: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.utterances.is_empty() {
            return Err(Error::record(&self.id, "dialogue has no utterances"));
        }
        check_utterances(&self.id, &self.utterances)?;
        if let Some(states) = &self.per_turn_gold_states {
            let mut previous: Option<usize> = None;
            for s in states {
                if s.turn_index >= self.utterances.len() {
                    return Err(Error::record(
                        &self.id,
                        format!("gold state annotates missing turn {}", s.turn_index),
                    ));
                }
                if previous.is_some_and(|p| p >= s.turn_index) {
                    return Err(Error::record(&self.id, "gold states are not in turn order"));
                }
                previous = Some(s.turn_index);
            }
        }
        match (&self.response_candidates, self.gold_response_index) {
            (Some(c), Some(i)) if i >= c.len() => {
                return Err(Error::record(
                    &self.id,
                    format!("gold response index {i} out of range for {} candidates", c.len()),
                ))
            }
            (None, Some(_)) => {
                return Err(Error::record(&self.id, "gold response index without candidates"))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Dst,
    NextAction,
    Erc,
    ResponseSelection,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Dst => "DST",
            TaskKind::NextAction => "NEXT_ACTION",
            TaskKind::Erc => "ERC",
            TaskKind::ResponseSelection => "RESPONSE_SELECTION",
        })
    }
}

/// Gold answer, and the shape parsed predictions take.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Answer {
    BeliefState(BeliefState),
    Action(String),
    Emotion(String),
    Candidate(usize),
}

impl Answer {
    pub fn task_kind(&self) -> TaskKind {
        match self {
            Answer::BeliefState(_) => TaskKind::Dst,
            Answer::Action(_) => TaskKind::NextAction,
            Answer::Emotion(_) => TaskKind::Erc,
            Answer::Candidate(_) => TaskKind::ResponseSelection,
        }
    }

    pub fn as_belief_state(&self) -> Option<&BeliefState> {
        match self {
            Answer::BeliefState(s) => Some(s),
            _ => None,
        }
    }

    /// Label used by classification metrics. Candidates map to letters.
    pub fn label(&self) -> Option<String> {
        match self {
            Answer::BeliefState(_) => None,
            Answer::Action(l) | Answer::Emotion(l) => Some(l.to_lowercase()),
            Answer::Candidate(i) => Some(candidate_letter(*i)),
        }
    }
}

/// `0 -> "A"`, `1 -> "B"`, ... ; indices past `Z` fall back to the number.
pub fn candidate_letter(index: usize) -> String {
    if index < 26 {
        char::from(b'A' + index as u8).to_string()
    } else {
        index.to_string()
    }
}

/// Exact-match comparison under the task's rule: full-state equality for
/// DST, case-insensitive label equality otherwise.
pub fn compare_answers(parsed: &Answer, gold: &Answer, task_kind: TaskKind) -> Result<bool> {
    if parsed.task_kind() != task_kind || gold.task_kind() != task_kind {
        return Err(Error::Contract(format!(
            "cannot compare {} with {} under {task_kind}",
            parsed.task_kind(),
            gold.task_kind()
        )));
    }
    Ok(match (parsed, gold) {
        (Answer::BeliefState(a), Answer::BeliefState(b)) => a == b,
        (Answer::Action(a), Answer::Action(b)) | (Answer::Emotion(a), Answer::Emotion(b)) => {
            a.to_lowercase() == b.to_lowercase()
        }
        (Answer::Candidate(a), Answer::Candidate(b)) => a == b,
        _ => unreachable!("variants checked above"),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSpec {
    pub domain: String,
    pub slot: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categorical_values: Option<Vec<String>>,
}

impl SlotSpec {
    pub fn key(&self) -> String {
        format!("{}-{}", self.domain, self.slot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    User,
    System,
    Api,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProceduralNode {
    pub id: String,
    pub kind: NodeKind,
    pub label: String,
    /// Domain of the task graph this node belongs to.
    #[serde(default)]
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Schema {
    Declarative {
        slots: Vec<SlotSpec>,
    },
    Procedural {
        actions: Vec<String>,
        graph: Vec<(String, String)>,
        nodes: Vec<ProceduralNode>,
    },
}

impl Schema {
    pub fn validate(&self) -> Result<()> {
        match self {
            Schema::Declarative { slots } => {
                let mut seen = BTreeSet::new();
                for s in slots {
                    let key = s.key();
                    if !is_valid_slot_key(&key) {
                        return Err(Error::Contract(format!("malformed slot key {key:?}")));
                    }
                    if !seen.insert(key.clone()) {
                        return Err(Error::Contract(format!("duplicate slot {key}")));
                    }
                }
            }
            Schema::Procedural {
                actions,
                graph,
                nodes,
            } => {
                let ids: BTreeSet<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
                if ids.len() != nodes.len() {
                    return Err(Error::Contract("duplicate node id in procedural schema".into()));
                }
                for (from, to) in graph {
                    for end in [from, to] {
                        if !ids.contains(end.as_str()) {
                            return Err(Error::Contract(format!("edge endpoint {end:?} is not a declared node")));
                        }
                    }
                }
                let unique: BTreeSet<&String> = actions.iter().collect();
                if unique.len() != actions.len() {
                    return Err(Error::Contract("duplicate action label in procedural schema".into()));
                }
            }
        }
        Ok(())
    }

    /// Slot keys of a declarative schema, optionally restricted to domains.
    pub fn slot_keys(&self, domains: Option<&BTreeSet<String>>) -> Vec<String> {
        match self {
            Schema::Declarative { slots } => slots
                .iter()
                .filter(|s| domains.is_none_or(|d| d.contains(&s.domain)))
                .map(SlotSpec::key)
                .collect(),
            Schema::Procedural { .. } => Vec::new(),
        }
    }
}

/// One evaluable unit: context, question and gold answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub instance_id: String,
    pub dialogue_id: String,
    pub task_kind: TaskKind,
    pub context: Vec<Utterance>,
    pub question: String,
    pub gold: Answer,
    pub domains: BTreeSet<String>,
    /// Slot keys (DST) or labels (classification tasks) a parsed answer may use.
    pub answer_space: Vec<String>,
}

impl TaskInstance {
    pub fn validate(&self) -> Result<()> {
        if self.context.is_empty() {
            return Err(Error::record(&self.dialogue_id, format!("{}: empty context", self.instance_id)));
        }
        check_utterances(&self.dialogue_id, &self.context)?;
        if self.gold.task_kind() != self.task_kind {
            return Err(Error::record(
                &self.dialogue_id,
                format!("{}: gold is {} but task is {}", self.instance_id, self.gold.task_kind(), self.task_kind),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    ParseFailure,
    ProviderError(String),
}

/// One scored model response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub instance_id: String,
    pub dataset: String,
    pub task_kind: TaskKind,
    pub strategy_name: String,
    pub model_id: String,
    pub seed: u64,
    /// Demonstrations per prompt; zero for zero-shot strategies.
    #[serde(default)]
    pub shots: usize,
    pub prompt_digest: String,
    pub raw_text: String,
    /// `None` when no answer could be recovered (no label match, provider failure).
    pub parsed: Option<Answer>,
    pub gold: Answer,
    pub correct: bool,
    pub status: RecordStatus,
    #[serde(default)]
    pub unknown_keys: usize,
    pub answer_space: Vec<String>,
}

impl PredictionRecord {
    /// Recomputes `correct` from `parsed` and `gold`.
    pub fn score(&self) -> Result<bool> {
        match &self.parsed {
            Some(p) => compare_answers(p, &self.gold, self.task_kind),
            None => Ok(false),
        }
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "dst" => Ok(TaskKind::Dst),
            "next_action" => Ok(TaskKind::NextAction),
            "erc" => Ok(TaskKind::Erc),
            "response_selection" => Ok(TaskKind::ResponseSelection),
            _ => Err(Error::Config(format!("unknown task kind {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dst(pairs: &[(&str, &str)]) -> Answer {
        Answer::BeliefState(pairs.iter().copied().collect())
    }

    #[test]
    fn identical_states_match() {
        let a = dst(&[("taxi-arriveby", "12:45")]);
        assert!(compare_answers(&a, &a.clone(), TaskKind::Dst).unwrap());
    }

    #[test]
    fn time_slot_confusion_is_wrong() {
        let parsed = dst(&[("taxi-leaveat", "12:45")]);
        let gold = dst(&[("taxi-arriveby", "12:45")]);
        assert!(!compare_answers(&parsed, &gold, TaskKind::Dst).unwrap());
    }

    #[test]
    fn missing_slot_is_wrong() {
        let gold = dst(&[("train-departure", "cambridge")]);
        assert!(!compare_answers(&dst(&[]), &gold, TaskKind::Dst).unwrap());
    }

    #[test]
    fn labels_compare_case_insensitively() {
        let a = Answer::Emotion("Joy".into());
        let b = Answer::Emotion("joy".into());
        assert!(compare_answers(&a, &b, TaskKind::Erc).unwrap());
    }

    #[test]
    fn variant_mismatch_is_contract_violation() {
        let a = Answer::Emotion("joy".into());
        let b = Answer::Candidate(1);
        assert!(matches!(compare_answers(&a, &b, TaskKind::Erc), Err(Error::Contract(_))));
        assert!(matches!(compare_answers(&a, &a, TaskKind::Dst), Err(Error::Contract(_))));
    }

    #[test]
    fn belief_state_rejects_none_and_bad_keys() {
        let mut s = BeliefState::new();
        assert!(s.insert("hotel-area", "none").is_err());
        assert!(s.insert("hotel-area", "").is_err());
        assert!(s.insert("hotelarea", "centre").is_err());
        assert!(s.insert("Hotel-area", "centre").is_err());
        assert!(s.insert("-area", "centre").is_err());
        assert!(s.insert("hotel-area", "dontcare").is_ok());
    }

    #[test]
    fn belief_state_json_is_flat_map() {
        let s: BeliefState = [("hotel-area", "centre")].into_iter().collect();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"hotel-area":"centre"}"#);
        assert!(serde_json::from_str::<BeliefState>(r#"{"hotel-area":"none"}"#).is_err());
    }

    #[test]
    fn dialogue_validation_catches_broken_turns() {
        let mut d = Dialogue::new(
            "d1",
            vec![Utterance::new(Speaker::User, 0, "hi"), Utterance::new(Speaker::System, 2, "hello")],
        );
        assert!(d.validate().is_err());
        d.utterances[1].turn_index = 1;
        assert!(d.validate().is_ok());
        d.utterances[1].text = "  ".into();
        assert!(d.validate().is_err());
    }

    #[test]
    fn response_index_must_be_in_range() {
        let mut d = Dialogue::new("d", vec![Utterance::new(Speaker::User, 0, "hi")]);
        d.response_candidates = Some(vec!["a".into(), "b".into()]);
        d.gold_response_index = Some(2);
        assert!(d.validate().is_err());
        d.gold_response_index = Some(1);
        assert!(d.validate().is_ok());
    }

    #[test]
    fn procedural_schema_edges_must_hit_nodes() {
        let node = |id: &str| ProceduralNode {
            id: id.into(),
            kind: NodeKind::System,
            label: id.into(),
            domain: "hotel".into(),
        };
        let schema = Schema::Procedural {
            actions: vec!["a".into()],
            graph: vec![("a".into(), "b".into())],
            nodes: vec![node("a")],
        };
        assert!(schema.validate().is_err());
        let schema = Schema::Procedural {
            actions: vec!["a".into()],
            graph: vec![("a".into(), "b".into())],
            nodes: vec![node("a"), node("b")],
        };
        assert!(schema.validate().is_ok());
    }

    #[test]
    fn declarative_schema_rejects_duplicates() {
        let slot = SlotSpec {
            domain: "hotel".into(),
            slot: "area".into(),
            description: String::new(),
            categorical_values: None,
        };
        let schema = Schema::Declarative {
            slots: vec![slot.clone(), slot],
        };
        assert!(schema.validate().is_err());
    }
}
