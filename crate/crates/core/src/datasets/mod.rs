//! Dataset adapters.
//!
//! Each adapter reads one corpus in its published layout and produces
//! canonical [`Dialogue`]s. Everything downstream is dataset-agnostic.

mod meld;
mod multiwoz;
mod mutual;
mod sgd;
mod star;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use num::rational::Ratio;
use num::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    candidate_letter, Answer, Dialogue, NodeKind, Schema, Speaker, TaskInstance, TaskKind,
};

pub use multiwoz::multiwoz_schema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetName {
    Multiwoz21,
    Starv2,
    Sgd,
    Spokenwoz,
    Meld,
    Mutual,
}

impl DatasetName {
    pub const ALL: [DatasetName; 6] = [
        DatasetName::Multiwoz21,
        DatasetName::Starv2,
        DatasetName::Sgd,
        DatasetName::Spokenwoz,
        DatasetName::Meld,
        DatasetName::Mutual,
    ];

    pub fn task_kind(self) -> TaskKind {
        match self {
            DatasetName::Multiwoz21 | DatasetName::Sgd | DatasetName::Spokenwoz => TaskKind::Dst,
            DatasetName::Starv2 => TaskKind::NextAction,
            DatasetName::Meld => TaskKind::Erc,
            DatasetName::Mutual => TaskKind::ResponseSelection,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            DatasetName::Multiwoz21 => "multiwoz21",
            DatasetName::Starv2 => "starv2",
            DatasetName::Sgd => "sgd",
            DatasetName::Spokenwoz => "spokenwoz",
            DatasetName::Meld => "meld",
            DatasetName::Mutual => "mutual",
        }
    }

    /// Column header used in result tables.
    pub fn title(self) -> &'static str {
        match self {
            DatasetName::Multiwoz21 => "MultiWOZ 2.1",
            DatasetName::Starv2 => "STARv2",
            DatasetName::Sgd => "SGD",
            DatasetName::Spokenwoz => "SpokenWOZ",
            DatasetName::Meld => "MELD",
            DatasetName::Mutual => "MuTual",
        }
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect();
        DatasetName::ALL
            .into_iter()
            .find(|d| d.id() == norm || (norm == "multiwoz" && *d == DatasetName::Multiwoz21) || (norm == "star" && *d == DatasetName::Starv2))
            .ok_or_else(|| Error::Config(format!("unknown dataset {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "val" | "valid" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetDescriptor {
    pub name: DatasetName,
    pub task_kind: TaskKind,
    /// Declarative for DST corpora, procedural for STARv2, absent for
    /// MELD and MuTual. SGD and STARv2 fill theirs in at load time.
    pub schema: Option<Schema>,
    pub split: Split,
}

impl DatasetDescriptor {
    pub fn new(name: DatasetName, split: Split) -> Self {
        let schema = match name {
            DatasetName::Multiwoz21 => Some(multiwoz_schema(false)),
            DatasetName::Spokenwoz => Some(multiwoz_schema(true)),
            DatasetName::Sgd => Some(Schema::Declarative { slots: Vec::new() }),
            DatasetName::Starv2 => Some(Schema::Procedural {
                actions: Vec::new(),
                graph: Vec::new(),
                nodes: Vec::new(),
            }),
            DatasetName::Meld | DatasetName::Mutual => None,
        };
        DatasetDescriptor {
            name,
            task_kind: name.task_kind(),
            schema,
            split,
        }
    }
}

/// A loaded split with its resolved schema and the records that failed
/// validation.
#[derive(Debug)]
pub struct Dataset {
    pub descriptor: DatasetDescriptor,
    pub dialogues: Vec<Dialogue>,
    pub skipped: Vec<Error>,
}

impl Dataset {
    pub fn skip_count(&self) -> usize {
        self.skipped.len()
    }

    /// Explodes every dialogue; dialogues lacking gold are skipped and
    /// reported alongside the instances.
    pub fn task_instances(&self) -> (Vec<TaskInstance>, Vec<Error>) {
        let mut out = Vec::new();
        let mut errors = Vec::new();
        for d in &self.dialogues {
            match to_task_instances(d, self.descriptor.task_kind, self.descriptor.schema.as_ref()) {
                Ok(mut inst) => out.append(&mut inst),
                Err(e) => errors.push(e),
            }
        }
        (out, errors)
    }
}

pub(crate) struct Loaded {
    pub dialogues: Vec<Dialogue>,
    pub skipped: Vec<Error>,
    pub schema: Option<Schema>,
}

pub(crate) fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| Error::load(path, format!("invalid JSON: {e}")))
}

/// Loads one split. A `.jsonl` path is read as canonical dialogue records
/// instead of the dataset's source layout.
pub fn load_dataset(descriptor: &DatasetDescriptor, data_directory: &Path) -> Result<Dataset> {
    let mut descriptor = descriptor.clone();
    let loaded = if data_directory.is_file() {
        let dialogues = read_dialogues(data_directory)?;
        Loaded {
            dialogues,
            skipped: Vec::new(),
            schema: descriptor.schema.clone(),
        }
    } else {
        if !data_directory.is_dir() {
            return Err(Error::load(data_directory, "data directory does not exist"));
        }
        match descriptor.name {
            DatasetName::Multiwoz21 => multiwoz::load(data_directory, descriptor.split, false)?,
            DatasetName::Spokenwoz => multiwoz::load(data_directory, descriptor.split, true)?,
            DatasetName::Sgd => sgd::load(data_directory, descriptor.split)?,
            DatasetName::Starv2 => star::load(data_directory, descriptor.split)?,
            DatasetName::Meld => meld::load(data_directory, descriptor.split)?,
            DatasetName::Mutual => mutual::load(data_directory, descriptor.split)?,
        }
    };
    if let Some(schema) = &loaded.schema {
        schema.validate()?;
    }
    descriptor.schema = loaded.schema;

    let mut dialogues = Vec::with_capacity(loaded.dialogues.len());
    let mut skipped = loaded.skipped;
    for d in loaded.dialogues {
        match d.validate() {
            Ok(()) => dialogues.push(d),
            Err(e) => skipped.push(e),
        }
    }
    dialogues.sort_by(|a, b| a.id.cmp(&b.id));
    for e in &skipped {
        log::warn!("skipped record: {e}");
    }
    Ok(Dataset {
        descriptor,
        dialogues,
        skipped,
    })
}

pub const ERC_LABELS: [&str; 7] = ["anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise"];

const DST_QUESTION_HEAD: &str = "What is the dialogue state after the last user utterance? \
List every slot whose value the user has specified so far as \"domain-slot: value\" pairs \
separated by commas, using only the slots below. Write \"none\" if no slot has a value.\nSlots:";
const NEXT_ACTION_QUESTION_HEAD: &str =
    "Which action should the system take next? Choose exactly one of the following actions:";
const ERC_QUESTION_HEAD: &str = "What is the emotion of the speaker of the last utterance? Choose one of:";
const RESPONSE_QUESTION_HEAD: &str =
    "Which candidate is the most appropriate next utterance? Reply with the letter of the candidate.";

fn dst_question(schema: &Schema, domains: &BTreeSet<String>) -> String {
    let mut q = DST_QUESTION_HEAD.to_string();
    if let Schema::Declarative { slots } = schema {
        for s in slots.iter().filter(|s| domains.contains(&s.domain)) {
            q.push_str(&format!("\n- {}", s.key()));
            if !s.description.is_empty() {
                q.push_str(&format!(": {}", s.description));
            }
            if let Some(values) = s.categorical_values.as_ref().filter(|v| !v.is_empty()) {
                q.push_str(&format!(" (possible values: {})", values.join(", ")));
            }
        }
    }
    q
}

fn list_question(head: &str, labels: &[String]) -> String {
    let mut q = head.to_string();
    for l in labels {
        q.push_str(&format!("\n- {l}"));
    }
    q
}

fn action_space(schema: Option<&Schema>, domains: &BTreeSet<String>) -> Vec<String> {
    let mut labels = BTreeSet::new();
    if let Some(Schema::Procedural { nodes, .. }) = schema {
        for n in nodes {
            if n.kind == NodeKind::System && domains.contains(&n.domain) {
                labels.insert(n.label.clone());
            }
        }
    }
    labels.into_iter().collect()
}

/// Splits a dialogue into the evaluable instances of `task_kind`.
pub fn to_task_instances(dialogue: &Dialogue, task_kind: TaskKind, schema: Option<&Schema>) -> Result<Vec<TaskInstance>> {
    let missing = || Error::MissingGold {
        dialogue_id: dialogue.id.clone(),
        task_kind,
    };
    let instance = |id: String, end: usize, question: String, gold: Answer, answer_space: Vec<String>| TaskInstance {
        instance_id: id,
        dialogue_id: dialogue.id.clone(),
        task_kind,
        context: dialogue.utterances[..end].to_vec(),
        question,
        gold,
        domains: dialogue.domains.clone(),
        answer_space,
    };

    let mut out = Vec::new();
    match task_kind {
        TaskKind::Dst => {
            let states = dialogue.per_turn_gold_states.as_ref().ok_or_else(missing)?;
            let schema = schema.ok_or_else(|| Error::Contract("DST needs a declarative schema".into()))?;
            let question = dst_question(schema, &dialogue.domains);
            let space = schema.slot_keys(Some(&dialogue.domains));
            for ts in states {
                let Some(u) = dialogue.utterances.get(ts.turn_index) else {
                    return Err(Error::record(&dialogue.id, format!("gold state for missing turn {}", ts.turn_index)));
                };
                if u.speaker != Speaker::User {
                    continue;
                }
                if let Some(k) = ts.state.keys().find(|k| !space.iter().any(|s| s == k)) {
                    return Err(Error::record(&dialogue.id, format!("gold slot {k} is outside the schema")));
                }
                out.push(instance(
                    format!("{}:{:03}", dialogue.id, ts.turn_index),
                    ts.turn_index + 1,
                    question.clone(),
                    Answer::BeliefState(ts.state.clone()),
                    space.clone(),
                ));
            }
        }
        TaskKind::NextAction => {
            let space = action_space(schema, &dialogue.domains);
            let question = list_question(NEXT_ACTION_QUESTION_HEAD, &space);
            for (i, u) in dialogue.utterances.iter().enumerate().skip(1) {
                if u.speaker != Speaker::System {
                    continue;
                }
                let label = u.action_label.as_ref().ok_or_else(missing)?;
                if !space.contains(label) {
                    return Err(Error::record(&dialogue.id, format!("action {label:?} is not in the schema")));
                }
                out.push(instance(
                    format!("{}:{:03}", dialogue.id, i),
                    i,
                    question.clone(),
                    Answer::Action(label.clone()),
                    space.clone(),
                ));
            }
        }
        TaskKind::Erc => {
            let space: Vec<String> = ERC_LABELS.iter().map(|s| s.to_string()).collect();
            let question = format!("{ERC_QUESTION_HEAD} {}.", space.join(", "));
            for (i, u) in dialogue.utterances.iter().enumerate() {
                if let Some(label) = &u.emotion_label {
                    out.push(instance(
                        format!("{}:{:03}", dialogue.id, i),
                        i + 1,
                        question.clone(),
                        Answer::Emotion(label.clone()),
                        space.clone(),
                    ));
                }
            }
            if out.is_empty() {
                return Err(missing());
            }
        }
        TaskKind::ResponseSelection => {
            let candidates = dialogue.response_candidates.as_ref().ok_or_else(missing)?;
            let gold = dialogue.gold_response_index.ok_or_else(missing)?;
            let space: Vec<String> = (0..candidates.len()).map(candidate_letter).collect();
            let mut question = RESPONSE_QUESTION_HEAD.to_string();
            for (letter, c) in space.iter().zip(candidates) {
                question.push_str(&format!("\n{letter}. {c}"));
            }
            out.push(instance(
                dialogue.id.clone(),
                dialogue.utterances.len(),
                question,
                Answer::Candidate(gold),
                space,
            ));
        }
    }
    Ok(out)
}

/// Default token counter: whitespace-separated words.
pub fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub dialogue_count: usize,
    pub total_tokens: u64,
    pub total_turns: u64,
    /// Rounded half-up to one decimal from the exact mean.
    pub mean_tokens_per_dialogue: f64,
    pub mean_turns_per_dialogue: f64,
}

/// Rounds `value` half-up to `decimals` places and returns the scaled integer.
pub(crate) fn round_half_up(value: &Ratio<u64>, decimals: u32) -> u64 {
    let scale = 10u64.pow(decimals);
    let scaled = value * Ratio::from_integer(scale);
    (scaled + Ratio::new(1, 2)).floor().to_integer()
}

fn one_decimal(r: &Ratio<u64>) -> f64 {
    round_half_up(r, 1).to_f64().unwrap_or(f64::NAN) / 10.0
}

pub fn corpus_stats(dialogues: &[Dialogue], token_counter: impl Fn(&str) -> usize) -> Result<CorpusStats> {
    if dialogues.is_empty() {
        return Err(Error::Empty("corpus_stats"));
    }
    let mut tokens = 0u64;
    let mut turns = 0u64;
    for d in dialogues {
        turns += d.utterances.len() as u64;
        tokens += d.utterances.iter().map(|u| token_counter(&u.text) as u64).sum::<u64>();
    }
    let n = dialogues.len() as u64;
    debug_assert!(!n.is_zero());
    Ok(CorpusStats {
        dialogue_count: dialogues.len(),
        total_tokens: tokens,
        total_turns: turns,
        mean_tokens_per_dialogue: one_decimal(&Ratio::new(tokens, n)),
        mean_turns_per_dialogue: one_decimal(&Ratio::new(turns, n)),
    })
}

/// Writes dialogues as canonical JSON lines.
pub fn write_dialogues(path: &Path, dialogues: &[Dialogue]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for d in dialogues {
        let line = serde_json::to_string(d)?;
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_dialogues(path: &Path) -> Result<Vec<Dialogue>> {
    let file = fs::File::open(path).map_err(|e| Error::load(path, e.to_string()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let d: Dialogue =
            serde_json::from_str(&line).map_err(|e| Error::load(path, format!("line {}: {e}", n + 1)))?;
        out.push(d);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BeliefState, TurnState, Utterance};

    fn dst_dialogue() -> Dialogue {
        let speakers = [Speaker::User, Speaker::System, Speaker::User, Speaker::System, Speaker::User];
        let utterances = speakers
            .iter()
            .enumerate()
            .map(|(i, s)| Utterance::new(*s, i, format!("turn {i}")))
            .collect();
        let mut d = Dialogue::new("d1", utterances);
        d.domains.insert("hotel".into());
        d.per_turn_gold_states = Some(
            [0, 2, 4]
                .into_iter()
                .map(|t| TurnState {
                    turn_index: t,
                    state: if t == 0 { BeliefState::new() } else { [("hotel-area", "east")].into_iter().collect() },
                })
                .collect(),
        );
        d
    }

    #[test]
    fn dst_instances_grow_with_user_turns() {
        let schema = multiwoz_schema(false);
        let inst = to_task_instances(&dst_dialogue(), TaskKind::Dst, Some(&schema)).unwrap();
        let lens: Vec<usize> = inst.iter().map(|i| i.context.len()).collect();
        assert_eq!(lens, vec![1, 3, 5]);
        assert!(inst.iter().all(|i| i.validate().is_ok()));
        assert!(inst[0].answer_space.iter().all(|k| k.starts_with("hotel-")));
        assert_eq!(inst[2].instance_id, "d1:004");
    }

    #[test]
    fn next_action_without_system_turns_is_empty() {
        let mut d = Dialogue::new("d", vec![Utterance::new(Speaker::User, 0, "hello")]);
        d.domains.insert("hotel".into());
        assert!(to_task_instances(&d, TaskKind::NextAction, None).unwrap().is_empty());
    }

    #[test]
    fn missing_gold_is_reported() {
        let d = Dialogue::new("d9", vec![Utterance::new(Speaker::User, 0, "hello")]);
        let err = to_task_instances(&d, TaskKind::Dst, Some(&multiwoz_schema(false))).unwrap_err();
        assert!(matches!(err, Error::MissingGold { ref dialogue_id, task_kind: TaskKind::Dst } if dialogue_id == "d9"));
        assert!(to_task_instances(&d, TaskKind::ResponseSelection, None).is_err());
        assert!(to_task_instances(&d, TaskKind::Erc, None).is_err());
    }

    #[test]
    fn corpus_stats_means() {
        let mk = |id: &str, words: usize| {
            Dialogue::new(id, vec![Utterance::new(Speaker::User, 0, vec!["w"; words].join(" "))])
        };
        let stats = corpus_stats(&[mk("a", 10), mk("b", 20)], whitespace_tokens).unwrap();
        assert_eq!(stats.mean_tokens_per_dialogue, 15.0);
        assert_eq!(stats.dialogue_count, 2);
        let one = corpus_stats(&[mk("a", 7)], |_| 3).unwrap();
        assert_eq!(one.mean_tokens_per_dialogue, 3.0);
        assert!(matches!(corpus_stats(&[], whitespace_tokens), Err(Error::Empty(_))));
        let odd = corpus_stats(&[mk("a", 1), mk("b", 2), mk("c", 2)], whitespace_tokens).unwrap();
        assert_eq!(odd.mean_tokens_per_dialogue, 1.7);
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(round_half_up(&Ratio::new(5, 100), 1), 1);
        assert_eq!(round_half_up(&Ratio::new(4, 100), 1), 0);
        assert_eq!(round_half_up(&Ratio::new(15, 1), 1), 150);
    }

    #[test]
    fn dataset_names_parse() {
        assert_eq!("MultiWOZ 2.1".parse::<DatasetName>().unwrap(), DatasetName::Multiwoz21);
        assert_eq!("starv2".parse::<DatasetName>().unwrap(), DatasetName::Starv2);
        assert!("imdb".parse::<DatasetName>().is_err());
    }
}
