//! MultiWOZ 2.1 and SpokenWOZ.
//!
//! Layout (both corpora):
//!
//! ```text
//! <dir>/data.json          {"<id>": {"goal": {...}, "log": [{"text", "metadata", "tag"?}, ...]}}
//! <dir>/valListFile.json   dev dialogue ids, one per line (.txt also accepted)
//! <dir>/testListFile.json  test dialogue ids, one per line (.txt also accepted)
//! ```
//!
//! Dialogues listed in neither file form the train split. System turns
//! carry the cumulative `metadata` state reached after the preceding user
//! turn; MultiWOZ alternates user/system, SpokenWOZ marks turns with `tag`.

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::{read_json, Loaded, Split};
use crate::error::{Error, Result};
use crate::parsing::{canonicalize_value, is_absent_value};
use crate::types::{BeliefState, Dialogue, Schema, SlotSpec, Speaker, TurnState, Utterance};

const SLOTS: &[(&str, &str, &str, &[&str])] = &[
    ("attraction", "area", "area or place of the attraction", &["centre", "east", "north", "south", "west"]),
    ("attraction", "name", "name of the attraction", &[]),
    ("attraction", "type", "type of the attraction", &[]),
    ("bus", "day", "day of the bus trip", &[]),
    ("bus", "departure", "departure location of the bus", &[]),
    ("bus", "destination", "destination of the bus", &[]),
    ("bus", "leaveat", "leaving time of the bus", &[]),
    ("hospital", "department", "department of the hospital", &[]),
    ("hotel", "area", "area or place of the hotel", &["centre", "east", "north", "south", "west"]),
    ("hotel", "bookday", "day of the hotel booking", &[]),
    ("hotel", "bookpeople", "number of people for the hotel booking", &[]),
    ("hotel", "bookstay", "length of stay at the hotel", &[]),
    ("hotel", "internet", "whether the hotel has internet", &["yes", "no"]),
    ("hotel", "name", "name of the hotel", &[]),
    ("hotel", "parking", "whether the hotel has parking", &["yes", "no"]),
    ("hotel", "pricerange", "price budget of the hotel", &["cheap", "moderate", "expensive"]),
    ("hotel", "stars", "star rating of the hotel", &[]),
    ("hotel", "type", "type of the hotel", &["hotel", "guesthouse"]),
    ("restaurant", "area", "area or place of the restaurant", &["centre", "east", "north", "south", "west"]),
    ("restaurant", "bookday", "day of the restaurant booking", &[]),
    ("restaurant", "bookpeople", "number of people for the restaurant booking", &[]),
    ("restaurant", "booktime", "time of the restaurant booking", &[]),
    ("restaurant", "food", "food type of the restaurant", &[]),
    ("restaurant", "name", "name of the restaurant", &[]),
    ("restaurant", "pricerange", "price budget of the restaurant", &["cheap", "moderate", "expensive"]),
    ("taxi", "arriveby", "arrival time of the taxi", &[]),
    ("taxi", "departure", "departure location of the taxi", &[]),
    ("taxi", "destination", "destination of the taxi", &[]),
    ("taxi", "leaveat", "leaving time of the taxi", &[]),
    ("train", "arriveby", "arrival time of the train", &[]),
    ("train", "bookpeople", "number of people for the train booking", &[]),
    ("train", "day", "day of the train", &[]),
    ("train", "departure", "departure location of the train", &[]),
    ("train", "destination", "destination of the train", &[]),
    ("train", "leaveat", "leaving time of the train", &[]),
];

const PROFILE_SLOTS: &[(&str, &str, &str, &[&str])] = &[
    ("profile", "email", "email address of the user", &[]),
    ("profile", "idnumber", "id number of the user", &[]),
    ("profile", "name", "name of the user", &[]),
    ("profile", "phonenumber", "phone number of the user", &[]),
    ("profile", "platenumber", "car plate number of the user", &[]),
];

/// Built-in MultiWOZ slot ontology; `spoken` adds SpokenWOZ's profile domain.
pub fn multiwoz_schema(spoken: bool) -> Schema {
    let extra: &[_] = if spoken { PROFILE_SLOTS } else { &[] };
    let slots = SLOTS
        .iter()
        .chain(extra)
        .map(|(domain, slot, description, values)| SlotSpec {
            domain: domain.to_string(),
            slot: slot.to_string(),
            description: description.to_string(),
            categorical_values: if values.is_empty() {
                None
            } else {
                Some(values.iter().map(|v| v.to_string()).collect())
            },
        })
        .collect();
    Schema::Declarative { slots }
}

fn read_id_list(dir: &Path, stem: &str) -> Result<Option<HashSet<String>>> {
    for ext in ["json", "txt"] {
        let path = dir.join(format!("{stem}.{ext}"));
        if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::load(&path, e.to_string()))?;
            return Ok(Some(
                text.lines().map(str::trim).filter(|l| !l.is_empty()).map(strip_json_suffix).collect(),
            ));
        }
    }
    Ok(None)
}

fn strip_json_suffix(id: &str) -> String {
    id.strip_suffix(".json").unwrap_or(id).to_string()
}

/// Converts one `metadata` object into a belief state.
fn state_from_metadata(metadata: &Value, known: &HashSet<String>, dialogue_id: &str) -> BeliefState {
    let mut state = BeliefState::new();
    let Some(domains) = metadata.as_object() else {
        return state;
    };
    for (domain, body) in domains {
        let domain = domain.to_lowercase();
        let groups = [("semi", ""), ("book", "book")];
        for (group, prefix) in groups {
            let Some(slots) = body.get(group).and_then(Value::as_object) else {
                continue;
            };
            for (slot, value) in slots {
                if slot == "booked" {
                    continue;
                }
                let Some(value) = value.as_str() else { continue };
                let slot: String = slot.to_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
                let key = format!("{domain}-{prefix}{slot}");
                let value = canonicalize_value(&key, value);
                if is_absent_value(&value) {
                    continue;
                }
                if !known.contains(&key) {
                    log::warn!("{dialogue_id}: dropping slot {key} outside the ontology");
                    continue;
                }
                if let Err(e) = state.insert(key, value) {
                    log::warn!("{dialogue_id}: {e}");
                }
            }
        }
    }
    state
}

fn goal_domains(goal: Option<&Value>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if let Some(obj) = goal.and_then(Value::as_object) {
        for (k, v) in obj {
            if matches!(k.as_str(), "topic" | "message") {
                continue;
            }
            if v.as_object().is_some_and(|o| !o.is_empty()) {
                out.insert(k.to_lowercase());
            }
        }
    }
    out
}

fn convert(id: &str, raw: &Value, spoken: bool, known: &HashSet<String>) -> Result<Dialogue> {
    let log = raw
        .get("log")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::record(id, "missing `log` array"))?;
    let mut utterances = Vec::with_capacity(log.len());
    let mut states = Vec::new();
    for (i, turn) in log.iter().enumerate() {
        let text = turn.get("text").and_then(Value::as_str).unwrap_or_default();
        let speaker = match turn.get("tag").and_then(Value::as_str) {
            Some(t) if t.eq_ignore_ascii_case("user") => Speaker::User,
            Some(t) if t.eq_ignore_ascii_case("system") => Speaker::System,
            Some(t) => return Err(Error::record(id, format!("turn {i}: unknown tag {t:?}"))),
            None if spoken => return Err(Error::record(id, format!("turn {i}: missing speaker tag"))),
            None if i % 2 == 0 => Speaker::User,
            None => Speaker::System,
        };
        utterances.push(Utterance::new(speaker, i, text));
    }
    // The state after user turn t is stored on the system turn that follows it.
    for (i, u) in utterances.iter().enumerate() {
        if u.speaker != Speaker::User {
            continue;
        }
        let Some(next) = log.get(i + 1) else { continue };
        if utterances[i + 1].speaker != Speaker::System {
            continue;
        }
        if let Some(meta) = next.get("metadata").filter(|m| m.as_object().is_some_and(|o| !o.is_empty())) {
            states.push(TurnState {
                turn_index: i,
                state: state_from_metadata(meta, known, id),
            });
        }
    }
    let mut domains = goal_domains(raw.get("goal"));
    for s in &states {
        for k in s.state.keys() {
            if let Some((d, _)) = k.split_once('-') {
                domains.insert(d.to_string());
            }
        }
    }
    let mut dialogue = Dialogue::new(id, utterances);
    dialogue.domains = domains;
    dialogue.per_turn_gold_states = Some(states);
    Ok(dialogue)
}

pub(super) fn load(dir: &Path, split: Split, spoken: bool) -> Result<Loaded> {
    let data_path: PathBuf = dir.join("data.json");
    if !data_path.is_file() {
        return Err(Error::load(data_path, "missing data.json"));
    }
    let data = read_json(&data_path)?;
    let dialogues = data
        .as_object()
        .ok_or_else(|| Error::load(&data_path, "expected an object keyed by dialogue id"))?;

    let dev = read_id_list(dir, "valListFile")?;
    let test = read_id_list(dir, "testListFile")?;
    let wanted = |id: &str| -> Result<bool> {
        Ok(match split {
            Split::Dev => dev
                .as_ref()
                .ok_or_else(|| Error::load(dir.join("valListFile.json"), "missing dev id list"))?
                .contains(id),
            Split::Test => test
                .as_ref()
                .ok_or_else(|| Error::load(dir.join("testListFile.json"), "missing test id list"))?
                .contains(id),
            Split::Train => {
                !dev.as_ref().is_some_and(|s| s.contains(id)) && !test.as_ref().is_some_and(|s| s.contains(id))
            }
        })
    };

    let schema = multiwoz_schema(spoken);
    let known: HashSet<String> = schema.slot_keys(None).into_iter().collect();
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (raw_id, raw) in dialogues {
        let id = strip_json_suffix(raw_id);
        if !wanted(&id)? {
            continue;
        }
        match convert(&id, raw, spoken, &known) {
            Ok(d) => out.push(d),
            Err(e) => skipped.push(e),
        }
    }
    Ok(Loaded {
        dialogues: out,
        skipped,
        schema: Some(schema),
    })
}
