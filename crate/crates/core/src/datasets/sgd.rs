//! Schema-Guided Dialogue.
//!
//! Layout: `<dir>/<split>/schema.json` and `<dir>/<split>/dialogues_*.json`
//! with `split` one of `train`, `dev`, `test`. Service `Restaurants_1`
//! becomes domain `restaurants_1`, so slot keys read `restaurants_1-city`.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde_json::Value;

use super::{read_json, Loaded, Split};
use crate::error::{Error, Result};
use crate::parsing::{canonicalize_value, is_absent_value};
use crate::types::{BeliefState, Dialogue, Schema, SlotSpec, Speaker, TurnState, Utterance};

fn domain_of(service: &str) -> String {
    service.to_lowercase().replace(['-', ' '], "_")
}

fn load_schema(path: &Path) -> Result<Schema> {
    let raw = read_json(path)?;
    let services = raw.as_array().ok_or_else(|| Error::load(path, "expected a list of services"))?;
    let mut slots = Vec::new();
    for service in services {
        let name = service
            .get("service_name")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::load(path, "service without service_name"))?;
        let domain = domain_of(name);
        for slot in service.get("slots").and_then(Value::as_array).into_iter().flatten() {
            let Some(slot_name) = slot.get("name").and_then(Value::as_str) else {
                return Err(Error::load(path, format!("{name}: slot without name")));
            };
            let categorical = slot.get("is_categorical").and_then(Value::as_bool).unwrap_or(false);
            let values: Option<Vec<String>> = categorical.then(|| {
                slot.get("possible_values")
                    .and_then(Value::as_array)
                    .into_iter()
                    .flatten()
                    .filter_map(Value::as_str)
                    .map(str::to_lowercase)
                    .collect()
            });
            slots.push(SlotSpec {
                domain: domain.clone(),
                slot: slot_name.to_lowercase(),
                description: slot.get("description").and_then(Value::as_str).unwrap_or_default().to_string(),
                categorical_values: values,
            });
        }
    }
    Ok(Schema::Declarative { slots })
}

fn convert(raw: &Value, known: &HashSet<String>) -> Result<Dialogue> {
    let id = raw
        .get("dialogue_id")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::record("<unknown>", "dialogue without dialogue_id"))?;
    let turns = raw
        .get("turns")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::record(id, "missing `turns`"))?;

    let mut utterances = Vec::new();
    let mut states = Vec::new();
    // Latest cumulative slot values per service.
    let mut per_service: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for (i, turn) in turns.iter().enumerate() {
        let speaker = match turn.get("speaker").and_then(Value::as_str) {
            Some("USER") => Speaker::User,
            Some("SYSTEM") => Speaker::System,
            other => return Err(Error::record(id, format!("turn {i}: bad speaker {other:?}"))),
        };
        let text = turn.get("utterance").and_then(Value::as_str).unwrap_or_default();
        utterances.push(Utterance::new(speaker, i, text));
        if speaker != Speaker::User {
            continue;
        }
        for frame in turn.get("frames").and_then(Value::as_array).into_iter().flatten() {
            let (Some(service), Some(values)) = (
                frame.get("service").and_then(Value::as_str),
                frame.get("state").and_then(|s| s.get("slot_values")).and_then(Value::as_object),
            ) else {
                continue;
            };
            let domain = domain_of(service);
            let mut slots = BTreeMap::new();
            for (slot, vals) in values {
                let key = format!("{domain}-{}", slot.to_lowercase());
                let Some(first) = vals.as_array().and_then(|a| a.first()).and_then(Value::as_str) else {
                    continue;
                };
                if !known.contains(&key) {
                    log::warn!("{id}: dropping slot {key} outside the schema");
                    continue;
                }
                let v = canonicalize_value(&key, first);
                if !is_absent_value(&v) {
                    slots.insert(key, v);
                }
            }
            per_service.insert(domain, slots);
        }
        let mut state = BeliefState::new();
        for slots in per_service.values() {
            for (k, v) in slots {
                state.insert(k.clone(), v.clone())?;
            }
        }
        states.push(TurnState { turn_index: i, state });
    }
    let mut dialogue = Dialogue::new(id, utterances);
    dialogue.domains = raw
        .get("services")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .filter_map(Value::as_str)
        .map(domain_of)
        .collect();
    dialogue.per_turn_gold_states = Some(states);
    Ok(dialogue)
}

pub(super) fn load(dir: &Path, split: Split) -> Result<Loaded> {
    let split_dir = dir.join(split.as_str());
    let schema_path = split_dir.join("schema.json");
    if !schema_path.is_file() {
        return Err(Error::load(schema_path, "missing schema.json"));
    }
    let schema = load_schema(&schema_path)?;
    let known: HashSet<String> = schema.slot_keys(None).into_iter().collect();

    let mut files: Vec<_> = std::fs::read_dir(&split_dir)
        .map_err(|e| Error::load(&split_dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("dialogues_") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::load(&split_dir, "no dialogues_*.json files"));
    }

    let mut dialogues = Vec::new();
    let mut skipped = Vec::new();
    for file in files {
        let raw = read_json(&file)?;
        let list = raw.as_array().ok_or_else(|| Error::load(&file, "expected a list of dialogues"))?;
        for d in list {
            match convert(d, &known) {
                Ok(d) => dialogues.push(d),
                Err(e) => skipped.push(e),
            }
        }
    }
    Ok(Loaded {
        dialogues,
        skipped,
        schema: Some(schema),
    })
}
