//! STARv2 next-action prediction.
//!
//! Layout:
//!
//! ```text
//! <dir>/dialogues/*.json   one dialogue per file: DialogueID, Scenario.Domains, Events
//! <dir>/tasks/*.json       task graphs: {"task", "domain", "nodes": [{id, kind, label}], "edges": [[from, to]]}
//! <dir>/splits.json        optional {"train": [ids], "dev": [...], "test": [...]}
//! ```
//!
//! Wizard events carry `ActionDescription`, the natural-language action
//! description that serves as the label. System-node labels of the task
//! graphs form the label space.

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use super::{read_json, Loaded, Split};
use crate::error::{Error, Result};
use crate::types::{Dialogue, NodeKind, ProceduralNode, Schema, Speaker, Utterance};

#[derive(Deserialize)]
struct TaskNode {
    id: String,
    kind: NodeKind,
    label: String,
}

#[derive(Deserialize)]
struct TaskGraph {
    task: String,
    domain: String,
    nodes: Vec<TaskNode>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::load(dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn load_schema(dir: &Path) -> Result<Schema> {
    let mut nodes = Vec::new();
    let mut graph = Vec::new();
    let mut actions = BTreeSet::new();
    for file in json_files(dir)? {
        let raw = read_json(&file)?;
        let task: TaskGraph = serde_json::from_value(raw).map_err(|e| Error::load(&file, e.to_string()))?;
        let domain = task.domain.to_lowercase();
        for n in task.nodes {
            if n.kind == NodeKind::System {
                actions.insert(n.label.clone());
            }
            nodes.push(ProceduralNode {
                id: format!("{}/{}", task.task, n.id),
                kind: n.kind,
                label: n.label,
                domain: domain.clone(),
            });
        }
        for (from, to) in task.edges {
            graph.push((format!("{}/{from}", task.task), format!("{}/{to}", task.task)));
        }
    }
    Ok(Schema::Procedural {
        actions: actions.into_iter().collect(),
        graph,
        nodes,
    })
}

fn id_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn convert(raw: &Value, file: &Path) -> Result<Dialogue> {
    let id = raw
        .get("DialogueID")
        .and_then(id_string)
        .ok_or_else(|| Error::record(file.display().to_string(), "missing DialogueID"))?;
    let events = raw
        .get("Events")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::record(&id, "missing Events"))?;
    let mut utterances = Vec::new();
    for event in events {
        let agent = event.get("Agent").and_then(Value::as_str).unwrap_or_default();
        let action = event.get("Action").and_then(Value::as_str).unwrap_or_default();
        let text = event.get("Text").and_then(Value::as_str).unwrap_or_default();
        let speaker = match (agent, action) {
            ("User", "utter") => Speaker::User,
            ("Wizard", "utter" | "pick_suggestion") => Speaker::System,
            _ => continue,
        };
        let mut u = Utterance::new(speaker, utterances.len(), text);
        if speaker == Speaker::System {
            let label = event
                .get("ActionDescription")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::record(&id, format!("wizard turn {} lacks ActionDescription", utterances.len())))?;
            u.action_label = Some(label.to_string());
        }
        utterances.push(u);
    }
    let mut dialogue = Dialogue::new(&id, utterances);
    dialogue.gold_next_action = dialogue.utterances.iter().rev().find_map(|u| u.action_label.clone());
    dialogue.domains = raw
        .pointer("/Scenario/Domains")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .filter_map(Value::as_str)
        .map(str::to_lowercase)
        .collect();
    Ok(dialogue)
}

pub(super) fn load(dir: &Path, split: Split) -> Result<Loaded> {
    let dialogue_dir = dir.join("dialogues");
    let task_dir = dir.join("tasks");
    if !dialogue_dir.is_dir() {
        return Err(Error::load(dialogue_dir, "missing dialogues/ directory"));
    }
    if !task_dir.is_dir() {
        return Err(Error::load(task_dir, "missing tasks/ directory"));
    }
    let schema = load_schema(&task_dir)?;

    let split_path = dir.join("splits.json");
    let members: Option<HashSet<String>> = if split_path.is_file() {
        let raw = read_json(&split_path)?;
        let ids = raw
            .get(split.as_str())
            .and_then(Value::as_array)
            .ok_or_else(|| Error::load(&split_path, format!("no `{}` list", split.as_str())))?;
        Some(ids.iter().filter_map(id_string).collect())
    } else {
        log::info!("{}: no splits.json, using every dialogue", dir.display());
        None
    };

    let files = json_files(&dialogue_dir)?;
    if files.is_empty() {
        return Err(Error::load(&dialogue_dir, "no dialogue files"));
    }
    let mut dialogues = Vec::new();
    let mut skipped = Vec::new();
    for file in files {
        let raw = read_json(&file)?;
        match convert(&raw, &file) {
            Ok(d) if members.as_ref().is_none_or(|m| m.contains(&d.id)) => dialogues.push(d),
            Ok(_) => {}
            Err(e) => skipped.push(e),
        }
    }
    Ok(Loaded {
        dialogues,
        skipped,
        schema: Some(schema),
    })
}
