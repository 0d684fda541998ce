//! MuTual response selection.
//!
//! Layout: `<dir>/{train,dev,test}/*.txt`, each a JSON object with
//! `id`, `article` (turns prefixed `m :` / `f :`), four `options` and the
//! gold letter in `answers`. The public test split has no answers; those
//! records are reported as skipped.

use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::Deserialize;

use super::{Loaded, Split};
use crate::error::{Error, Result};
use crate::types::{Dialogue, Speaker, Utterance};

#[derive(Deserialize)]
struct Record {
    id: String,
    article: String,
    options: Vec<String>,
    #[serde(default)]
    answers: Option<String>,
}

fn speaker_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|\s)([mfMF])\s*:\s").unwrap())
}

/// Splits an article into `(speaker, text)` turns.
fn split_turns(article: &str) -> Vec<(String, String)> {
    let marks: Vec<_> = speaker_marker().captures_iter(article).collect();
    if marks.is_empty() {
        return vec![(String::new(), article.trim().to_string())];
    }
    let mut turns = Vec::new();
    for (i, cap) in marks.iter().enumerate() {
        let start = cap.get(0).unwrap().end();
        let end = marks.get(i + 1).map_or(article.len(), |c| c.get(0).unwrap().start());
        turns.push((cap[1].to_uppercase(), article[start..end].trim().to_string()));
    }
    turns
}

fn convert(rec: Record) -> Result<Dialogue> {
    let turns = split_turns(&rec.article);
    let first = turns.first().map(|t| t.0.clone()).unwrap_or_default();
    let utterances = turns
        .into_iter()
        .enumerate()
        .map(|(i, (who, text))| {
            let role = if who == first { Speaker::User } else { Speaker::System };
            let mut u = Utterance::new(role, i, text);
            if !who.is_empty() {
                u.speaker_name = Some(who);
            }
            u
        })
        .collect();
    let answer = rec
        .answers
        .as_deref()
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .ok_or_else(|| Error::record(&rec.id, "no gold answer (unlabelled split?)"))?;
    let letter = answer.chars().next().unwrap().to_ascii_uppercase();
    let index = (letter as usize).wrapping_sub('A' as usize);
    if !letter.is_ascii_uppercase() || index >= rec.options.len() {
        return Err(Error::record(&rec.id, format!("answer {answer:?} does not name an option")));
    }
    let mut d = Dialogue::new(rec.id, utterances);
    d.domains.insert("daily".to_string());
    d.response_candidates = Some(rec.options.iter().map(|o| o.trim().to_string()).collect());
    d.gold_response_index = Some(index);
    Ok(d)
}

pub(super) fn load(dir: &Path, split: Split) -> Result<Loaded> {
    let split_dir = dir.join(split.as_str());
    if !split_dir.is_dir() {
        return Err(Error::load(split_dir, "missing split directory"));
    }
    let mut files: Vec<_> = std::fs::read_dir(&split_dir)
        .map_err(|e| Error::load(&split_dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::load(&split_dir, "no .txt records"));
    }
    let mut dialogues = Vec::new();
    let mut skipped = Vec::new();
    for file in files {
        let text = std::fs::read_to_string(&file).map_err(|e| Error::load(&file, e.to_string()))?;
        let rec: Record = serde_json::from_str(&text).map_err(|e| Error::load(&file, format!("invalid JSON: {e}")))?;
        match convert(rec) {
            Ok(d) => dialogues.push(d),
            Err(e) => skipped.push(e),
        }
    }
    Ok(Loaded {
        dialogues,
        skipped,
        schema: None,
    })
}
