//! MELD emotion recognition.
//!
//! Layout: `<dir>/{train,dev,test}_sent_emo.csv` with the published
//! columns (`Utterance`, `Speaker`, `Emotion`, `Dialogue_ID`,
//! `Utterance_ID`, ...). Rows are grouped by `Dialogue_ID`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{Loaded, Split, ERC_LABELS};
use crate::error::{Error, Result};
use crate::types::{Dialogue, Speaker, Utterance};

#[derive(Debug, Deserialize)]
struct Row {
    #[serde(rename = "Utterance")]
    utterance: String,
    #[serde(rename = "Speaker")]
    speaker: String,
    #[serde(rename = "Emotion")]
    emotion: String,
    #[serde(rename = "Dialogue_ID")]
    dialogue_id: u64,
    #[serde(rename = "Utterance_ID")]
    utterance_id: u64,
}

pub(super) fn load(dir: &Path, split: Split) -> Result<Loaded> {
    let path = dir.join(format!("{}_sent_emo.csv", split.as_str()));
    if !path.is_file() {
        return Err(Error::load(path, "missing MELD csv"));
    }
    let mut reader = csv::Reader::from_path(&path).map_err(|e| Error::load(&path, e.to_string()))?;
    let mut grouped: BTreeMap<u64, Vec<Row>> = BTreeMap::new();
    for (n, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::load(&path, format!("row {}: {e}", n + 1)))?;
        grouped.entry(row.dialogue_id).or_default().push(row);
    }

    let mut dialogues = Vec::new();
    let mut skipped = Vec::new();
    for (dia, mut rows) in grouped {
        rows.sort_by_key(|r| r.utterance_id);
        let id = format!("dia{dia}");
        let first_speaker = rows.first().map(|r| r.speaker.clone()).unwrap_or_default();
        let mut utterances = Vec::with_capacity(rows.len());
        let mut bad = None;
        for (i, r) in rows.into_iter().enumerate() {
            let emotion = r.emotion.trim().to_lowercase();
            if !ERC_LABELS.contains(&emotion.as_str()) {
                bad = Some(Error::record(&id, format!("unknown emotion {:?}", r.emotion)));
                break;
            }
            let role = if r.speaker == first_speaker { Speaker::User } else { Speaker::System };
            let mut u = Utterance::new(role, i, r.utterance.trim());
            u.speaker_name = Some(r.speaker.trim().to_string());
            u.emotion_label = Some(emotion);
            utterances.push(u);
        }
        if let Some(e) = bad {
            skipped.push(e);
            continue;
        }
        let mut d = Dialogue::new(id, utterances);
        d.domains.insert("friends".to_string());
        dialogues.push(d);
    }
    Ok(Loaded {
        dialogues,
        skipped,
        schema: None,
    })
}
