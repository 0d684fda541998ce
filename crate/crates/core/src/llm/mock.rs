//! Scripted provider for offline runs.
//!
//! A script is a JSON object. Each key is either the hex SHA-256 of a
//! prompt or a literal substring of prompts; each value is the reply text,
//! or an object `{"fail": "transient" | "fatal" | "malformed"}`.
//! Digest keys win; among substring keys the longest match wins.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::{prompt_digest, CompletionRequest, Provider, ProviderError, ProviderReply};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Transient,
    Fatal,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MockReply {
    Text(String),
    Failure { fail: FailureKind },
}

impl From<&str> for MockReply {
    fn from(s: &str) -> Self {
        MockReply::Text(s.to_string())
    }
}

impl From<String> for MockReply {
    fn from(s: String) -> Self {
        MockReply::Text(s)
    }
}

#[derive(Debug, Default)]
pub struct MockProvider {
    script: BTreeMap<String, MockReply>,
    calls: AtomicUsize,
}

fn is_digest(key: &str) -> bool {
    key.len() == 64 && key.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

impl MockProvider {
    pub fn new(script: BTreeMap<String, MockReply>) -> Self {
        MockProvider {
            script,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let script: BTreeMap<String, MockReply> =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("mock script: {e}")))?;
        Ok(Self::new(script))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn lookup(&self, prompt: &str, digest: &str) -> Option<&MockReply> {
        if let Some(r) = self.script.get(digest) {
            return Some(r);
        }
        self.script
            .iter()
            .filter(|(k, _)| !is_digest(k) && !k.is_empty() && prompt.contains(k.as_str()))
            .max_by(|(a, _), (b, _)| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
            .map(|(_, r)| r)
    }
}

impl Provider for MockProvider {
    fn complete(&self, request: &CompletionRequest) -> std::result::Result<ProviderReply, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let digest = prompt_digest(&request.prompt);
        match self.lookup(&request.prompt, &digest) {
            Some(MockReply::Text(t)) => Ok(ProviderReply {
                text: t.clone(),
                usage: None,
            }),
            Some(MockReply::Failure { fail }) => Err(match fail {
                FailureKind::Transient => ProviderError::Transient {
                    status: Some(503),
                    message: "scripted transient failure".into(),
                },
                FailureKind::Fatal => ProviderError::Fatal {
                    status: Some(400),
                    message: "scripted fatal failure".into(),
                },
                FailureKind::Malformed => ProviderError::Protocol("scripted malformed reply".into()),
            }),
            None => Err(ProviderError::Protocol(format!("no scripted reply for prompt digest {digest}"))),
        }
    }
}
