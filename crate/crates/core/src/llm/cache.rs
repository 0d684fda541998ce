//! Content-addressed response cache: one JSON file per request digest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CompletionRequest, TokenUsage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub request: CompletionRequest,
    pub text: String,
    #[serde(default)]
    pub usage: Option<TokenUsage>,
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(ResponseCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Returns the entry for `key` if it exists and was stored for an
    /// identical request.
    pub fn get(&self, key: &str, request: &CompletionRequest) -> Result<Option<CacheEntry>> {
        let path = self.path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        match serde_json::from_str::<CacheEntry>(&text) {
            Ok(entry) if entry.request == *request => Ok(Some(entry)),
            Ok(_) => {
                log::warn!("cache entry {key} belongs to a different request; ignoring");
                Ok(None)
            }
            Err(e) => {
                log::warn!("unreadable cache entry {}: {e}", path.display());
                Ok(None)
            }
        }
    }

    /// Writes to a temporary file in the cache directory, then renames it
    /// into place so readers never see a partial entry.
    pub fn put(&self, key: &str, request: &CompletionRequest, text: &str, usage: Option<TokenUsage>) -> Result<()> {
        let entry = CacheEntry {
            key: key.to_string(),
            request: request.clone(),
            text: text.to_string(),
            usage,
        };
        let body = serde_json::to_vec_pretty(&entry)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        tmp.write_all(&body).map_err(|e| Error::io(tmp.path(), e))?;
        let target = self.path(key);
        tmp.persist(&target).map_err(|e| Error::io(&target, e.error))?;
        Ok(())
    }

    pub fn len(&self) -> Result<usize> {
        let entries = fs::read_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        Ok(entries
            .filter_map(|e| e.ok())
            .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
            .count())
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.len()? == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::super::cache_key;
    use super::*;

    #[test]
    fn put_then_get() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let req = CompletionRequest::new("m", "p");
        let key = cache_key(&req);
        assert!(cache.get(&key, &req).unwrap().is_none());
        cache.put(&key, &req, "hello", None).unwrap();
        assert_eq!(cache.get(&key, &req).unwrap().unwrap().text, "hello");
        assert_eq!(cache.len().unwrap(), 1);
        let other = CompletionRequest::new("m", "q");
        assert!(cache.get(&key, &other).unwrap().is_none());
    }

    #[test]
    fn corrupt_entries_are_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let req = CompletionRequest::new("m", "p");
        let key = cache_key(&req);
        fs::write(dir.path().join(format!("{key}.json")), "{not json").unwrap();
        assert!(cache.get(&key, &req).unwrap().is_none());
    }
}
