//! Append-only JSON-lines response cache.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key_hash: String,
    pub model: String,
    pub temperature: f64,
    pub run: u32,
    pub prompt_sha: String,
    pub response: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub entries: u64,
}

pub fn cache_key(prompt_sha: &str, model: &str, temperature: f64, run: u32) -> String {
    let mut h = Sha256::new();
    h.update(prompt_sha.as_bytes());
    h.update([0]);
    h.update(model.as_bytes());
    h.update([0]);
    h.update(temperature.to_bits().to_le_bytes());
    h.update(run.to_le_bytes());
    hex::encode(h.finalize())
}

struct Inner {
    entries: HashMap<String, String>,
    file: Option<File>,
}

pub struct ResponseCache {
    path: Option<PathBuf>,
    inner: Mutex<Inner>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache {
            path: None,
            inner: Mutex::new(Inner { entries: HashMap::new(), file: None }),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// Open (creating if needed) a cache file. Unreadable lines are skipped
    /// with a warning; the first record for a key wins.
    pub fn open(path: &Path) -> Result<Self> {
        let io = |source| Error::Io { path: path.display().to_string(), source };
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(r) => {
                        entries.entry(r.key_hash).or_insert(r.response);
                    }
                    Err(e) => log::warn!("{}:{}: skipping cache line: {e}", path.display(), n + 1),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        Ok(ResponseCache {
            path: Some(path.to_path_buf()),
            inner: Mutex::new(Inner { entries, file: Some(file) }),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key_hash: &str) -> Option<String> {
        let found = self.inner.lock().expect("cache lock").entries.get(key_hash).cloned();
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    /// Store a record unless its key is present. Returns the stored response,
    /// which is the earlier one when another writer got there first.
    pub fn insert(&self, record: CacheRecord) -> Result<String> {
        let mut inner = self.inner.lock().expect("cache lock");
        if let Some(existing) = inner.entries.get(&record.key_hash) {
            return Ok(existing.clone());
        }
        if let Some(file) = inner.file.as_mut() {
            let mut line = serde_json::to_string(&record)?;
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|source| Error::Io { path: self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(), source })?;
        }
        inner.entries.insert(record.key_hash, record.response.clone());
        Ok(record.response)
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            entries: self.len() as u64,
        }
    }
}
