//! Impression store and the durable click log.
//!
//! Both live behind one lock so the log sees impressions and clicks in the
//! order they were accepted. Every line of the log is a complete
//! [`ClickLogEntry`]: the impression when it is served, then a fresh snapshot
//! after each accepted click. Readers keep the last snapshot per `serp_id`.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use fedsearch::domain::DomainError;
use fedsearch::{ClickEvent, ClickKind, ClickLogEntry, Serp};
use lru::LruCache;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClickError {
    #[error("unknown serp `{0}`")]
    UnknownSerp(String),
    #[error(transparent)]
    Invalid(#[from] DomainError),
    #[error("writing click log: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClickOutcome {
    Logged,
    Duplicate,
}

pub struct ClickStore {
    impressions: LruCache<String, ClickLogEntry>,
    log: File,
    path: PathBuf,
}

impl ClickStore {
    /// Opens `path` for appending, creating it if needed.
    pub fn open(path: &Path, capacity: NonZeroUsize) -> io::Result<Self> {
        let log = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            impressions: LruCache::new(capacity),
            log,
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.impressions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.impressions.is_empty()
    }

    pub fn get(&mut self, serp_id: &str) -> Option<&ClickLogEntry> {
        self.impressions.get(serp_id)
    }

    fn append(&mut self, entry: &ClickLogEntry) -> io::Result<()> {
        let mut line = serde_json::to_string(entry)?;
        line.push('\n');
        self.log.write_all(line.as_bytes())?;
        self.log.flush()
    }

    /// Logs the impression, then keeps it for click attribution. The least
    /// recently used impression is evicted once the store is full.
    pub fn record_impression(&mut self, serp: Serp) -> io::Result<()> {
        let entry = ClickLogEntry {
            serp,
            clicks: Vec::new(),
        };
        self.append(&entry)?;
        self.impressions.put(entry.serp.serp_id.clone(), entry);
        Ok(())
    }

    /// Repeats of an accepted (position, kind) pair are acknowledged but not
    /// logged again.
    pub fn record_click(
        &mut self,
        serp_id: &str,
        position: usize,
        click_kind: ClickKind,
        timestamp: u64,
    ) -> Result<ClickOutcome, ClickError> {
        let entry = self
            .impressions
            .get(serp_id)
            .ok_or_else(|| ClickError::UnknownSerp(serp_id.to_string()))?;
        let click = ClickEvent {
            position,
            click_kind,
            timestamp,
        };
        entry.check_click(&click)?;
        if entry
            .clicks
            .iter()
            .any(|c| c.position == position && c.click_kind == click_kind)
        {
            return Ok(ClickOutcome::Duplicate);
        }
        let mut updated = entry.clone();
        updated.clicks.push(click);
        self.append(&updated)?;
        self.impressions.put(serp_id.to_string(), updated);
        Ok(ClickOutcome::Logged)
    }
}
