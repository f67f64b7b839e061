//! Validity-gated store of simulated mechanisms with top-k retrieval.
//!
//! Only designs whose simulation succeeded are admitted. Retrieval ranks by
//! Chamfer distance to the current target, ascending, with ties going to the
//! most recent entry.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use mechsynth_core::linkage::SimResult;
use mechsynth_core::Scalar;
use serde::{Deserialize, Serialize};

/// Reason given when the execution gate rejects an entry.
pub const EXECUTION_GATE: &str = "execution criterion V(m)=0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    /// Canonical DSL text.
    pub mechanism_text: String,
    pub chamfer: f64,
    pub surrogate_text: Option<String>,
    pub task_id: String,
    pub iteration: usize,
    /// Assigned by the repository on admission; strictly increasing.
    pub created_at: u64,
}

impl MemoryEntry {
    pub fn new(mechanism_text: impl Into<String>, chamfer: f64, task_id: impl Into<String>, iteration: usize) -> Self {
        Self {
            mechanism_text: mechanism_text.into(),
            chamfer,
            surrogate_text: None,
            task_id: task_id.into(),
            iteration,
            created_at: 0,
        }
    }

    pub fn with_surrogate(mut self, text: Option<String>) -> Self {
        self.surrogate_text = text;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StoreOutcome {
    Stored { created_at: u64 },
    Rejected(String),
}

impl StoreOutcome {
    pub fn is_stored(&self) -> bool {
        matches!(self, StoreOutcome::Stored { .. })
    }
}

#[derive(Debug, Default)]
struct Inner {
    entries: Vec<MemoryEntry>,
    next_seq: u64,
}

/// Many readers, one writer. Readers always see whole entries.
#[derive(Debug, Default)]
pub struct MemoryRepo {
    inner: RwLock<Inner>,
    journal: Option<(PathBuf, Mutex<File>)>,
}

impl MemoryRepo {
    /// In-memory repository scoped to one run.
    pub fn new() -> Self {
        Self::default()
    }

    /// Repository backed by an append-only JSONL file; existing lines are loaded.
    pub fn open_persistent(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut inner = Inner::default();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: MemoryEntry = serde_json::from_str(&line).map_err(|e| {
                    io::Error::new(io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), i + 1))
                })?;
                inner.next_seq = inner.next_seq.max(entry.created_at + 1);
                inner.entries.push(entry);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { inner: RwLock::new(inner), journal: Some((path, Mutex::new(file))) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.journal.as_ref().map(|(p, _)| p.as_path())
    }

    pub fn len(&self) -> usize {
        self.read().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<MemoryEntry> {
        self.read().entries.clone()
    }

    /// Admits `entry` iff `sim` succeeded. Duplicates are kept.
    pub fn store<T: Scalar>(&self, mut entry: MemoryEntry, sim: &SimResult<T>) -> StoreOutcome {
        if !sim.success {
            return StoreOutcome::Rejected(EXECUTION_GATE.to_string());
        }
        if !(entry.chamfer.is_finite() && entry.chamfer >= 0.0) {
            return StoreOutcome::Rejected(format!("chamfer must be finite and non-negative, got {}", entry.chamfer));
        }
        let mut inner = self.inner.write().unwrap_or_else(|e| e.into_inner());
        entry.created_at = inner.next_seq;
        if let Some((path, file)) = &self.journal {
            let line = serde_json::to_string(&entry).expect("entry serializes");
            let mut f = file.lock().unwrap_or_else(|e| e.into_inner());
            if let Err(e) = writeln!(f, "{line}") {
                return StoreOutcome::Rejected(format!("could not append to {}: {e}", path.display()));
            }
        }
        inner.next_seq += 1;
        inner.entries.push(entry);
        StoreOutcome::Stored { created_at: inner.next_seq - 1 }
    }

    /// The `k` entries with the smallest stored Chamfer, ascending.
    pub fn retrieve_topk(&self, k: usize) -> Vec<MemoryEntry> {
        self.retrieve_topk_by(k, |e| Some(e.chamfer))
    }

    /// Like [`retrieve_topk`](Self::retrieve_topk) but ranked by `score`,
    /// which may rescore entries against a different target. Entries scored
    /// `None` are skipped; returned entries carry their new score.
    pub fn retrieve_topk_by(&self, k: usize, mut score: impl FnMut(&MemoryEntry) -> Option<f64>) -> Vec<MemoryEntry> {
        let entries = self.snapshot();
        let mut scored: Vec<MemoryEntry> = entries
            .into_iter()
            .filter_map(|mut e| {
                let s = score(&e).filter(|s| s.is_finite())?;
                e.chamfer = s;
                Some(e)
            })
            .collect();
        scored.sort_by(|a, b| a.chamfer.total_cmp(&b.chamfer).then(b.created_at.cmp(&a.created_at)));
        scored.truncate(k);
        scored
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }
}

/// The `{memory}` prompt block, or `None` when nothing was retrieved.
pub fn render_memory_block(entries: &[MemoryEntry]) -> Option<String> {
    if entries.is_empty() {
        return None;
    }
    let mut out = String::from("Previously validated mechanisms, closest to the target first:");
    for (i, e) in entries.iter().enumerate() {
        out.push_str(&format!("\n# Memory {} (Chamfer distance: {:.4})\n", i + 1, e.chamfer));
        out.push_str(e.mechanism_text.trim_end());
        if let Some(s) = &e.surrogate_text {
            out.push_str(&format!("\n# Target joint motion: {}", s.replace('\n', "; ")));
        }
    }
    Some(out)
}
