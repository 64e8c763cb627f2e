//! Append-only JSON-lines corpus.
//!
//! Each line is a full [`CorpusRecord`], a gate amendment
//! `{"amend": id, "gate": {...}}`, or a `{"sample_run": {...}}` entry.
//! Gate changes are replayed in order on open. A single writer holds an
//! exclusive lock on `<file>.lock`; readers take snapshots without locking.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::curation::{record_review, CurationError, Disposition, GateRecord, Qoi, ReviewDecision};
use crate::model::{CefrLevel, Emotion};
use crate::sampler::SampleRun;
use crate::textmetrics::MetricReport;
use crate::transcript::{extract_attitude_chain, AttitudeChain, ChainLink, Dialogue, Role};

pub const ID_PREFIX: &str = "dlg-";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("dialogue id `{0}` already exists")]
    DuplicateId(String),
    #[error("no dialogue with id `{0}`")]
    NotFound(String),
    #[error("corpus file is locked by another writer: {0}")]
    Locked(PathBuf),
    #[error("store was opened read-only")]
    ReadOnly,
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("corrupt corpus file at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Curation(#[from] CurationError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    /// Append position, assigned by the store.
    #[serde(default)]
    pub seq: u64,
    pub dialogue: Dialogue,
    pub gate: GateRecord,
    pub chain: AttitudeChain,
    #[serde(default)]
    pub metric_report: Option<MetricReport>,
}

impl CorpusRecord {
    /// Derives the chain from the dialogue.
    pub fn new(dialogue: Dialogue, gate: GateRecord, metric_report: Option<MetricReport>) -> Self {
        let chain = extract_attitude_chain(&dialogue);
        CorpusRecord {
            seq: 0,
            dialogue,
            gate,
            chain,
            metric_report,
        }
    }

    pub fn id(&self) -> &str {
        self.dialogue.id()
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if self.id().trim().is_empty() || self.id().contains(['\n', '/', '\\']) {
            return Err(StoreError::InvalidRecord(format!("unusable id `{}`", self.id())));
        }
        if self.gate.dialogue_id != self.id() {
            return Err(StoreError::InvalidRecord("gate belongs to a different dialogue".into()));
        }
        if self.chain != extract_attitude_chain(&self.dialogue) {
            return Err(StoreError::InvalidRecord("attitude chain does not match the dialogue".into()));
        }
        self.gate.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFilter {
    pub emotion: Option<Emotion>,
    pub cefr: Option<CefrLevel>,
    pub implicit: Option<bool>,
    /// Dialogue has at least one turn by this role.
    pub role_presence: Option<Role>,
    pub disposition: Option<Disposition>,
    pub qoi: Option<Qoi>,
}

impl CorpusFilter {
    pub fn matches(&self, r: &CorpusRecord) -> bool {
        let meta = r.dialogue.meta();
        self.emotion.is_none_or(|e| meta.target_emotion == e)
            && self.cefr.is_none_or(|c| meta.cefr == c)
            && self.implicit.is_none_or(|i| meta.implicit == i)
            && self
                .role_presence
                .is_none_or(|role| r.dialogue.turns_by(role).next().is_some())
            && self.disposition.is_none_or(|d| r.gate.disposition == d)
            && self.qoi.is_none_or(|q| r.gate.qoi == Some(q))
    }
}

#[derive(Serialize)]
struct AmendLine<'a> {
    amend: &'a str,
    gate: &'a GateRecord,
}

#[derive(Serialize)]
struct SampleRunLine<'a> {
    sample_run: &'a SampleRun,
}

struct Writer {
    log: File,
    _lock: File,
}

/// In-memory snapshot of the corpus file, plus the append handle when writable.
pub struct CorpusStore {
    path: PathBuf,
    records: Vec<CorpusRecord>,
    index: HashMap<String, usize>,
    sample_runs: Vec<SampleRun>,
    next_seq: u64,
    max_numeric_id: u64,
    writer: Option<Writer>,
}

fn lock_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".lock");
    PathBuf::from(s)
}

fn numeric_id(id: &str) -> Option<u64> {
    id.strip_prefix(ID_PREFIX)?.parse().ok()
}

impl CorpusStore {
    /// Opens for writing, creating the file if needed.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(lock_path(&path))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(std::fs::TryLockError::WouldBlock) => return Err(StoreError::Locked(path)),
            Err(std::fs::TryLockError::Error(e)) => return Err(e.into()),
        }
        let log = OpenOptions::new().create(true).append(true).read(true).open(&path)?;
        // Drop a torn final line left by an interrupted write.
        let content = std::fs::read(&path)?;
        if !content.is_empty() && !content.ends_with(b"\n") {
            let keep = content.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
            log.set_len(keep as u64)?;
        }
        let mut store = Self::empty(path);
        store.load()?;
        store.writer = Some(Writer { log, _lock: lock });
        Ok(store)
    }

    /// Opens a read-only snapshot; a missing file reads as an empty corpus.
    pub fn open_read_only(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let mut store = Self::empty(path.as_ref().to_path_buf());
        store.load()?;
        Ok(store)
    }

    fn empty(path: PathBuf) -> Self {
        CorpusStore {
            path,
            records: Vec::new(),
            index: HashMap::new(),
            sample_runs: Vec::new(),
            next_seq: 1,
            max_numeric_id: 0,
            writer: None,
        }
    }

    /// Re-reads the file, picking up appends made by the writer.
    pub fn refresh(&mut self) -> Result<(), StoreError> {
        self.load()
    }

    fn load(&mut self) -> Result<(), StoreError> {
        self.records.clear();
        self.index.clear();
        self.sample_runs.clear();
        self.next_seq = 1;
        self.max_numeric_id = 0;
        let bytes = match std::fs::read(&self.path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(()),
            Err(e) => return Err(e.into()),
        };
        let end = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        let complete = std::str::from_utf8(&bytes[..end]).map_err(|e| StoreError::Corrupt {
            line: bytes[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count() + 1,
            reason: "invalid UTF-8".into(),
        })?;
        for (i, line) in complete.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            self.apply_line(line).map_err(|reason| StoreError::Corrupt { line: i + 1, reason })?;
        }
        Ok(())
    }

    fn apply_line(&mut self, line: &str) -> Result<(), String> {
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if let Some(id) = value.get("amend") {
            let id = id.as_str().ok_or("amend must be a string id")?;
            let gate: GateRecord =
                serde_json::from_value(value.get("gate").cloned().ok_or("amendment without gate")?).map_err(|e| e.to_string())?;
            let &pos = self.index.get(id).ok_or_else(|| format!("amendment for unknown id `{id}`"))?;
            self.records[pos].gate.check_transition(&gate).map_err(|e| e.to_string())?;
            self.records[pos].gate = gate;
        } else if let Some(run) = value.get("sample_run") {
            let run: SampleRun = serde_json::from_value(run.clone()).map_err(|e| e.to_string())?;
            self.sample_runs.push(run);
        } else {
            let record: CorpusRecord = serde_json::from_value(value).map_err(|e| e.to_string())?;
            record.validate().map_err(|e| e.to_string())?;
            if self.index.contains_key(record.id()) {
                return Err(format!("duplicate id `{}`", record.id()));
            }
            self.insert(record);
        }
        Ok(())
    }

    fn insert(&mut self, record: CorpusRecord) {
        self.next_seq = self.next_seq.max(record.seq + 1);
        if let Some(n) = numeric_id(record.id()) {
            self.max_numeric_id = self.max_numeric_id.max(n);
        }
        self.index.insert(record.id().to_string(), self.records.len());
        self.records.push(record);
    }

    fn write_line(&mut self, line: &str) -> Result<(), StoreError> {
        let writer = self.writer.as_mut().ok_or(StoreError::ReadOnly)?;
        let mut buf = String::with_capacity(line.len() + 1);
        buf.push_str(line);
        buf.push('\n');
        writer.log.write_all(buf.as_bytes())?;
        writer.log.flush()?;
        writer.log.sync_data()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn is_writable(&self) -> bool {
        self.writer.is_some()
    }

    /// Next unused id of the form `dlg-000001`; never reuses a number seen in the file.
    pub fn next_id(&self) -> String {
        format!("{ID_PREFIX}{:06}", self.max_numeric_id + 1)
    }

    /// Durably appends a record and returns its id.
    pub fn append(&mut self, mut record: CorpusRecord) -> Result<String, StoreError> {
        if self.writer.is_none() {
            return Err(StoreError::ReadOnly);
        }
        if self.index.contains_key(record.id()) {
            return Err(StoreError::DuplicateId(record.id().to_string()));
        }
        record.validate()?;
        record.seq = self.next_seq;
        let line = serde_json::to_string(&record).map_err(|e| StoreError::InvalidRecord(e.to_string()))?;
        self.write_line(&line)?;
        let id = record.id().to_string();
        self.insert(record);
        Ok(id)
    }

    /// Replaces a pending gate with a legal successor, logged as an amendment.
    pub fn update_gate(&mut self, id: &str, gate: GateRecord) -> Result<&CorpusRecord, StoreError> {
        if self.writer.is_none() {
            return Err(StoreError::ReadOnly);
        }
        let &pos = self.index.get(id).ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        self.records[pos].gate.check_transition(&gate)?;
        let line = serde_json::to_string(&AmendLine { amend: id, gate: &gate })
            .map_err(|e| StoreError::InvalidRecord(e.to_string()))?;
        self.write_line(&line)?;
        self.records[pos].gate = gate;
        Ok(&self.records[pos])
    }

    /// Applies a reviewer's decision to a pending record.
    pub fn review(&mut self, id: &str, decision: &ReviewDecision, now: DateTime<Utc>) -> Result<&CorpusRecord, StoreError> {
        let current = self.get(id).ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        let next = record_review(&current.gate, decision, now)?;
        self.update_gate(id, next)
    }

    pub fn append_sample_run(&mut self, run: &SampleRun) -> Result<(), StoreError> {
        let line = serde_json::to_string(&SampleRunLine { sample_run: run })
            .map_err(|e| StoreError::InvalidRecord(e.to_string()))?;
        self.write_line(&line)?;
        self.sample_runs.push(run.clone());
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&CorpusRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    /// All records in append order.
    pub fn records(&self) -> &[CorpusRecord] {
        &self.records
    }

    pub fn sample_runs(&self) -> &[SampleRun] {
        &self.sample_runs
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Matching records in append order.
    pub fn query(&self, filter: &CorpusFilter) -> Vec<&CorpusRecord> {
        self.records.iter().filter(|r| filter.matches(r)).collect()
    }

    /// Earliest-appended record still awaiting review.
    pub fn next_pending(&self) -> Option<&CorpusRecord> {
        self.records.iter().find(|r| r.gate.disposition == Disposition::Pending)
    }

    /// Mines patterns over the records matching `filter`, tagged with its emotion and CEFR level.
    pub fn mine(&self, filter: &CorpusFilter, n: usize, min_support: usize) -> Result<Vec<ChainPattern>, MiningError> {
        let stratum = PatternStratum {
            emotion: filter.emotion,
            cefr: filter.cefr,
        };
        mine_chain_patterns(self.query(filter).into_iter().map(|r| &r.chain), n, min_support, stratum)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternStratum {
    pub emotion: Option<Emotion>,
    pub cefr: Option<CefrLevel>,
}

/// A contiguous (role, attitude) n-gram and its occurrence count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainPattern {
    pub links: Vec<ChainLink>,
    pub support: usize,
    #[serde(flatten)]
    pub stratum: PatternStratum,
}

impl std::fmt::Display for ChainPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let chain = AttitudeChain {
            entries: self.links.clone(),
        };
        write!(f, "{chain}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MiningError {
    #[error("n-gram length must be at least 2, got {0}")]
    InvalidN(usize),
    #[error("min_support must be at least 1")]
    InvalidMinSupport,
}

/// Counts every contiguous n-gram occurrence across `chains`. Sorted by
/// support descending, then by pattern.
pub fn mine_chain_patterns<'a>(
    chains: impl IntoIterator<Item = &'a AttitudeChain>,
    n: usize,
    min_support: usize,
    stratum: PatternStratum,
) -> Result<Vec<ChainPattern>, MiningError> {
    if n < 2 {
        return Err(MiningError::InvalidN(n));
    }
    if min_support < 1 {
        return Err(MiningError::InvalidMinSupport);
    }
    let mut counts: BTreeMap<&[ChainLink], usize> = BTreeMap::new();
    for chain in chains {
        for window in chain.entries.windows(n) {
            *counts.entry(window).or_default() += 1;
        }
    }
    let mut patterns: Vec<ChainPattern> = counts
        .into_iter()
        .filter(|(_, support)| *support >= min_support)
        .map(|(links, support)| ChainPattern {
            links: links.to_vec(),
            support,
            stratum,
        })
        .collect();
    // BTreeMap already yields lexicographic order; the stable sort keeps it within ties.
    patterns.sort_by(|a, b| b.support.cmp(&a.support));
    Ok(patterns)
}
