//! Append-only store of completion events.
//!
//! The journal is a JSONL file holding full [`TelemetryRecord`] snapshots. Updates (feedback,
//! ground truth) append a new snapshot for the same `request_id`; on open the journal is
//! replayed and the last snapshot per id wins.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gateway::ModelPrediction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InvocationKind {
    #[serde(rename = "auto")]
    Automatic,
    #[serde(rename = "manual")]
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ide {
    Intellij,
    Vscode,
    Other,
}

impl Ide {
    /// Lenient mapping of client-reported IDE names.
    pub fn from_client(name: &str) -> Ide {
        let lower = name.to_ascii_lowercase();
        if lower.contains("intellij") || lower.contains("jetbrains") {
            Ide::Intellij
        } else if lower.contains("vscode") || lower.contains("vs code") {
            Ide::Vscode
        } else {
            Ide::Other
        }
    }
}

/// Failure labels that need human judgement. They are never computed, only carried through
/// exports so annotators can fill them in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ManualLabel {
    #[serde(rename = "ME-T1")]
    IncorrectVariable,
    #[serde(rename = "ME-T2")]
    IncorrectFunction,
    #[serde(rename = "ME-T3")]
    IncorrectLiteral,
    #[serde(rename = "ME-T4")]
    IncorrectType,
    #[serde(rename = "ME-S1")]
    WrongParameterCount,
    #[serde(rename = "ME-S2")]
    WrongSemantics,
    #[serde(rename = "ME-S7")]
    FaultySyntax,
    #[serde(rename = "AE-2")]
    InsufficientContext,
    #[serde(rename = "AE-4")]
    TypographicalErrors,
    #[serde(rename = "UO-2")]
    ValidButNotPreferred,
    #[serde(rename = "UO-3")]
    AcceptedButRequiredChange,
}

/// One completion request and everything learned about it afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub request_id: String,
    pub server_timestamp: DateTime<Utc>,
    pub detected_trigger: Option<String>,
    pub language: String,
    /// Every backend's prediction with its inference time, in configuration order.
    pub predictions: Vec<ModelPrediction>,
    /// The suggestion the user picked; `None` when nothing was selected.
    pub chosen_text: Option<String>,
    /// `chosen_text` is one of the served predictions.
    pub accepted: bool,
    /// The invocation line as the developer left it after the feedback delay.
    pub ground_truth_line: Option<String>,
    /// `ground_truth_line` minus the already-typed cursor prefix.
    pub ground_truth_remainder: Option<String>,
    /// The developer rewrote the cursor prefix; the remainder is then the whole line.
    pub prefix_mismatch: bool,
    pub feedback_timestamp: Option<DateTime<Utc>>,
    pub left_len_chars: usize,
    pub right_len_chars: usize,
    /// Present only when the user opted into context sharing.
    pub left_context: Option<String>,
    pub right_context: Option<String>,
    /// Length and SHA-256 of the cursor line's typed prefix, so the remainder can be derived
    /// without storing context text.
    pub cursor_prefix_chars: usize,
    pub cursor_prefix_sha256: String,
    pub mid_token: bool,
    pub trigger_kind: InvocationKind,
    pub ide: Ide,
    pub plugin_version: String,
    /// Smart invocation withheld the models for this request.
    pub suppressed: bool,
    #[serde(default)]
    pub manual_labels: Vec<ManualLabel>,
}

/// Text of the left context's final line, i.e. what is typed on the cursor line.
pub fn cursor_prefix(left_context: &str) -> &str {
    left_context.rsplit('\n').next().unwrap_or_default()
}

/// Same-line part of the right context.
pub fn same_line_suffix(right_context: &str) -> &str {
    right_context.split('\n').next().unwrap_or_default().trim_end_matches('\r')
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Request-time fields of a new record.
#[derive(Debug, Clone)]
pub struct NewRecord<'a> {
    pub request_id: String,
    pub server_timestamp: DateTime<Utc>,
    pub language: &'a str,
    pub left_context: &'a str,
    pub right_context: &'a str,
    pub store_context: bool,
    pub trigger_kind: InvocationKind,
    pub ide: Ide,
    pub plugin_version: &'a str,
}

impl TelemetryRecord {
    pub fn new(req: NewRecord<'_>, predictions: Vec<ModelPrediction>, suppressed: bool) -> Self {
        let prefix = cursor_prefix(req.left_context);
        TelemetryRecord {
            request_id: req.request_id,
            server_timestamp: req.server_timestamp,
            detected_trigger: crate::trigger::detect_trigger(req.left_context).map(|m| m.token.text().to_string()),
            language: req.language.to_string(),
            predictions,
            chosen_text: None,
            accepted: false,
            ground_truth_line: None,
            ground_truth_remainder: None,
            prefix_mismatch: false,
            feedback_timestamp: None,
            left_len_chars: req.left_context.chars().count(),
            right_len_chars: req.right_context.chars().count(),
            left_context: req.store_context.then(|| req.left_context.to_string()),
            right_context: req.store_context.then(|| req.right_context.to_string()),
            cursor_prefix_chars: prefix.chars().count(),
            cursor_prefix_sha256: sha256_hex(prefix),
            mid_token: crate::trigger::is_mid_token(req.left_context),
            trigger_kind: req.trigger_kind,
            ide: req.ide,
            plugin_version: req.plugin_version.to_string(),
            suppressed,
            manual_labels: Vec::new(),
        }
    }

    /// Non-failed, non-empty prediction texts (what the user could have been shown).
    pub fn served_texts(&self) -> impl Iterator<Item = &str> {
        self.predictions.iter().filter(|p| !p.failed && !p.text.is_empty()).map(|p| p.text.as_str())
    }

    /// Stores the final line and derives the remainder by stripping the cursor prefix. When
    /// the line no longer starts with that prefix the whole line becomes the remainder and
    /// `prefix_mismatch` is set.
    pub fn apply_ground_truth(&mut self, line: &str) {
        let line = line.trim_end_matches(['\n', '\r']);
        let stripped = match &self.left_context {
            Some(left) => line.strip_prefix(cursor_prefix(left)),
            None => {
                let split = line.char_indices().nth(self.cursor_prefix_chars).map_or(line.len(), |(i, _)| i);
                let typed = &line[..split];
                let long_enough = typed.chars().count() == self.cursor_prefix_chars;
                (long_enough && sha256_hex(typed) == self.cursor_prefix_sha256).then(|| &line[split..])
            }
        };
        self.ground_truth_line = Some(line.to_string());
        self.prefix_mismatch = stripped.is_none();
        self.ground_truth_remainder = Some(stripped.unwrap_or(line).to_string());
    }

    pub fn apply_choice(&mut self, chosen_text: Option<String>) {
        self.accepted = chosen_text.as_deref().is_some_and(|c| self.served_texts().any(|t| t == c));
        self.chosen_text = chosen_text;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InvalidReason {
    EmptyGroundTruth,
    EmptyPredictions,
    Ok,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    pub valid: bool,
    pub reason: InvalidReason,
}

/// A record counts for evaluation when the developer wrote something after the cursor and at
/// least one model produced a non-empty line.
pub fn validity(record: &TelemetryRecord) -> ValidityVerdict {
    let reason = if record.ground_truth_remainder.as_deref().is_none_or(|r| r.trim().is_empty()) {
        InvalidReason::EmptyGroundTruth
    } else if !record.predictions.iter().any(|p| !p.text.trim().is_empty()) {
        InvalidReason::EmptyPredictions
    } else {
        InvalidReason::Ok
    };
    ValidityVerdict { valid: reason == InvalidReason::Ok, reason }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("request id {0} already recorded")]
    Duplicate(String),
    #[error("unknown request id {0}")]
    UnknownId(String),
}

#[derive(Debug, Clone, Default)]
pub struct ExportFilter {
    pub language: Option<String>,
    pub trigger: Option<String>,
    pub valid_only: bool,
}

impl ExportFilter {
    pub fn matches(&self, record: &TelemetryRecord) -> bool {
        self.language.as_deref().is_none_or(|l| l.eq_ignore_ascii_case(&record.language))
            && self.trigger.as_deref().is_none_or(|t| record.detected_trigger.as_deref() == Some(t))
            && (!self.valid_only || validity(record).valid)
    }
}

#[derive(Debug, Default)]
struct Index {
    records: Vec<TelemetryRecord>,
    by_id: HashMap<String, usize>,
}

#[derive(Debug)]
pub struct TelemetryStore {
    path: PathBuf,
    index: RwLock<Index>,
    writer: Mutex<BufWriter<File>>,
}

impl TelemetryStore {
    /// Opens (or creates) the journal at `path` and rebuilds the index. A torn final line
    /// without a trailing newline is cut off; any other malformed line is an error.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| StoreError::Io { path: path.clone(), source };
        let file = OpenOptions::new().create(true).read(true).append(true).open(&path).map_err(io_err)?;
        let text = std::fs::read_to_string(&path).map_err(io_err)?;

        let mut index = Index::default();
        let mut offset = 0;
        for (n, raw) in text.split_inclusive('\n').enumerate() {
            let line_start = offset;
            offset += raw.len();
            if raw.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<TelemetryRecord>(raw) {
                Ok(record) => index.upsert(record),
                Err(_) if !raw.ends_with('\n') => {
                    tracing::warn!(path = %path.display(), line = n + 1, "dropping torn journal tail");
                    file.set_len(line_start as u64).map_err(io_err)?;
                }
                Err(source) => return Err(StoreError::Parse { path: path.clone(), line: n + 1, source }),
            }
        }
        Ok(TelemetryStore { path, index: RwLock::new(index), writer: Mutex::new(BufWriter::new(file)) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn write_line(&self, writer: &mut BufWriter<File>, record: &TelemetryRecord) -> Result<(), StoreError> {
        let io_err = |source| StoreError::Io { path: self.path.clone(), source };
        serde_json::to_writer(&mut *writer, record).map_err(|e| io_err(e.into()))?;
        writer.write_all(b"\n").map_err(io_err)?;
        writer.flush().map_err(io_err)
    }

    pub fn append(&self, record: TelemetryRecord) -> Result<(), StoreError> {
        let mut writer = self.writer.lock().expect("telemetry writer poisoned");
        if self.index.read().expect("telemetry index poisoned").by_id.contains_key(&record.request_id) {
            return Err(StoreError::Duplicate(record.request_id));
        }
        self.write_line(&mut writer, &record)?;
        self.index.write().expect("telemetry index poisoned").upsert(record);
        Ok(())
    }

    /// Applies `change` to the stored record and journals the new snapshot.
    pub fn update<F>(&self, request_id: &str, change: F) -> Result<TelemetryRecord, StoreError>
    where
        F: FnOnce(&mut TelemetryRecord),
    {
        let mut writer = self.writer.lock().expect("telemetry writer poisoned");
        let mut record = self.get(request_id).ok_or_else(|| StoreError::UnknownId(request_id.to_string()))?;
        change(&mut record);
        self.write_line(&mut writer, &record)?;
        self.index.write().expect("telemetry index poisoned").upsert(record.clone());
        Ok(record)
    }

    pub fn resolve_ground_truth(&self, request_id: &str, ground_truth_line: &str) -> Result<TelemetryRecord, StoreError> {
        self.update(request_id, |r| r.apply_ground_truth(ground_truth_line))
    }

    pub fn get(&self, request_id: &str) -> Option<TelemetryRecord> {
        let index = self.index.read().expect("telemetry index poisoned");
        index.by_id.get(request_id).map(|&i| index.records[i].clone())
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("telemetry index poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of all records in first-append order.
    pub fn records(&self) -> Vec<TelemetryRecord> {
        self.index.read().expect("telemetry index poisoned").records.clone()
    }

    pub fn export_jsonl(&self, filter: &ExportFilter, path: &Path) -> Result<usize, StoreError> {
        let selected: Vec<TelemetryRecord> = self.records().into_iter().filter(|r| filter.matches(r)).collect();
        write_records(&selected, path)?;
        Ok(selected.len())
    }
}

impl Index {
    fn upsert(&mut self, record: TelemetryRecord) {
        match self.by_id.get(&record.request_id) {
            Some(&i) => self.records[i] = record,
            None => {
                self.by_id.insert(record.request_id.clone(), self.records.len());
                self.records.push(record);
            }
        }
    }
}

pub fn write_records(records: &[TelemetryRecord], path: &Path) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io { path: path.to_path_buf(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(|e| io_err(e.into()))?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Reads an export (or a journal, keeping the last snapshot per id).
pub fn load_records(path: &Path) -> Result<Vec<TelemetryRecord>, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io { path: path.to_path_buf(), source })?;
    let mut index = Index::default();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line)
            .map_err(|source| StoreError::Parse { path: path.to_path_buf(), line: n + 1, source })?;
        index.upsert(record);
    }
    Ok(index.records)
}
