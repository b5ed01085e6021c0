//! Offline evaluation, report aggregation, usage-scenario classification and heuristic
//! failure labelling.

mod heuristics;
mod offline;
mod online;
mod report;
mod scenario;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::metrics::Scores;
use crate::telemetry::{InvocationKind, StoreError};

pub use heuristics::{detect_failures, label_prediction, FailureThresholds, LabelInput};
pub use offline::{oracle_gateway, run_offline_eval, DEFAULT_EVAL_CONCURRENCY};
pub use online::{analyze_telemetry, metric_rows_for_record, TelemetrySummary};
pub use report::{aggregate, read_rows, render_table, write_report_jsonl, write_rows, GroupBy, ReportRow};
pub use scenario::{classify_scenario, NotClassifiable, Scenario};

/// Automatically computable subset of the failure taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureLabel {
    MidTokenInvocation,
    LoopedRepetition,
    CopiedInputContext,
    EarlyTermination,
    LateTermination,
    CorrectNotAccepted,
    RedundantInvocation,
}

impl FailureLabel {
    pub const ALL: [FailureLabel; 7] = [
        FailureLabel::MidTokenInvocation,
        FailureLabel::LoopedRepetition,
        FailureLabel::CopiedInputContext,
        FailureLabel::EarlyTermination,
        FailureLabel::LateTermination,
        FailureLabel::CorrectNotAccepted,
        FailureLabel::RedundantInvocation,
    ];

    /// Taxonomy code of the label.
    pub fn code(self) -> &'static str {
        match self {
            FailureLabel::MidTokenInvocation => "AE-1",
            FailureLabel::LoopedRepetition => "ME-S5",
            FailureLabel::CopiedInputContext => "ME-S6",
            FailureLabel::EarlyTermination => "ME-S3",
            FailureLabel::LateTermination => "ME-S4",
            FailureLabel::CorrectNotAccepted => "UO-1",
            FailureLabel::RedundantInvocation => "AE-3",
        }
    }
}

impl fmt::Display for FailureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Scores of one prediction against one ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub sample_id: String,
    pub model_id: String,
    pub language: String,
    pub trigger: Option<String>,
    /// Present for online rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_kind: Option<InvocationKind>,
    pub exact_match: f64,
    pub edit_similarity: f64,
    pub rouge_f1: f64,
    pub bleu4: f64,
    pub meteor: f64,
    /// `None` when no acceptance data exists (offline rows).
    pub accepted: Option<bool>,
    #[serde(default)]
    pub labels: BTreeSet<FailureLabel>,
    /// The backend errored or timed out; all metrics are zero.
    #[serde(default)]
    pub failed: bool,
}

impl MetricRow {
    pub(crate) fn set_scores(&mut self, scores: &Scores) {
        self.exact_match = scores.exact_match;
        self.edit_similarity = scores.edit_similarity;
        self.rouge_f1 = scores.rouge.f1;
        self.bleu4 = scores.bleu4;
        self.meteor = scores.meteor;
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("every backend failed on every sample; are the backends reachable?")]
    AllBackendsFailed,
    #[error(transparent)]
    Store(#[from] StoreError),
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
}
