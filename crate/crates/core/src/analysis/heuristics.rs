use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::FailureLabel;
use crate::gateway::ModelPrediction;
use crate::metrics::{CodeTokenizer, Scores, Tokenizer};
use crate::telemetry::{same_line_suffix, TelemetryRecord};

/// Calibrated thresholds for the failure heuristics. The defaults approximate labels that
/// were originally assigned by human annotators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FailureThresholds {
    /// Consecutive occurrences of an n-gram that count as a loop.
    pub repeat_count: usize,
    pub min_ngram: usize,
    /// Shortest verbatim substring of the left context that counts as copying.
    pub copy_min_chars: usize,
    /// How far back into the left context copying is searched, in chars.
    pub copy_window_chars: usize,
    pub early_ratio: f64,
    pub late_ratio: f64,
    pub early_precision_gate: f64,
    pub late_recall_gate: f64,
}

impl Default for FailureThresholds {
    fn default() -> Self {
        FailureThresholds {
            repeat_count: 3,
            min_ngram: 2,
            copy_min_chars: 10,
            copy_window_chars: 200,
            early_ratio: 0.5,
            late_ratio: 1.5,
            early_precision_gate: 0.8,
            late_recall_gate: 0.8,
        }
    }
}

/// Everything the heuristics look at for one prediction. Context-dependent checks are skipped
/// when the context is absent.
#[derive(Debug, Clone, Copy)]
pub struct LabelInput<'a> {
    pub left_context: Option<&'a str>,
    pub mid_token: bool,
    pub same_line_right: Option<&'a str>,
    pub prediction: &'a str,
    /// The comparand: ground-truth remainder online, masked target offline.
    pub truth: &'a str,
    /// Whether this prediction was the one the user picked; `None` offline.
    pub accepted: Option<bool>,
    pub failed: bool,
}

/// Labels for one prediction given already computed scores.
pub fn label_prediction(
    input: &LabelInput<'_>,
    scores: &Scores,
    tokenizer: &dyn Tokenizer,
    thresholds: &FailureThresholds,
) -> BTreeSet<FailureLabel> {
    let mut labels = BTreeSet::new();
    if input.mid_token {
        labels.insert(FailureLabel::MidTokenInvocation);
    }
    if input.failed {
        return labels;
    }

    let pred_tokens = tokenizer.tokenize(input.prediction);
    let truth_tokens = tokenizer.tokenize(input.truth);
    if has_loop(&pred_tokens, thresholds.min_ngram, thresholds.repeat_count) {
        labels.insert(FailureLabel::LoopedRepetition);
    }
    if let Some(left) = input.left_context {
        if scores.exact_match == 0.0
            && copies_context(input.prediction, left, thresholds.copy_min_chars, thresholds.copy_window_chars)
        {
            labels.insert(FailureLabel::CopiedInputContext);
        }
    }

    let (p, t) = (pred_tokens.len() as f64, truth_tokens.len() as f64);
    if p < thresholds.early_ratio * t && scores.rouge.precision >= thresholds.early_precision_gate {
        labels.insert(FailureLabel::EarlyTermination);
    }
    if t > 0.0 && p > thresholds.late_ratio * t && scores.rouge.recall >= thresholds.late_recall_gate {
        labels.insert(FailureLabel::LateTermination);
    }
    if scores.exact_match == 1.0 && input.accepted == Some(false) {
        labels.insert(FailureLabel::CorrectNotAccepted);
    }
    if let Some(right) = input.same_line_right {
        let truth = input.truth.trim();
        if !truth.is_empty() && right.trim_start().starts_with(truth) {
            labels.insert(FailureLabel::RedundantInvocation);
        }
    }
    labels
}

/// Heuristic labels for one prediction of a record with resolved ground truth.
pub fn detect_failures(
    record: &TelemetryRecord,
    prediction: &ModelPrediction,
    thresholds: &FailureThresholds,
) -> BTreeSet<FailureLabel> {
    let truth = record.ground_truth_remainder.as_deref().unwrap_or_default();
    let tokenizer = CodeTokenizer;
    let scores = if prediction.failed { Scores::ZERO } else { Scores::compute(&prediction.text, truth, &tokenizer) };
    let input = LabelInput {
        left_context: record.left_context.as_deref(),
        mid_token: record.mid_token,
        same_line_right: record.right_context.as_deref().map(same_line_suffix),
        prediction: &prediction.text,
        truth,
        accepted: Some(record.chosen_text.as_deref() == Some(prediction.text.as_str())),
        failed: prediction.failed,
    };
    label_prediction(&input, &scores, &tokenizer, thresholds)
}

/// Some n-gram with `n >= min_n` occurs `repeats` times back to back.
fn has_loop(tokens: &[String], min_n: usize, repeats: usize) -> bool {
    let repeats = repeats.max(2);
    let min_n = min_n.max(1);
    (min_n..=tokens.len() / repeats).any(|n| {
        (0..=tokens.len() - n * repeats).any(|start| {
            let first = &tokens[start..start + n];
            (1..repeats).all(|k| &tokens[start + k * n..start + (k + 1) * n] == first)
        })
    })
}

/// The prediction contains a `min_chars`-long verbatim substring of the last `window` chars of
/// the left context.
fn copies_context(prediction: &str, left: &str, min_chars: usize, window: usize) -> bool {
    let min_chars = min_chars.max(1);
    let tail_start = left.char_indices().rev().nth(window.saturating_sub(1)).map_or(0, |(i, _)| i);
    let tail = &left[tail_start..];
    let starts: Vec<usize> = prediction.char_indices().map(|(i, _)| i).chain([prediction.len()]).collect();
    starts.windows(min_chars + 1).any(|w| tail.contains(&prediction[w[0]..w[min_chars]]))
}
