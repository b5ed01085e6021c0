use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    aggregate, classify_scenario, label_prediction, render_table, write_report_jsonl, write_rows, AnalysisError,
    FailureLabel, FailureThresholds, GroupBy, LabelInput, MetricRow, ReportRow, Scenario,
};
use crate::metrics::{acceptance_rate, CodeTokenizer, Scores, Tokenizer};
use crate::telemetry::{load_records, same_line_suffix, validity, InvalidReason, InvocationKind, TelemetryRecord};

/// Headline numbers of an online evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySummary {
    pub total_records: usize,
    pub valid_records: usize,
    pub invalid: BTreeMap<InvalidReason, usize>,
    /// Records where at least one suggestion reached the user.
    pub shown: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    /// Over valid records with stored context.
    pub scenarios: BTreeMap<Scenario, usize>,
    pub not_classifiable: usize,
    /// Over metric rows (one per valid record and model).
    pub failures: BTreeMap<FailureLabel, usize>,
    pub by_language: Vec<ReportRow>,
    pub by_trigger_auto: Vec<ReportRow>,
    pub by_trigger_all: Vec<ReportRow>,
    pub by_model: Vec<ReportRow>,
}

/// One row per prediction of a record, scored against its ground-truth remainder.
pub fn metric_rows_for_record(
    record: &TelemetryRecord,
    tokenizer: &dyn Tokenizer,
    thresholds: &FailureThresholds,
) -> Vec<MetricRow> {
    let truth = record.ground_truth_remainder.as_deref().unwrap_or_default();
    record
        .predictions
        .iter()
        .map(|p| {
            let scores = if p.failed { Scores::ZERO } else { Scores::compute(&p.text, truth, tokenizer) };
            let accepted = !p.failed && record.chosen_text.as_deref() == Some(p.text.as_str());
            let input = LabelInput {
                left_context: record.left_context.as_deref(),
                mid_token: record.mid_token,
                same_line_right: record.right_context.as_deref().map(same_line_suffix),
                prediction: &p.text,
                truth,
                accepted: Some(accepted),
                failed: p.failed,
            };
            let mut row = MetricRow {
                sample_id: record.request_id.clone(),
                model_id: p.model_id.clone(),
                language: record.language.clone(),
                trigger: record.detected_trigger.clone(),
                trigger_kind: Some(record.trigger_kind),
                exact_match: 0.0,
                edit_similarity: 0.0,
                rouge_f1: 0.0,
                bleu4: 0.0,
                meteor: 0.0,
                accepted: Some(accepted),
                labels: label_prediction(&input, &scores, tokenizer, thresholds),
                failed: p.failed,
            };
            row.set_scores(&scores);
            row
        })
        .collect()
}

fn summarize(records: &[TelemetryRecord], thresholds: &FailureThresholds) -> (TelemetrySummary, Vec<MetricRow>) {
    let tokenizer = CodeTokenizer;
    let mut invalid = BTreeMap::new();
    let mut scenarios = BTreeMap::new();
    let mut not_classifiable = 0;
    let mut rows = Vec::new();
    let mut valid_records = 0;
    for record in records {
        let verdict = validity(record);
        if !verdict.valid {
            *invalid.entry(verdict.reason).or_insert(0) += 1;
            continue;
        }
        valid_records += 1;
        match classify_scenario(record) {
            Ok(s) => *scenarios.entry(s).or_insert(0) += 1,
            Err(_) => not_classifiable += 1,
        }
        rows.extend(metric_rows_for_record(record, &tokenizer, thresholds));
    }

    let shown_records = records.iter().filter(|r| !r.suppressed && r.served_texts().next().is_some());
    let (shown, accepted) = shown_records.fold((0u64, 0u64), |(s, a), r| (s + 1, a + u64::from(r.accepted)));

    let mut failures = BTreeMap::new();
    for label in rows.iter().flat_map(|r| &r.labels) {
        *failures.entry(*label).or_insert(0) += 1;
    }
    let auto_rows: Vec<MetricRow> =
        rows.iter().filter(|r| r.trigger_kind == Some(InvocationKind::Automatic)).cloned().collect();

    let summary = TelemetrySummary {
        total_records: records.len(),
        valid_records,
        invalid,
        shown,
        accepted,
        acceptance_rate: acceptance_rate(shown, accepted).expect("accepted records are a subset of shown ones"),
        scenarios,
        not_classifiable,
        failures,
        by_language: aggregate(&rows, GroupBy::Language),
        by_trigger_auto: aggregate(&auto_rows, GroupBy::Trigger),
        by_trigger_all: aggregate(&rows, GroupBy::Trigger),
        by_model: aggregate(&rows, GroupBy::Model),
    };
    (summary, rows)
}

/// Loads an export, scores every valid record and writes the reports into `out_dir`:
/// `summary.json`, `rows.jsonl` and a `.jsonl`/`.txt` pair per breakdown.
pub fn analyze_telemetry(
    export_path: &Path,
    out_dir: &Path,
    thresholds: &FailureThresholds,
) -> Result<TelemetrySummary, AnalysisError> {
    let records = load_records(export_path)?;
    let (summary, rows) = summarize(&records, thresholds);

    let io_err = |path: &Path, source| AnalysisError::Io { path: path.to_path_buf(), source };
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let summary_path = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).map_err(|e| io_err(&summary_path, e.into()))?;
    std::fs::write(&summary_path, json + "\n").map_err(|e| io_err(&summary_path, e))?;
    write_rows(&rows, &out_dir.join("rows.jsonl"))?;
    for (name, report, by) in [
        ("by_language", &summary.by_language, GroupBy::Language),
        ("by_trigger_auto", &summary.by_trigger_auto, GroupBy::Trigger),
        ("by_trigger_all", &summary.by_trigger_all, GroupBy::Trigger),
        ("by_model", &summary.by_model, GroupBy::Model),
    ] {
        write_report_jsonl(report, &out_dir.join(format!("{name}.jsonl")))?;
        let txt = out_dir.join(format!("{name}.txt"));
        std::fs::write(&txt, render_table(report, by)).map_err(|e| io_err(&txt, e))?;
    }
    Ok(summary)
}
