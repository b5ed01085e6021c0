use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, MetricRow};

const NO_TRIGGER: &str = "(none)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Language,
    Trigger,
    Model,
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupBy::Language => "language",
            GroupBy::Trigger => "trigger",
            GroupBy::Model => "model",
        })
    }
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "language" => Ok(GroupBy::Language),
            "trigger" => Ok(GroupBy::Trigger),
            "model" => Ok(GroupBy::Model),
            other => Err(format!("unknown grouping {other:?} (expected language, trigger or model)")),
        }
    }
}

/// Mean metrics of one model within one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub group: String,
    pub model_id: String,
    pub n: usize,
    pub exact_match: f64,
    pub edit_similarity: f64,
    pub rouge_f1: f64,
    pub bleu4: f64,
    pub meteor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
}

fn group_key(row: &MetricRow, by: GroupBy) -> &str {
    match by {
        GroupBy::Language => &row.language,
        GroupBy::Trigger => row.trigger.as_deref().unwrap_or(NO_TRIGGER),
        GroupBy::Model => &row.model_id,
    }
}

/// Order-independent mean: values are summed in sorted order.
fn mean(rows: &[&MetricRow], metric: fn(&MetricRow) -> f64) -> f64 {
    let mut values: Vec<f64> = rows.iter().map(|r| metric(r)).collect();
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean of every metric per (group, model). Groups are ordered by row count, largest first,
/// ties broken by name; models within a group by id.
pub fn aggregate(rows: &[MetricRow], by: GroupBy) -> Vec<ReportRow> {
    let mut groups: BTreeMap<&str, BTreeMap<&str, Vec<&MetricRow>>> = BTreeMap::new();
    for row in rows {
        groups.entry(group_key(row, by)).or_default().entry(&row.model_id).or_default().push(row);
    }
    let mut ordered: Vec<(&str, BTreeMap<&str, Vec<&MetricRow>>)> = groups.into_iter().collect();
    ordered.sort_by(|(a_name, a), (b_name, b)| {
        let count = |g: &BTreeMap<&str, Vec<&MetricRow>>| g.values().map(Vec::len).sum::<usize>();
        count(b).cmp(&count(a)).then_with(|| a_name.cmp(b_name))
    });

    ordered
        .into_iter()
        .flat_map(|(group, models)| {
            models.into_iter().map(move |(model_id, members)| {
                let judged: Vec<bool> = members.iter().filter_map(|r| r.accepted).collect();
                let acceptance_rate = (!judged.is_empty())
                    .then(|| judged.iter().filter(|&&a| a).count() as f64 / judged.len() as f64);
                ReportRow {
                    group: group.to_string(),
                    model_id: model_id.to_string(),
                    n: members.len(),
                    exact_match: mean(&members, |r| r.exact_match),
                    edit_similarity: mean(&members, |r| r.edit_similarity),
                    rouge_f1: mean(&members, |r| r.rouge_f1),
                    bleu4: mean(&members, |r| r.bleu4),
                    meteor: mean(&members, |r| r.meteor),
                    acceptance_rate,
                }
            })
        })
        .collect()
}

/// Aligned plain-text table of a report.
pub fn render_table(report: &[ReportRow], by: GroupBy) -> String {
    // Grouping by model already puts the model id in the first column.
    let model_col = by != GroupBy::Model;
    let mut header: Vec<String> = vec![by.to_string()];
    if model_col {
        header.push("model".into());
    }
    header.extend(["n", "exact", "edit_sim", "rouge_l", "bleu4", "meteor", "accept"].map(String::from));
    let labels = if model_col { 2 } else { 1 };
    let body: Vec<Vec<String>> = report
        .iter()
        .map(|r| {
            let mut row = vec![r.group.clone()];
            if model_col {
                row.push(r.model_id.clone());
            }
            row.extend([
                r.n.to_string(),
                format!("{:.4}", r.exact_match),
                format!("{:.4}", r.edit_similarity),
                format!("{:.4}", r.rouge_f1),
                format!("{:.4}", r.bleu4),
                format!("{:.4}", r.meteor),
                r.acceptance_rate.map_or_else(|| "-".to_string(), |a| format!("{a:.4}")),
            ]);
            row
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| std::iter::once(&header).chain(&body).map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    for row in std::iter::once(&header).chain(&body) {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| if c < labels { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<(), AnalysisError> {
    let io_err = |source| AnalysisError::Io { path: path.to_path_buf(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| io_err(e.into()))?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_report_jsonl(report: &[ReportRow], path: &Path) -> Result<(), AnalysisError> {
    write_jsonl(report, path)
}

pub fn write_rows(rows: &[MetricRow], path: &Path) -> Result<(), AnalysisError> {
    write_jsonl(rows, path)
}

pub fn read_rows(path: &Path) -> Result<Vec<MetricRow>, AnalysisError> {
    let io_err = |source| AnalysisError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(&line)
                .map_err(|source| AnalysisError::Parse { path: path.to_path_buf(), line: n + 1, source })?,
        );
    }
    Ok(rows)
}
