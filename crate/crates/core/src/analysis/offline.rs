use std::collections::HashMap;
use std::sync::Arc;

use futures::stream::{self, StreamExt};

use super::{label_prediction, AnalysisError, FailureThresholds, LabelInput, MetricRow};
use crate::benchmark::BenchmarkSample;
use crate::gateway::{Backend, BackendConfig, Decoding, Gateway, MockBackend, MockBehavior};
use crate::metrics::{CodeTokenizer, Scores};
use crate::trigger::is_mid_token;

pub const DEFAULT_EVAL_CONCURRENCY: usize = 16;

/// Queries every backend for every sample and scores each prediction against the masked
/// target. Rows follow dataset order, then backend configuration order.
pub async fn run_offline_eval(
    samples: &[BenchmarkSample],
    gateway: &Gateway,
    concurrency: usize,
    thresholds: &FailureThresholds,
) -> Result<Vec<MetricRow>, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::EmptyDataset);
    }
    let tokenizer = CodeTokenizer;
    let per_sample: Vec<Vec<MetricRow>> = stream::iter(samples)
        .map(|sample| async move {
            let predictions = gateway.request_completions(&sample.left_context, &sample.right_context).await;
            predictions
                .into_iter()
                .map(|p| {
                    let scores =
                        if p.failed { Scores::ZERO } else { Scores::compute(&p.text, &sample.target, &tokenizer) };
                    let input = LabelInput {
                        left_context: Some(&sample.left_context),
                        mid_token: is_mid_token(&sample.left_context),
                        same_line_right: None,
                        prediction: &p.text,
                        truth: &sample.target,
                        accepted: None,
                        failed: p.failed,
                    };
                    let mut row = MetricRow {
                        sample_id: sample.sample_id.clone(),
                        model_id: p.model_id.clone(),
                        language: sample.language.name().to_string(),
                        trigger: sample.trigger.map(|t| t.text().to_string()),
                        trigger_kind: None,
                        exact_match: 0.0,
                        edit_similarity: 0.0,
                        rouge_f1: 0.0,
                        bleu4: 0.0,
                        meteor: 0.0,
                        accepted: None,
                        labels: label_prediction(&input, &scores, &tokenizer, thresholds),
                        failed: p.failed,
                    };
                    row.set_scores(&scores);
                    row
                })
                .collect()
        })
        .buffered(concurrency.max(1))
        .collect()
        .await;
    let rows: Vec<MetricRow> = per_sample.into_iter().flatten().collect();
    if rows.iter().all(|r| r.failed) {
        return Err(AnalysisError::AllBackendsFailed);
    }
    Ok(rows)
}

/// A single backend that answers every sample with its own masked target.
pub fn oracle_gateway(samples: &[BenchmarkSample]) -> Gateway {
    let table: HashMap<(String, String), String> = samples
        .iter()
        .map(|s| ((s.left_context.clone(), s.right_context.clone()), s.target.clone()))
        .collect();
    let config = BackendConfig::new("oracle", "mock://oracle".parse().expect("static url"), Decoding::BeamWidth(1));
    let backend: Arc<dyn Backend> = Arc::new(MockBackend::new(MockBehavior::Lookup(table)));
    Gateway::with_backends(vec![(config, backend)]).expect("single valid backend")
}
