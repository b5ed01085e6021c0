//! Similarity metrics between a predicted line and its ground truth.
//!
//! Text-level metrics (`exact_match`, `edit_similarity`) work on characters. The token-level
//! ones (`rouge_l`, `bleu4`, `meteor`) take [`TokenSeq`]s so every model is scored through the
//! same tokenizer.

mod distance;
mod meteor;
mod tokenizer;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use distance::{lcs_len, levenshtein};
pub use meteor::{meteor, meteor_alignment, Alignment};
pub use tokenizer::{tokenize, CodeTokenizer, TokenSeq, Tokenizer, WhitespaceTokenizer};

const BLEU_MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        RougeScore { precision, recall, f1 }
    }
}

/// 1 when the strings agree after trimming outer whitespace.
pub fn exact_match(prediction: &str, truth: &str) -> u8 {
    u8::from(prediction.trim() == truth.trim())
}

/// `1 - levenshtein / max_len` over characters of the trimmed strings; 1 for two empty
/// strings. Trimming matches [`exact_match`], so an exact match always has similarity 1.
pub fn edit_similarity(prediction: &str, truth: &str) -> f64 {
    let p: Vec<char> = prediction.trim().chars().collect();
    let t: Vec<char> = truth.trim().chars().collect();
    let longest = p.len().max(t.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&p, &t) as f64 / longest as f64
}

pub fn rouge_l(prediction: &TokenSeq, truth: &TokenSeq) -> RougeScore {
    let common = lcs_len(prediction, truth) as f64;
    let ratio = |len: usize| if len == 0 { 0.0 } else { common / len as f64 };
    RougeScore::from_pr(ratio(prediction.len()), ratio(truth.len()))
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Sentence-level BLEU.
///
/// The maximum order is clipped to `min(4, |truth|, |prediction|)`. Orders two and up use
/// add-one smoothing so an identical pair always scores 1.
pub fn bleu4(prediction: &TokenSeq, truth: &TokenSeq) -> f64 {
    let max_order = BLEU_MAX_ORDER.min(truth.len()).min(prediction.len());
    if max_order == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_order {
        let truth_counts = ngram_counts(truth, n);
        let matched: usize = ngram_counts(prediction, n)
            .into_iter()
            .map(|(gram, count)| count.min(truth_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        let total = prediction.len() + 1 - n;
        let precision = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        if precision == 0.0 {
            return 0.0;
        }
        log_sum += precision.ln();
    }
    let brevity = (1.0 - truth.len() as f64 / prediction.len() as f64).exp().min(1.0);
    brevity * (log_sum / max_order as f64).exp()
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("accepted count {accepted} exceeds shown count {shown}")]
pub struct AcceptanceError {
    pub shown: u64,
    pub accepted: u64,
}

/// Fraction of shown completions that were accepted; 0 when nothing was shown.
pub fn acceptance_rate(shown: u64, accepted: u64) -> Result<f64, AcceptanceError> {
    if accepted > shown {
        return Err(AcceptanceError { shown, accepted });
    }
    Ok(if shown == 0 { 0.0 } else { accepted as f64 / shown as f64 })
}

/// All five text metrics for one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub exact_match: f64,
    pub edit_similarity: f64,
    pub rouge: RougeScore,
    pub bleu4: f64,
    pub meteor: f64,
}

impl Scores {
    pub const ZERO: Scores = Scores {
        exact_match: 0.0,
        edit_similarity: 0.0,
        rouge: RougeScore { precision: 0.0, recall: 0.0, f1: 0.0 },
        bleu4: 0.0,
        meteor: 0.0,
    };

    pub fn compute(prediction: &str, truth: &str, tokenizer: &dyn Tokenizer) -> Scores {
        let p = tokenizer.tokenize(prediction);
        let t = tokenizer.tokenize(truth);
        Scores {
            exact_match: f64::from(exact_match(prediction, truth)),
            edit_similarity: edit_similarity(prediction, truth),
            rouge: rouge_l(&p, &t),
            bleu4: bleu4(&p, &t),
            meteor: meteor(&p, &t),
        }
    }
}
