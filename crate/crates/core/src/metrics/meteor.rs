//! METEOR with exact unigram matching.
//!
//! The alignment maximises the number of matched tokens and, among maximum alignments, uses
//! the fewest chunks (runs that are contiguous and in the same order on both sides). Picking
//! the fewest chunks is a minimum common string partition problem, which is NP-hard, so the
//! exact search is bounded and falls back to a longest-common-run greedy when the state
//! space gets too large. Line completions are short and stay on the exact path.

use std::collections::{HashMap, HashSet};

use super::TokenSeq;

const ALPHA: f64 = 0.9;
const BETA: f64 = 3.0;
const GAMMA: f64 = 0.5;

/// Upper bound on memoised search states before switching to the greedy alignment.
const EXACT_STATE_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alignment {
    pub matches: usize,
    pub chunks: usize,
    /// False when the search budget ran out and the greedy alignment was used.
    pub exact: bool,
}

pub fn meteor(prediction: &TokenSeq, truth: &TokenSeq) -> f64 {
    let Alignment { matches, chunks, .. } = meteor_alignment(prediction, truth);
    if matches == 0 {
        return 0.0;
    }
    let m = matches as f64;
    let precision = m / prediction.len() as f64;
    let recall = m / truth.len() as f64;
    let f_mean = precision * recall / (ALPHA * recall + (1.0 - ALPHA) * precision);
    let penalty = if chunks > 1 { GAMMA * (chunks as f64 / m).powf(BETA) } else { 0.0 };
    f_mean * (1.0 - penalty)
}

pub fn meteor_alignment(prediction: &[String], truth: &[String]) -> Alignment {
    let max_matches = max_matches(prediction, truth);
    if max_matches == 0 {
        return Alignment { matches: 0, chunks: 0, exact: true };
    }
    let mut search = ExactSearch::new(prediction, truth);
    match search.min_chunks(0, None) {
        Some(chunks) => Alignment { matches: max_matches, chunks, exact: true },
        None => Alignment { matches: max_matches, chunks: greedy_chunks(prediction, truth), exact: false },
    }
}

fn max_matches(a: &[String], b: &[String]) -> usize {
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for t in a {
        counts.entry(t).or_default().0 += 1;
    }
    for t in b {
        counts.entry(t).or_default().1 += 1;
    }
    counts.values().map(|&(x, y)| x.min(y)).sum()
}

/// Memoised search over prediction positions. Every token type must end up matched
/// `min(count_pred, count_truth)` times, which bounds how often a position may be skipped.
struct ExactSearch<'a> {
    prediction: &'a [String],
    truth: &'a [String],
    /// Truth positions carrying each prediction token, indexed by prediction position.
    candidates: Vec<Vec<usize>>,
    /// Dense token-type id of each prediction position.
    type_of: Vec<usize>,
    quota: Vec<usize>,
    remaining_pred: Vec<Vec<usize>>,
    used: Vec<bool>,
    matched_per_type: Vec<usize>,
    memo: HashMap<(usize, Vec<u64>, Option<usize>), Option<usize>>,
    exhausted: bool,
}

impl<'a> ExactSearch<'a> {
    fn new(prediction: &'a [String], truth: &'a [String]) -> Self {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let type_of: Vec<usize> = prediction
            .iter()
            .map(|t| {
                let next = ids.len();
                *ids.entry(t.as_str()).or_insert(next)
            })
            .collect();
        let n_types = ids.len();
        let mut truth_count = vec![0usize; n_types];
        for t in truth {
            if let Some(&id) = ids.get(t.as_str()) {
                truth_count[id] += 1;
            }
        }
        let mut pred_count = vec![0usize; n_types];
        for &id in &type_of {
            pred_count[id] += 1;
        }
        let quota = (0..n_types).map(|id| pred_count[id].min(truth_count[id])).collect();
        // remaining_pred[i][type] = occurrences of `type` at prediction positions >= i
        let mut remaining_pred = vec![vec![0usize; n_types]; prediction.len() + 1];
        for i in (0..prediction.len()).rev() {
            remaining_pred[i] = remaining_pred[i + 1].clone();
            remaining_pred[i][type_of[i]] += 1;
        }
        let candidates = prediction
            .iter()
            .map(|p| truth.iter().enumerate().filter(|(_, t)| *t == p).map(|(j, _)| j).collect())
            .collect();
        ExactSearch {
            prediction,
            truth,
            candidates,
            type_of,
            quota,
            remaining_pred,
            used: vec![false; truth.len()],
            matched_per_type: vec![0; n_types],
            memo: HashMap::new(),
            exhausted: false,
        }
    }

    fn used_key(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.truth.len().div_ceil(64)];
        for (j, &u) in self.used.iter().enumerate() {
            if u {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        words
    }

    /// Fewest chunks for positions `i..`, given that position `i - 1` was matched to `prev`.
    /// `None` means infeasible or, when `self.exhausted` is set, that the budget ran out.
    fn min_chunks(&mut self, i: usize, prev: Option<usize>) -> Option<usize> {
        if self.exhausted {
            return None;
        }
        if i == self.prediction.len() {
            return Some(0);
        }
        let key = (i, self.used_key(), prev);
        if let Some(&cached) = self.memo.get(&key) {
            return cached;
        }
        if self.memo.len() >= EXACT_STATE_BUDGET {
            self.exhausted = true;
            return None;
        }

        let ty = self.type_of[i];
        let still_needed = self.quota[ty] - self.matched_per_type[ty];
        let mut best: Option<usize> = None;

        if still_needed < self.remaining_pred[i][ty] {
            best = self.min_chunks(i + 1, None);
        }
        if still_needed > 0 {
            for k in 0..self.candidates[i].len() {
                let j = self.candidates[i][k];
                if self.used[j] {
                    continue;
                }
                let opens_chunk = usize::from(prev.is_none_or(|p| p + 1 != j));
                self.used[j] = true;
                self.matched_per_type[ty] += 1;
                let rest = self.min_chunks(i + 1, Some(j));
                self.used[j] = false;
                self.matched_per_type[ty] -= 1;
                if let Some(rest) = rest {
                    let total = rest + opens_chunk;
                    best = Some(best.map_or(total, |b| b.min(total)));
                }
            }
        }
        if self.exhausted {
            return None;
        }
        self.memo.insert(key, best);
        best
    }
}

/// Repeatedly aligns the longest run common to the unused parts of both sides.
fn greedy_chunks(prediction: &[String], truth: &[String]) -> usize {
    let mut used_p = vec![false; prediction.len()];
    let mut used_t = vec![false; truth.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..prediction.len() {
            for j in 0..truth.len() {
                let mut len = 0;
                while i + len < prediction.len()
                    && j + len < truth.len()
                    && !used_p[i + len]
                    && !used_t[j + len]
                    && prediction[i + len] == truth[j + len]
                {
                    len += 1;
                }
                if len > 0 && best.is_none_or(|(_, _, l)| len > l) {
                    best = Some((i, j, len));
                }
            }
        }
        let Some((i, j, len)) = best else { break };
        for k in 0..len {
            used_p[i + k] = true;
            used_t[j + k] = true;
            pairs.push((i + k, j + k));
        }
    }
    count_chunks(&mut pairs)
}

fn count_chunks(pairs: &mut [(usize, usize)]) -> usize {
    pairs.sort_unstable();
    let starts: HashSet<(usize, usize)> = pairs.iter().copied().collect();
    pairs.iter().filter(|&&(i, j)| i == 0 || j == 0 || !starts.contains(&(i - 1, j - 1))).count()
}
