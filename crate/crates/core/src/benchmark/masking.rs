use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{BenchmarkSample, CorpusFile, Strategy};
use crate::trigger::detect_trigger;

/// Byte offsets of one line: `[start, content_end)` is the content without its terminator,
/// `next` is where the following line starts.
#[derive(Debug, Clone, Copy)]
struct LineSpan {
    start: usize,
    content_end: usize,
    next: usize,
}

fn line_spans(text: &str) -> Vec<LineSpan> {
    let mut spans = Vec::new();
    let mut start = 0;
    while start < text.len() {
        let (content_end, next) = match text[start..].find('\n') {
            Some(off) => {
                let nl = start + off;
                let end = if text[..nl].ends_with('\r') { nl - 1 } else { nl };
                (end, nl + 1)
            }
            None => (text.len(), text.len()),
        };
        spans.push(LineSpan { start, content_end, next });
        start = next;
    }
    spans
}

/// A candidate mask: the left context ends at `left_end` and the target starts at
/// `target_start` (both absolute byte offsets, `left_end <= target_start`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Candidate {
    line: usize,
    left_end: usize,
    target_start: usize,
}

/// Interior whitespace: strictly after the first and before the last non-whitespace
/// character of the line. The whitespace char itself stays in the left context and any
/// further whitespace up to the next token is elided.
fn random_candidates(text: &str, line: usize, span: LineSpan) -> Vec<Candidate> {
    let content = &text[span.start..span.content_end];
    let Some(first) = content.find(|c: char| !c.is_whitespace()) else {
        return Vec::new();
    };
    let last = content.rfind(|c: char| !c.is_whitespace()).unwrap_or(first);
    let mut out = Vec::new();
    for (i, c) in content.char_indices() {
        if i <= first || i >= last || !c.is_whitespace() {
            continue;
        }
        let after = i + c.len_utf8();
        let target_off = after + content[after..].find(|c: char| !c.is_whitespace()).unwrap_or(0);
        out.push(Candidate { line, left_end: span.start + after, target_start: span.start + target_off });
    }
    out
}

/// Positions right after a trigger token (plus one following space, if there is one), with
/// non-whitespace content following on the same line.
fn trigger_candidates(text: &str, line: usize, span: LineSpan) -> Vec<Candidate> {
    let content = &text[span.start..span.content_end];
    let Some(first) = content.find(|c: char| !c.is_whitespace()) else {
        return Vec::new();
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let boundaries = content.char_indices().map(|(i, _)| i).skip(1).chain(std::iter::once(content.len()));
    for k in boundaries {
        if k <= first || detect_trigger(&content[..k]).is_none() {
            continue;
        }
        let mut left_end = k;
        if !content[..k].ends_with(' ') && content[k..].starts_with(' ') {
            left_end += 1;
        }
        let target = &content[left_end..];
        if target.is_empty() || target.starts_with(char::is_whitespace) {
            continue;
        }
        if detect_trigger(&content[..left_end]).is_none() || !seen.insert(left_end) {
            continue;
        }
        out.push(Candidate { line, left_end: span.start + left_end, target_start: span.start + left_end });
    }
    out
}

fn file_seed(seed: u64, file_id: &str) -> u64 {
    // FNV-1a over the file id, mixed with the run seed
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in file_id.bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash ^ seed.rotate_left(17)
}

/// Shuffles all candidates with the seeded generator and keeps the first one seen on each
/// line until `max_per_file` are chosen.
fn select(mut candidates: Vec<Candidate>, file_id: &str, seed: u64, max_per_file: usize) -> Vec<Candidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(file_seed(seed, file_id));
    candidates.shuffle(&mut rng);
    let mut used_lines = HashSet::new();
    let mut chosen: Vec<Candidate> = candidates
        .into_iter()
        .filter(|c| used_lines.insert(c.line))
        .take(max_per_file)
        .collect();
    chosen.sort_by_key(|c| c.line);
    chosen
}

pub fn gen_masks(file: &CorpusFile, strategy: Strategy, seed: u64, max_per_file: usize) -> Vec<BenchmarkSample> {
    let text = file.text.as_str();
    let spans = line_spans(text);
    let candidates: Vec<Candidate> = spans
        .iter()
        .enumerate()
        .flat_map(|(line, &span)| match strategy {
            Strategy::Random => random_candidates(text, line, span),
            Strategy::Trigger => trigger_candidates(text, line, span),
        })
        .collect();

    select(candidates, &file.file_id, seed, max_per_file.max(1))
        .into_iter()
        .map(|c| {
            let span = spans[c.line];
            let left_context = text[..c.left_end].to_string();
            let trigger = match strategy {
                Strategy::Random => None,
                Strategy::Trigger => detect_trigger(&left_context).map(|m| m.token),
            };
            BenchmarkSample {
                sample_id: format!("{}#L{}:{}", file.file_id, c.line + 1, strategy),
                language: file.language,
                file_id: file.file_id.clone(),
                line_no: c.line + 1,
                left_context,
                target: text[c.target_start..span.content_end].to_string(),
                right_context: text[span.next..].to_string(),
                trigger,
                strategy,
            }
        })
        .collect()
}

pub fn gen_random_masks(file: &CorpusFile, seed: u64, max_per_file: usize) -> Vec<BenchmarkSample> {
    gen_masks(file, Strategy::Random, seed, max_per_file)
}

pub fn gen_trigger_masks(file: &CorpusFile, seed: u64, max_per_file: usize) -> Vec<BenchmarkSample> {
    gen_masks(file, Strategy::Trigger, seed, max_per_file)
}

/// Generates samples for every file in parallel; output is ordered by `(file_id, line_no)`.
pub fn generate_dataset(files: &[CorpusFile], strategy: Strategy, seed: u64, max_per_file: usize) -> Vec<BenchmarkSample> {
    let mut samples: Vec<BenchmarkSample> = files
        .par_iter()
        .flat_map_iter(|f| gen_masks(f, strategy, seed, max_per_file))
        .collect();
    samples.sort_by(|a, b| a.file_id.cmp(&b.file_id).then(a.line_no.cmp(&b.line_no)));
    samples
}
