//! Offline masked line-completion benchmarks.
//!
//! A sample masks a line from some interior position to its end. The random strategy picks
//! interior whitespace positions; the trigger strategy picks positions right after a trigger
//! token. Either way at most one mask is placed per line and at most `max_per_file` per file.

mod corpus;
mod dataset;
mod masking;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::language::Language;
use crate::trigger::TriggerToken;

pub use corpus::{dedup_repositories, read_exclusion_list, scan_corpus, CorpusFile, ScanReport};
pub use dataset::{read_dataset, write_dataset};
pub use masking::{gen_masks, gen_random_masks, gen_trigger_masks, generate_dataset};

pub const DEFAULT_MAX_PER_FILE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Trigger,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Random => "random",
            Strategy::Trigger => "trigger",
        })
    }
}

impl FromStr for Strategy {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Strategy::Random),
            "trigger" => Ok(Strategy::Trigger),
            other => Err(BenchmarkError::UnknownStrategy(other.to_string())),
        }
    }
}

/// One masked completion instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSample {
    pub sample_id: String,
    pub language: Language,
    pub file_id: String,
    /// 1-based.
    pub line_no: usize,
    pub left_context: String,
    /// The masked span: from the mask position to the end of the line, never containing a
    /// newline.
    pub target: String,
    /// File text after the masked line's terminator.
    pub right_context: String,
    pub trigger: Option<TriggerToken>,
    pub strategy: Strategy,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchmarkError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} is not a directory")]
    NotADirectory(PathBuf),
    #[error(transparent)]
    Walk(#[from] walkdir::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("unknown masking strategy {0:?} (expected \"random\" or \"trigger\")")]
    UnknownStrategy(String),
}
