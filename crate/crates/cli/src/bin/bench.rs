use std::collections::HashSet;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use compleval_core::benchmark::{
    dedup_repositories, generate_dataset, read_exclusion_list, scan_corpus, write_dataset, Strategy,
    DEFAULT_MAX_PER_FILE,
};
use compleval_core::ExtensionMap;

/// Build masked line-completion benchmarks from a source corpus.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a benchmark dataset as JSONL.
    Gen {
        /// Corpus root; each top-level directory is one repository.
        #[arg(long)]
        corpus: PathBuf,
        /// `random` (interior whitespace) or `trigger` (after a trigger token).
        #[arg(long)]
        strategy: Strategy,
        #[arg(long, default_value_t = DEFAULT_MAX_PER_FILE)]
        max_per_file: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// File listing repository names to drop, one per line.
        #[arg(long)]
        exclude_repos: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Gen { corpus, strategy, max_per_file, seed, exclude_repos, out } => {
            let report = scan_corpus(&corpus, &ExtensionMap::default())?;
            let repos_before = report.repo_ids().len();
            let excluded: HashSet<String> = match &exclude_repos {
                Some(path) => read_exclusion_list(path)?,
                None => HashSet::new(),
            };
            let files = dedup_repositories(report.files, &excluded);
            let repos_after = files.iter().map(|f| f.repo_id.as_str()).collect::<HashSet<_>>().len();
            let samples = generate_dataset(&files, strategy, seed, max_per_file);
            write_dataset(&samples, &out)?;
            eprintln!(
                "repos: {repos_before} scanned, {repos_after} kept; files: {} kept, {} skipped (not UTF-8); samples: {}",
                files.len(),
                report.skipped_non_utf8,
                samples.len()
            );
        }
    }
    Ok(())
}
