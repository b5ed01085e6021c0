use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use compleval_cli::{load_backends, load_thresholds};
use compleval_core::analysis::{
    aggregate, analyze_telemetry, oracle_gateway, read_rows, render_table, run_offline_eval, write_report_jsonl,
    write_rows, GroupBy, DEFAULT_EVAL_CONCURRENCY,
};
use compleval_core::benchmark::read_dataset;
use compleval_core::gateway::Gateway;

/// Score model completions offline and summarize online telemetry.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Query backends on a benchmark dataset and write one metric row per sample and model.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        /// TOML file with `[[backends]]` tables.
        #[arg(long, required_unless_present = "oracle")]
        backends: Option<PathBuf>,
        /// Use a backend that answers with each sample's own target.
        #[arg(long, conflicts_with = "backends")]
        oracle: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EVAL_CONCURRENCY)]
        concurrency: usize,
        /// TOML file overriding failure-heuristic thresholds.
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    /// Aggregate metric rows into a per-group table.
    Report {
        #[arg(long)]
        rows: PathBuf,
        #[arg(long, value_parser = |s: &str| s.parse::<GroupBy>())]
        group_by: GroupBy,
        /// Also write the report as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyze a telemetry export and write reports into a directory.
    Telemetry {
        #[arg(long)]
        export: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { dataset, backends, oracle, out, concurrency, thresholds } => {
            let samples = read_dataset(&dataset).with_context(|| format!("reading {}", dataset.display()))?;
            let gateway = if oracle {
                oracle_gateway(&samples)
            } else {
                let path = backends.expect("clap enforces --backends without --oracle");
                Gateway::from_configs(load_backends(&path)?)?
            };
            let thresholds = load_thresholds(thresholds.as_deref())?;
            let rows = run_offline_eval(&samples, &gateway, concurrency, &thresholds).await?;
            write_rows(&rows, &out)?;
            let failed = rows.iter().filter(|r| r.failed).count();
            eprintln!("{} samples, {} rows ({failed} failed) -> {}", samples.len(), rows.len(), out.display());
        }
        Command::Report { rows, group_by, out } => {
            let rows = read_rows(&rows)?;
            let report = aggregate(&rows, group_by);
            print!("{}", render_table(&report, group_by));
            if let Some(out) = out {
                write_report_jsonl(&report, &out)?;
            }
        }
        Command::Telemetry { export, out, thresholds } => {
            let summary = analyze_telemetry(&export, &out, &load_thresholds(thresholds.as_deref())?)?;
            println!(
                "records: {} total, {} valid; acceptance rate {:.4} ({} of {} shown)",
                summary.total_records, summary.valid_records, summary.acceptance_rate, summary.accepted, summary.shown
            );
            print!("{}", render_table(&summary.by_language, GroupBy::Language));
            println!("reports written to {}", out.display());
        }
    }
    Ok(())
}
