//! `culprit`: rank and bisect the commits behind a failing test.

mod bisect;
mod eval;
mod exit;
mod history;
mod rank;
mod style;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use culprit_core::coverage::CoverageFormat;
use culprit_core::config::RunConfig;
use culprit_core::Stage;

#[derive(Parser)]
#[command(name = "culprit", version, about = "Find the commit that introduced a test failure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank the commits that may have introduced the failure.
    Rank(rank::RankArgs),
    /// Search the ranked commits with a bug oracle.
    Bisect(bisect::BisectArgs),
    /// Evaluate ranking and bisection on a labelled dataset.
    Eval(eval::EvalArgs),
    /// Generate a synthetic labelled dataset.
    Synth(eval::SynthArgs),
    /// Trace and serialize the history of the failure-covered code.
    MineHistory(history::MineArgs),
    /// Check whether a commit or a pair of files differ only in style.
    CheckStyle(style::CheckStyleArgs),
}

/// Inputs shared by `rank` and `mine-history`.
#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-test coverage (JSON file or LCOV directory).
    #[arg(long)]
    coverage: Option<PathBuf>,
    /// Coverage format: matrix-json or lcov-per-test.
    #[arg(long)]
    format: Option<CoverageFormat>,
    /// Git working copy to mine history from.
    #[arg(long)]
    repo: Option<PathBuf>,
    /// Serialized history to use instead of mining a repository.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Revision at which the failure was observed.
    #[arg(long)]
    until: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

impl InputArgs {
    fn load_config(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).map_err(|e| e.in_stage(Stage::Ingest))?,
            None => RunConfig::default(),
        };
        let paths = &mut cfg.paths;
        if self.coverage.is_some() {
            paths.coverage = self.coverage.clone();
        }
        if let Some(f) = self.format {
            paths.coverage_format = f;
        }
        if self.repo.is_some() {
            paths.repo = self.repo.clone();
        }
        if self.history.is_some() {
            paths.history = self.history.clone();
        }
        if let Some(u) = &self.until {
            paths.until = u.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rank(a) => rank::run(a),
        Command::Bisect(a) => bisect::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Synth(a) => eval::synth(a),
        Command::MineHistory(a) => history::run(a),
        Command::CheckStyle(a) => style::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(exit::code_for(&e))
        }
    }
}

/// The error chain, skipping causes already spelled out by their parent.
fn render(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}
