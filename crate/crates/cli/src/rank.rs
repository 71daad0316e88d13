use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use culprit_core::config::{RunConfig, RunManifest};
use culprit_core::coverage::{load_coverage, CoverageFile};
use culprit_core::history::{GitCli, SerializedHistory};
use culprit_core::pipeline::{rank, PipelineOptions, RankOutcome};
use culprit_core::sbfl::TieBreak;
use culprit_core::scorer::{VotingConfig, VotingMode};
use culprit_core::style::{PrecomputedStyle, StyleChangeDetector, SyntacticDetector};
use culprit_core::{CoverageMatrix, Error, Stage};

use crate::InputArgs;

#[derive(Args, Debug)]
pub struct RankArgs {
    #[command(flatten)]
    input: InputArgs,
    /// 0: rank-only vote; 1: suspiciousness over rank.
    #[arg(long)]
    alpha: Option<u8>,
    /// Tie-breaking for element ranks: max or dense.
    #[arg(long)]
    tau: Option<TieBreak>,
    /// Decay per newer commit in an element's history, in [0, 1).
    #[arg(long)]
    lambda: Option<f64>,
    /// vote, equal, score-only or max-aggr.
    #[arg(long)]
    mode: Option<VotingMode>,
    /// alpha=1, tau=max, lambda=0 (many commits per day).
    #[arg(long, conflicts_with_all = ["alpha", "tau", "lambda"])]
    batch: bool,
    /// Do not filter style-only commits.
    #[arg(long)]
    skip_stage2: bool,
    /// Use every passing test for suspiciousness, not only related ones.
    #[arg(long)]
    all_tests: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record per-element votes for each commit in the report.
    #[arg(long)]
    explain: bool,
    /// Number of ranked commits to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

impl RankArgs {
    fn config(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = self.input.load_config()?;
        if self.batch {
            cfg.voting = VotingConfig {
                mode: cfg.voting.mode,
                ..VotingConfig::batch()
            };
        }
        let v = &mut cfg.voting;
        if let Some(a) = self.alpha {
            v.alpha = a;
        }
        if let Some(t) = self.tau {
            v.tau = t;
        }
        if let Some(l) = self.lambda {
            v.lambda = l;
        }
        if let Some(m) = self.mode {
            v.mode = m;
        }
        if self.skip_stage2 {
            cfg.stages.skip_stage2 = true;
        }
        if self.all_tests {
            cfg.stages.select_relevant = false;
        }
        if let Some(o) = &self.out {
            cfg.paths.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_coverage_from(cfg: &RunConfig) -> anyhow::Result<(PathBuf, CoverageMatrix)> {
    let path = cfg
        .paths
        .coverage
        .clone()
        .ok_or_else(|| Error::InvalidConfig("no coverage given (--coverage)".into()))?;
    let cov = load_coverage(&CoverageFile::new(&path, cfg.paths.coverage_format))
        .map_err(|e| e.in_stage(Stage::Ingest))?;
    Ok((path, cov))
}

pub fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(args: RankArgs) -> anyhow::Result<()> {
    let cfg = args.config()?;
    let (cov_path, coverage) = load_coverage_from(&cfg)?;
    let opts = PipelineOptions {
        voting: cfg.voting,
        skip_stage2: cfg.stages.skip_stage2,
        select_relevant: cfg.stages.select_relevant,
        explain: args.explain,
    };
    let mut manifest = RunManifest::new("rank", &cfg);
    manifest.add_input(&cov_path)?;

    let outcome: RankOutcome<f64> = match (&cfg.paths.history, &cfg.paths.repo) {
        (Some(h), _) => {
            let history = SerializedHistory::load(h).map_err(|e| e.in_stage(Stage::Ingest))?;
            manifest.add_input(h)?;
            let detector = PrecomputedStyle(history.style_changes().clone());
            rank(&coverage, &history, &cfg.paths.until, Some(&detector), cfg.workers, &opts)?
        }
        (None, Some(repo)) => {
            let git = GitCli::new(repo);
            let head = git.resolve(&cfg.paths.until).map_err(|e| e.in_stage(Stage::History))?;
            manifest
                .inputs
                .insert(format!("{}@{}", repo.display(), cfg.paths.until), head);
            let registry = cfg.registry()?;
            let detector = SyntacticDetector {
                adapter: &git,
                registry: &registry,
            };
            rank(
                &coverage,
                &git,
                &cfg.paths.until,
                Some(&detector as &dyn StyleChangeDetector),
                cfg.workers,
                &opts,
            )?
        }
        (None, None) => {
            return Err(Error::InvalidConfig("need --history or --repo".into()).into());
        }
    };

    let out = &cfg.paths.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join("report.json"), &outcome.report.to_json())?;
    write_file(&out.join("report.csv"), &outcome.report.to_csv())?;
    manifest.write(out)?;

    eprintln!(
        "failing-covered elements: {}, candidate commits: {}, style-only removed: {}, undecided: {}",
        outcome.suspicious.len(),
        outcome.candidates.len(),
        outcome.style.removed.len(),
        outcome.style.undecided.len()
    );
    println!("rank\tscore\tcommit");
    for r in outcome.report.ranked.iter().take(args.top) {
        println!("{}\t{:.6}\t{}", r.rank, r.score, r.commit);
    }
    eprintln!("report written to {}", out.display());
    Ok(())
}
