use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use culprit_core::bisect::{
    standard_bisect, weighted_bisect, BisectOptions, BisectOutcome, Candidate, CommandOracle,
    InteractiveOracle, Oracle, Probe, TableOracle,
};
use culprit_core::config::{OracleConfig, RunConfig};
use culprit_core::history::{GitCli, SerializedHistory, VcsAdapter};
use culprit_core::{CommitId, Error, ScoreReport, SortKey, Stage};

use crate::rank::write_file;

#[derive(Args, Debug)]
pub struct BisectArgs {
    /// Score report written by `culprit rank`.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Plain midpoint bisection (ignores scores).
    #[arg(long)]
    uniform: bool,
    /// With --uniform and no --scores: bisect this serialized history.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Repository for --oracle-cmd, or whose history --uniform bisects.
    #[arg(long)]
    repo: Option<PathBuf>,
    #[arg(long, default_value = "HEAD")]
    until: String,
    /// Shell command run in a checkout of each probed commit; `{commit}` is
    /// replaced by its id. Exit 0: good, 1: bad, other: abort.
    #[arg(long, group = "oracle")]
    oracle_cmd: Option<String>,
    /// JSON object mapping commit ids to "good" or "bad".
    #[arg(long, group = "oracle")]
    oracle_table: Option<PathBuf>,
    /// Ask for each verdict on standard input.
    #[arg(long, group = "oracle")]
    interactive: bool,
    /// TOML run configuration supplying the oracle when no flag does.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Return a lone candidate without probing it.
    #[arg(long)]
    no_confirm_single: bool,
    /// Write probes as JSON lines to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

enum Space {
    Weighted(Vec<Candidate<f64>>),
    Uniform(Vec<(CommitId, SortKey)>),
}

impl Space {
    fn newest_first(&self) -> Vec<CommitId> {
        let mut keyed: Vec<(SortKey, CommitId)> = match self {
            Space::Weighted(c) => c
                .iter()
                .filter(|c| c.score > 0.0)
                .map(|c| (c.key, c.id.clone()))
                .collect(),
            Space::Uniform(c) => c.iter().map(|(id, k)| (*k, id.clone())).collect(),
        };
        keyed.sort_by(|a, b| b.0.cmp(&a.0));
        keyed.into_iter().map(|(_, id)| id).collect()
    }
}

fn load_space(args: &BisectArgs) -> anyhow::Result<Space> {
    if let Some(path) = &args.scores {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(path, e).in_stage(Stage::Ingest))?;
        let report = ScoreReport::from_json(&text).map_err(|e| at_path(e, path).in_stage(Stage::Ingest))?;
        let cands: Vec<Candidate<f64>> = report
            .ranked
            .iter()
            .map(|r| Candidate {
                id: r.commit.clone(),
                key: r.key(),
                score: r.score,
            })
            .collect();
        return Ok(if args.uniform {
            Space::Uniform(
                cands
                    .into_iter()
                    .filter(|c| c.score > 0.0)
                    .map(|c| (c.id, c.key))
                    .collect(),
            )
        } else {
            Space::Weighted(cands)
        });
    }
    if !args.uniform {
        return Err(Error::InvalidConfig("weighted bisection needs --scores (or pass --uniform)".into()).into());
    }
    let commits = if let Some(h) = &args.history {
        SerializedHistory::load(h)
            .map_err(|e| e.in_stage(Stage::Ingest))?
            .all_commits(&args.until)?
    } else if let Some(repo) = &args.repo {
        GitCli::new(repo).all_commits(&args.until)?
    } else {
        return Err(Error::InvalidConfig("--uniform needs --scores, --history or --repo".into()).into());
    };
    Ok(Space::Uniform(commits.into_iter().map(|c| (c.id.clone(), c.key())).collect()))
}

/// Names the file a parse error came from.
fn at_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse {
            line,
            column,
            message,
            ..
        } => Error::Parse {
            path: path.display().to_string(),
            line,
            column,
            message,
        },
        other => other,
    }
}

fn oracle_spec(args: &BisectArgs) -> anyhow::Result<OracleConfig> {
    if let Some(cmd) = &args.oracle_cmd {
        return Ok(OracleConfig::Command { command: cmd.clone() });
    }
    if let Some(t) = &args.oracle_table {
        return Ok(OracleConfig::Table { table: t.clone() });
    }
    if args.interactive {
        return Ok(OracleConfig::Interactive);
    }
    if let Some(c) = &args.config {
        let cfg = RunConfig::load(c).map_err(|e| e.in_stage(Stage::Ingest))?;
        if let Some(o) = cfg.oracle {
            return Ok(o);
        }
    }
    Err(Error::InvalidConfig("choose an oracle: --oracle-cmd, --oracle-table or --interactive".into()).into())
}

fn trace_lines(trace: &[Probe]) -> String {
    trace
        .iter()
        .map(|p| serde_json::to_string(p).expect("probe serializes") + "\n")
        .collect()
}

fn search(space: &Space, oracle: &mut dyn Oracle, opts: BisectOptions) -> culprit_core::Result<BisectOutcome> {
    match space {
        Space::Weighted(c) => weighted_bisect(c, oracle, opts),
        Space::Uniform(c) => standard_bisect(c, oracle, opts),
    }
    .map_err(|e| e.in_stage(Stage::Bisection))
}

pub fn run(args: BisectArgs) -> anyhow::Result<()> {
    let space = load_space(&args)?;
    let opts = BisectOptions {
        confirm_single: !args.no_confirm_single,
    };
    let result = match oracle_spec(&args)? {
        OracleConfig::Table { table } => {
            let text = fs::read_to_string(&table)
                .map_err(|e| Error::io(&table, e).in_stage(Stage::Ingest))?;
            let mut oracle = TableOracle::from_json(&text)
                .map_err(|e| at_path(e, &table).in_stage(Stage::Ingest))?;
            oracle
                .check_monotone(&space.newest_first())
                .map_err(|e| e.in_stage(Stage::Bisection))?;
            search(&space, &mut oracle, opts)
        }
        OracleConfig::Command { command } => {
            let repo = args
                .repo
                .clone()
                .ok_or_else(|| Error::InvalidConfig("--oracle-cmd needs --repo".into()))?;
            let mut oracle = CommandOracle::new(repo, command);
            search(&space, &mut oracle, opts)
        }
        OracleConfig::Interactive => {
            let stdin = io::stdin();
            let mut oracle = InteractiveOracle::new(stdin.lock(), io::stderr());
            search(&space, &mut oracle, opts)
        }
    };

    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            if let Error::InconsistentOracle { trace } = e.root() {
                let lines = trace_lines(trace);
                eprint!("{lines}");
                if let Some(t) = &args.trace {
                    write_file(t, &lines)?;
                }
            }
            return Err(e.into());
        }
    };
    if let Some(t) = &args.trace {
        write_file(t, &trace_lines(&outcome.trace))?;
    }
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "bic {}", outcome.bic).context("writing result")?;
    writeln!(stdout, "iterations {}", outcome.iterations).context("writing result")?;
    Ok(())
}
