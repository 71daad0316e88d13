use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use culprit_core::config::RunManifest;
use culprit_core::history::{build_evolve_map, GitCli, SerializedHistory, VcsAdapter};
use culprit_core::style::{reduce_search_space, SyntacticDetector};
use culprit_core::{candidate_commits, suspicious_elements, Error, Stage};

use crate::rank::{load_coverage_from, write_file};
use crate::InputArgs;

#[derive(Args, Debug)]
pub struct MineArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Where to write the serialized history.
    #[arg(long)]
    out: PathBuf,
    /// Also record which candidate commits are style-only.
    #[arg(long)]
    with_style: bool,
}

pub fn run(args: MineArgs) -> anyhow::Result<()> {
    let cfg = args.input.load_config()?;
    cfg.validate()?;
    let (cov_path, coverage) = load_coverage_from(&cfg)?;
    let repo = cfg
        .paths
        .repo
        .clone()
        .ok_or_else(|| Error::InvalidConfig("mine-history needs --repo".into()))?;
    let git = GitCli::new(&repo);
    let until = &cfg.paths.until;

    let ef = suspicious_elements(&coverage).map_err(|e| e.in_stage(Stage::SearchSpace))?;
    let evolve = build_evolve_map(&git, &ef, until, cfg.workers).map_err(|e| e.in_stage(Stage::History))?;
    let all = git.all_commits(until).map_err(|e| e.in_stage(Stage::History))?;
    let style = if args.with_style {
        let cf = candidate_commits(&ef, &evolve)?;
        let registry = cfg.registry()?;
        let detector = SyntacticDetector {
            adapter: &git,
            registry: &registry,
        };
        reduce_search_space(&cf, &evolve, &detector).removed
    } else {
        BTreeSet::new()
    };

    write_file(&args.out, &SerializedHistory::to_json(&evolve, &all, &style))?;
    let mut manifest = RunManifest::new("mine-history", &cfg);
    manifest.add_input(&cov_path)?;
    manifest.inputs.insert(
        format!("{}@{}", repo.display(), until),
        git.resolve(until)?,
    );
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        manifest.write(dir)?;
    }
    eprintln!(
        "{} elements, {} commits in history, {} style-only",
        evolve.len(),
        all.len(),
        style.len()
    );
    Ok(())
}
