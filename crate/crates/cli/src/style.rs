use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use culprit_core::history::{GitCli, VcsAdapter};
use culprit_core::style::{compare_versions, FileVerdict, NormalizerRegistry};
use culprit_core::{CommitId, Error, Stage};

#[derive(Args, Debug)]
pub struct CheckStyleArgs {
    #[arg(long, requires = "commit", conflicts_with_all = ["before", "after"])]
    repo: Option<PathBuf>,
    /// Commit whose changed files are compared with its first parent.
    #[arg(long)]
    commit: Option<String>,
    #[arg(long, requires = "after")]
    before: Option<PathBuf>,
    #[arg(long, requires = "before")]
    after: Option<PathBuf>,
    /// Extra extension mappings, e.g. `kt=java`.
    #[arg(long = "map-ext", value_parser = parse_mapping)]
    map_ext: Vec<(String, String)>,
}

fn parse_mapping(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(a, b)| (a.to_owned(), b.to_owned()))
        .ok_or_else(|| format!("expected EXT=NORMALIZER, got `{s}`"))
}

fn describe(v: &FileVerdict) -> String {
    match v {
        FileVerdict::Equivalent => "equivalent".into(),
        FileVerdict::Changed => "changed".into(),
        FileVerdict::Unavailable { reason } => format!("undecided ({reason})"),
    }
}

pub fn run(args: CheckStyleArgs) -> anyhow::Result<()> {
    let mut registry = NormalizerRegistry::default();
    for (ext, name) in &args.map_ext {
        registry.register_named(ext, name)?;
    }
    let mut verdicts = Vec::new();
    if let (Some(before), Some(after)) = (&args.before, &args.after) {
        let read = |p: &PathBuf| {
            fs::read_to_string(p).map_err(|e| Error::io(p, e).in_stage(Stage::Ingest))
        };
        let (a, b) = (read(before)?, read(after)?);
        let path = after.to_string_lossy().into_owned();
        verdicts.push((path.clone(), compare_versions(&path, Some(&a), Some(&b), &registry)));
    } else if let (Some(repo), Some(commit)) = (&args.repo, &args.commit) {
        let git = GitCli::new(repo);
        let sha = git.resolve(commit).map_err(|e| e.in_stage(Stage::StyleFilter))?;
        let id = CommitId::new(sha);
        for change in git.commit_changes(id.as_str())? {
            let path = change
                .new_path
                .clone()
                .or_else(|| change.old_path.clone())
                .unwrap_or_default();
            let verdict = match git.file_versions(&id, &change) {
                Ok((before, after)) => compare_versions(&path, before.as_deref(), after.as_deref(), &registry),
                Err(e) => FileVerdict::Unavailable { reason: e.to_string() },
            };
            verdicts.push((path, verdict));
        }
    } else {
        return Err(Error::InvalidConfig("give --repo and --commit, or --before and --after".into()).into());
    }

    let style_only = !verdicts.is_empty() && verdicts.iter().all(|(_, v)| *v == FileVerdict::Equivalent);
    for (path, v) in &verdicts {
        println!("{path}\t{}", describe(v));
    }
    println!("style-only: {}", if style_only { "yes" } else { "no" });
    std::io::Write::flush(&mut std::io::stdout()).context("writing result")?;
    Ok(())
}
