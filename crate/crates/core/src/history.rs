//! Building the `Evolve` relation: the change history of the method that
//! encloses each suspicious statement.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexer::LexOptions;
use crate::model::{CodeElement, CommitId, CommitRecord, EvolveMap, FileChange, Hunk};
use crate::span::resolve_enclosing_span;

/// Environment variable overriding the VCS executable.
pub const VCS_ENV: &str = "CULPRIT_VCS";

pub fn vcs_binary() -> String {
    std::env::var(VCS_ENV)
        .ok()
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "git".to_owned())
}

/// Source of element histories and file contents.
pub trait VcsAdapter: Send + Sync {
    /// Commits up to `until` that modified the element's trace range,
    /// newest first.
    fn trace_history(&self, element: &CodeElement, until: &str) -> Result<Vec<CommitRecord>>;

    /// The element with its enclosing span filled in when the adapter can
    /// determine one.
    fn resolve_span(&self, element: &CodeElement, _until: &str) -> Result<CodeElement> {
        Ok(element.clone())
    }

    /// File contents before and after `commit` for one changed file.
    fn file_versions(
        &self,
        commit: &CommitId,
        change: &FileChange,
    ) -> Result<(Option<String>, Option<String>)>;

    /// Every commit reachable from `until`, newest first.
    fn all_commits(&self, until: &str) -> Result<Vec<CommitRecord>>;
}

/// Statement history inherits the history of its enclosing span.
pub fn trace_history(
    adapter: &dyn VcsAdapter,
    element: &CodeElement,
    until: &str,
) -> Result<Vec<CommitRecord>> {
    let resolved = adapter.resolve_span(element, until)?;
    adapter.trace_history(&resolved, until)
}

/// Traces every element of `suspicious`, once per distinct (file, span),
/// using at most `workers` threads.
pub fn build_evolve_map(
    adapter: &dyn VcsAdapter,
    suspicious: &BTreeSet<CodeElement>,
    until: &str,
    workers: usize,
) -> Result<EvolveMap> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;

    let resolved: Vec<Result<CodeElement>> = pool.install(|| {
        suspicious
            .par_iter()
            .map(|e| adapter.resolve_span(e, until))
            .collect()
    });
    let mut failures = Vec::new();
    let mut groups: BTreeMap<(String, (u32, u32)), Vec<CodeElement>> = BTreeMap::new();
    for (original, r) in suspicious.iter().zip(resolved) {
        match r {
            Ok(e) => groups
                .entry((e.file.clone(), e.trace_range()))
                .or_default()
                .push(e),
            Err(err) => failures.push((original.clone(), err)),
        }
    }

    let traced: Vec<(Vec<CodeElement>, Result<Vec<CommitRecord>>)> = pool.install(|| {
        groups
            .into_par_iter()
            .map(|(_, members)| {
                let trace = adapter.trace_history(&members[0], until);
                (members, trace)
            })
            .collect()
    });

    let mut evolve = EvolveMap::new();
    let mut histories = Vec::new();
    for (members, trace) in traced {
        match trace {
            Ok(records) => {
                let mut records = records;
                records.sort_by(|a, b| b.key().cmp(&a.key()));
                records.dedup_by(|a, b| a.id == b.id);
                let ids: Vec<CommitId> = records.iter().map(|r| r.id.clone()).collect();
                for r in records {
                    evolve.add_commit(r)?;
                }
                for m in members {
                    histories.push((m, ids.clone()));
                }
            }
            Err(err) => {
                let msg = err.to_string();
                for m in members {
                    failures.push((m, Error::Vcs(msg.clone())));
                }
            }
        }
    }
    if !failures.is_empty() {
        failures.sort_by(|a, b| a.0.cmp(&b.0));
        return Err(Error::HistoryFailures(failures));
    }
    for (element, ids) in histories {
        evolve.set_history(element, ids)?;
    }
    Ok(evolve)
}

#[derive(Debug)]
struct CommitIndex {
    head: String,
    keys: HashMap<String, (i64, u64)>,
    newest_first: Vec<String>,
}

/// Adapter backed by the `git` command line.
pub struct GitCli {
    root: PathBuf,
    binary: String,
    indexes: Mutex<HashMap<String, Arc<CommitIndex>>>,
    sources: Mutex<HashMap<(String, String), Option<Arc<String>>>>,
}

const MARKER: &str = "\u{1e}CULPRIT ";

impl GitCli {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            binary: vcs_binary(),
            indexes: Mutex::new(HashMap::new()),
            sources: Mutex::new(HashMap::new()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn output(&self, args: &[&str]) -> Result<std::process::Output> {
        Command::new(&self.binary)
            .arg("-C")
            .arg(&self.root)
            .args(args)
            .output()
            .map_err(|e| Error::Vcs(format!("cannot run {}: {e}", self.binary)))
    }

    fn run(&self, args: &[&str]) -> Result<String> {
        let out = self.output(args)?;
        if !out.status.success() {
            return Err(Error::Vcs(format!(
                "`{} {}` failed: {}",
                self.binary,
                args.join(" "),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        String::from_utf8(out.stdout)
            .map_err(|_| Error::Vcs(format!("non-UTF-8 output from `{}`", args.join(" "))))
    }

    /// Full hash of `rev`, or `UnknownCommit`.
    pub fn resolve(&self, rev: &str) -> Result<String> {
        let spec = format!("{rev}^{{commit}}");
        let out = self.output(&["rev-parse", "--verify", "--quiet", &spec])?;
        if !out.status.success() {
            return Err(Error::UnknownCommit(rev.to_owned()));
        }
        Ok(String::from_utf8_lossy(&out.stdout).trim().to_owned())
    }

    /// Committer timestamps and topological sequence numbers of every
    /// commit reachable from `until`, computed once per revision.
    fn index(&self, until: &str) -> Result<Arc<CommitIndex>> {
        if let Some(idx) = self.indexes.lock().expect("index lock").get(until) {
            return Ok(idx.clone());
        }
        let head = self.resolve(until)?;
        let listing = self.run(&["log", "--topo-order", "--reverse", "--format=%H %ct", &head])?;
        let mut keys = HashMap::new();
        let mut order_list = Vec::new();
        for (seq, line) in listing.lines().enumerate() {
            let (id, time) = line
                .split_once(' ')
                .ok_or_else(|| Error::Vcs(format!("unexpected log line `{line}`")))?;
            let time: i64 = time
                .trim()
                .parse()
                .map_err(|_| Error::Vcs(format!("bad timestamp in `{line}`")))?;
            keys.insert(id.to_owned(), (time, seq as u64));
            order_list.push(id.to_owned());
        }
        order_list.sort_by(|a, b| keys[b].cmp(&keys[a]));
        let idx = Arc::new(CommitIndex {
            head,
            keys,
            newest_first: order_list,
        });
        self.indexes
            .lock()
            .expect("index lock")
            .insert(until.to_owned(), idx.clone());
        Ok(idx)
    }

    fn show(&self, rev: &str, path: &str) -> Result<Option<Arc<String>>> {
        let key = (rev.to_owned(), path.to_owned());
        if let Some(hit) = self.sources.lock().expect("source lock").get(&key) {
            return Ok(hit.clone());
        }
        let spec = format!("{rev}:{path}");
        let out = Command::new(&self.binary)
            .arg("-C")
            .arg(&self.root)
            .args(["show", &spec])
            .output()
            .map_err(|e| Error::Vcs(format!("cannot run {}: {e}", self.binary)))?;
        let content = if out.status.success() {
            let text = String::from_utf8(out.stdout)
                .map_err(|_| Error::FileUnavailable(format!("{spec} is not UTF-8 text")))?;
            Some(Arc::new(text))
        } else {
            None
        };
        self.sources
            .lock()
            .expect("source lock")
            .insert(key, content.clone());
        Ok(content)
    }

    /// Every file touched by `commit` relative to its first parent, with
    /// rename detection. Hunks are not filled in.
    pub fn commit_changes(&self, commit: &str) -> Result<Vec<FileChange>> {
        let sha = self.resolve(commit)?;
        let listing = self.run(&["show", "--format=", "--name-status", "-M", "--first-parent", &sha])?;
        let mut out = Vec::new();
        for line in listing.lines().filter(|l| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split('\t').collect();
            let status = fields[0].chars().next().unwrap_or(' ');
            let change = match (status, fields.as_slice()) {
                ('A', [_, p]) => FileChange { old_path: None, new_path: Some((*p).into()), hunks: vec![] },
                ('D', [_, p]) => FileChange { old_path: Some((*p).into()), new_path: None, hunks: vec![] },
                ('R' | 'C', [_, old, new]) => FileChange {
                    old_path: Some((*old).into()),
                    new_path: Some((*new).into()),
                    hunks: vec![],
                },
                (_, [_, p]) => FileChange {
                    old_path: Some((*p).into()),
                    new_path: Some((*p).into()),
                    hunks: vec![],
                },
                _ => return Err(Error::Vcs(format!("unexpected name-status line `{line}`"))),
            };
            out.push(change);
        }
        Ok(out)
    }

    fn record(&self, index: &CommitIndex, id: &str, message: &str) -> Result<CommitRecord> {
        let &(time, order) = index
            .keys
            .get(id)
            .ok_or_else(|| Error::Vcs(format!("commit {id} is not reachable from {}", index.head)))?;
        Ok(CommitRecord {
            id: CommitId::new(id),
            time,
            order,
            message: message.to_owned(),
            changed_files: Vec::new(),
        })
    }
}

fn lex_options_for(path: &str) -> LexOptions {
    if path.to_ascii_lowercase().ends_with(".java") {
        LexOptions::java()
    } else {
        LexOptions::c_family()
    }
}

fn diff_path(raw: &str, prefix: &str) -> Option<String> {
    let raw = raw.trim_end();
    if raw == "/dev/null" {
        return None;
    }
    Some(raw.strip_prefix(prefix).unwrap_or(raw).to_owned())
}

fn parse_range(s: &str) -> Option<(u32, u32)> {
    let s = &s[1..];
    match s.split_once(',') {
        Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
        None => Some((s.parse().ok()?, 1)),
    }
}

/// Parses `git log -L` output produced with the `MARKER %H %ct %s` format.
fn parse_line_log(output: &str) -> Vec<(String, String, Vec<FileChange>)> {
    let mut out: Vec<(String, String, Vec<FileChange>)> = Vec::new();
    let mut pending_old: Option<Option<String>> = None;
    for line in output.lines() {
        if let Some(rest) = line.strip_prefix(MARKER) {
            let mut parts = rest.splitn(3, ' ');
            let id = parts.next().unwrap_or_default().to_owned();
            let _time = parts.next();
            let subject = parts.next().unwrap_or_default().to_owned();
            out.push((id, subject, Vec::new()));
            pending_old = None;
            continue;
        }
        let Some(current) = out.last_mut() else {
            continue;
        };
        if let Some(old) = line.strip_prefix("--- ") {
            pending_old = Some(diff_path(old, "a/"));
        } else if let Some(new) = line.strip_prefix("+++ ") {
            current.2.push(FileChange {
                old_path: pending_old.take().flatten(),
                new_path: diff_path(new, "b/"),
                hunks: Vec::new(),
            });
        } else if line.starts_with("@@ ") {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if let (Some(change), Some(old), Some(new)) = (
                current.2.last_mut(),
                fields.get(1).and_then(|s| parse_range(s)),
                fields.get(2).and_then(|s| parse_range(s)),
            ) {
                change.hunks.push(Hunk {
                    old_start: old.0,
                    old_lines: old.1,
                    new_start: new.0,
                    new_lines: new.1,
                });
            }
        }
    }
    out
}

impl VcsAdapter for GitCli {
    fn resolve_span(&self, element: &CodeElement, until: &str) -> Result<CodeElement> {
        if element.enclosing_span.is_some() {
            return Ok(element.clone());
        }
        let index = self.index(until)?;
        let mut resolved = element.clone();
        if let Some(source) = self.show(&index.head, &element.file)? {
            if let Some((start, end)) =
                resolve_enclosing_span(&source, element.line, &lex_options_for(&element.file))
            {
                resolved.set_span(start, end)?;
            }
        }
        Ok(resolved)
    }

    fn trace_history(&self, element: &CodeElement, until: &str) -> Result<Vec<CommitRecord>> {
        let index = self.index(until)?;
        let (start, end) = element.trace_range();
        let range = format!("-L{start},{end}:{}", element.file);
        let format = format!("--format={MARKER}%H %ct %s");
        let output = self.run(&["log", "-C", "-M", &range, &format, &index.head])?;
        let mut records = Vec::new();
        for (id, subject, changes) in parse_line_log(&output) {
            let mut record = self.record(&index, &id, &subject)?;
            record.changed_files = changes;
            records.push(record);
        }
        records.sort_by(|a, b| b.key().cmp(&a.key()));
        Ok(records)
    }

    fn file_versions(
        &self,
        commit: &CommitId,
        change: &FileChange,
    ) -> Result<(Option<String>, Option<String>)> {
        let before = match &change.old_path {
            Some(p) => Some(
                self.show(&format!("{commit}^"), p)?
                    .ok_or_else(|| Error::FileUnavailable(format!("{commit}^:{p}")))?,
            ),
            None => None,
        };
        let after = match &change.new_path {
            Some(p) => Some(
                self.show(commit.as_str(), p)?
                    .ok_or_else(|| Error::FileUnavailable(format!("{commit}:{p}")))?,
            ),
            None => None,
        };
        Ok((
            before.map(|s| s.as_str().to_owned()),
            after.map(|s| s.as_str().to_owned()),
        ))
    }

    fn all_commits(&self, until: &str) -> Result<Vec<CommitRecord>> {
        let index = self.index(until)?;
        index
            .newest_first
            .iter()
            .map(|id| self.record(&index, id, ""))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct SerializedCommit {
    id: CommitId,
    time: i64,
    order: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SerializedElement {
    file: String,
    line: u32,
    history: Vec<SerializedCommit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SerializedDoc {
    elements: Vec<SerializedElement>,
    /// Whole reachable history; optional.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    commits: Vec<SerializedCommit>,
    /// Commits already judged style-only; optional.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    style_changes: Vec<CommitId>,
}

/// Read-only replay of a previously mined history.
///
/// Format: `{"elements":[{"file":..,"line":..,"history":[{"id":..,"time":..,"order":..},..]},..]}`
/// with optional top-level `commits` (the full history) and
/// `style_changes` (commit ids judged style-only when mined).
#[derive(Debug, Clone)]
pub struct SerializedHistory {
    evolve: EvolveMap,
    all: Vec<CommitRecord>,
    style_changes: BTreeSet<CommitId>,
}

impl SerializedHistory {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let doc: SerializedDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_owned(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let mut evolve = EvolveMap::new();
        let to_record = |c: &SerializedCommit| CommitRecord {
            id: c.id.clone(),
            time: c.time,
            order: c.order,
            message: String::new(),
            changed_files: Vec::new(),
        };
        for c in doc.commits.iter().chain(doc.elements.iter().flat_map(|e| &e.history)) {
            evolve.add_commit(to_record(c))?;
        }
        for e in &doc.elements {
            let element = CodeElement::new(e.file.clone(), e.line)?;
            evolve.set_history(element, e.history.iter().map(|c| c.id.clone()).collect())?;
        }
        let mut all: Vec<CommitRecord> = if doc.commits.is_empty() {
            evolve.commits().cloned().collect()
        } else {
            doc.commits.iter().map(to_record).collect()
        };
        all.sort_by(|a, b| b.key().cmp(&a.key()));
        Ok(Self {
            evolve,
            all,
            style_changes: doc.style_changes.into_iter().collect(),
        })
    }

    /// Serializes `evolve`, optionally with the full history and known
    /// style-only commits.
    pub fn to_json(
        evolve: &EvolveMap,
        all_commits: &[CommitRecord],
        style_changes: &BTreeSet<CommitId>,
    ) -> String {
        let ser = |id: &CommitId| {
            let r = evolve.commit(id).expect("history commit registered");
            SerializedCommit {
                id: r.id.clone(),
                time: r.time,
                order: r.order,
            }
        };
        let doc = SerializedDoc {
            elements: evolve
                .histories()
                .map(|(e, h)| SerializedElement {
                    file: e.file.clone(),
                    line: e.line,
                    history: h.iter().map(ser).collect(),
                })
                .collect(),
            commits: all_commits
                .iter()
                .map(|r| SerializedCommit {
                    id: r.id.clone(),
                    time: r.time,
                    order: r.order,
                })
                .collect(),
            style_changes: style_changes.iter().cloned().collect(),
        };
        serde_json::to_string_pretty(&doc).expect("history serializes")
    }

    pub fn evolve(&self) -> &EvolveMap {
        &self.evolve
    }

    pub fn style_changes(&self) -> &BTreeSet<CommitId> {
        &self.style_changes
    }

    pub fn commits(&self) -> &[CommitRecord] {
        &self.all
    }

    fn cutoff(&self, until: &str) -> Result<Option<crate::model::SortKey>> {
        if until.is_empty() || until == "HEAD" {
            return Ok(None);
        }
        self.all
            .iter()
            .find(|c| c.id.as_str() == until)
            .map(|c| Some(c.key()))
            .or_else(|| self.evolve.key(&CommitId::new(until)).map(Some))
            .ok_or_else(|| Error::UnknownCommit(until.to_owned()))
    }
}

impl VcsAdapter for SerializedHistory {
    fn trace_history(&self, element: &CodeElement, until: &str) -> Result<Vec<CommitRecord>> {
        let cutoff = self.cutoff(until)?;
        let history = self
            .evolve
            .history(element)
            .ok_or_else(|| Error::MissingHistory(element.clone()))?;
        Ok(history
            .iter()
            .filter_map(|id| self.evolve.commit(id))
            .filter(|r| cutoff.map_or(true, |k| r.key() <= k))
            .cloned()
            .collect())
    }

    fn file_versions(
        &self,
        commit: &CommitId,
        _change: &FileChange,
    ) -> Result<(Option<String>, Option<String>)> {
        Err(Error::FileUnavailable(format!(
            "serialized history has no file contents for {commit}"
        )))
    }

    fn all_commits(&self, until: &str) -> Result<Vec<CommitRecord>> {
        let cutoff = self.cutoff(until)?;
        Ok(self
            .all
            .iter()
            .filter(|r| cutoff.map_or(true, |k| r.key() <= k))
            .cloned()
            .collect())
    }
}
