//! Domain types shared by every stage: code elements, tests, coverage,
//! commits, and the element history relation.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A statement, identified by repository-relative path and 1-based line.
///
/// Equality, ordering and hashing only consider `(file, line)`; the
/// enclosing method span is auxiliary data used for history tracing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeElement {
    pub file: String,
    pub line: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enclosing_span: Option<(u32, u32)>,
}

impl CodeElement {
    pub fn new(file: impl Into<String>, line: u32) -> Result<Self> {
        let file = file.into();
        if file.is_empty() {
            return Err(Error::InvalidElement("empty file path".into()));
        }
        if line == 0 {
            return Err(Error::InvalidElement(format!("{file}: line numbers are 1-based")));
        }
        Ok(Self {
            file,
            line,
            enclosing_span: None,
        })
    }

    pub fn with_span(file: impl Into<String>, line: u32, start: u32, end: u32) -> Result<Self> {
        let mut element = Self::new(file, line)?;
        element.set_span(start, end)?;
        Ok(element)
    }

    pub fn set_span(&mut self, start: u32, end: u32) -> Result<()> {
        if !(start <= self.line && self.line <= end) {
            return Err(Error::InvalidElement(format!(
                "{self}: span {start}-{end} does not enclose the statement"
            )));
        }
        self.enclosing_span = Some((start, end));
        Ok(())
    }

    /// The line range whose history this element inherits.
    pub fn trace_range(&self) -> (u32, u32) {
        self.enclosing_span.unwrap_or((self.line, self.line))
    }

    /// Simple class name proxy: the file name without directory or extension.
    pub fn file_stem(&self) -> &str {
        let name = self.file.rsplit(['/', '\\']).next().unwrap_or(&self.file);
        match name.rfind('.') {
            Some(0) | None => name,
            Some(i) => &name[..i],
        }
    }
}

impl PartialEq for CodeElement {
    fn eq(&self, other: &Self) -> bool {
        self.line == other.line && self.file == other.file
    }
}

impl Eq for CodeElement {}

impl Hash for CodeElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.file.hash(state);
        self.line.hash(state);
    }
}

impl PartialOrd for CodeElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CodeElement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.file
            .cmp(&other.file)
            .then(self.line.cmp(&other.line))
    }
}

impl fmt::Display for CodeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub full_name: String,
    pub outcome: Outcome,
}

impl TestCase {
    pub fn new(full_name: impl Into<String>, outcome: Outcome) -> Self {
        Self {
            full_name: full_name.into(),
            outcome,
        }
    }

    pub fn is_failing(&self) -> bool {
        self.outcome == Outcome::Fail
    }
}

/// Test outcomes plus the `Cover` relation between tests and statements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMatrix {
    tests: Vec<TestCase>,
    covered: BTreeMap<String, BTreeSet<CodeElement>>,
}

impl CoverageMatrix {
    /// Builds a matrix, rejecting duplicate test names and coverage rows for
    /// undeclared tests. Tests without a coverage row cover nothing.
    pub fn new(
        tests: Vec<TestCase>,
        covered: impl IntoIterator<Item = (String, BTreeSet<CodeElement>)>,
    ) -> Result<Self> {
        let mut names = BTreeSet::new();
        for t in &tests {
            if t.full_name.is_empty() {
                return Err(Error::InvalidElement("test with empty name".into()));
            }
            if !names.insert(t.full_name.as_str()) {
                return Err(Error::DuplicateTestName(t.full_name.clone()));
            }
        }
        let mut map: BTreeMap<String, BTreeSet<CodeElement>> = BTreeMap::new();
        for (name, elements) in covered {
            if !names.contains(name.as_str()) {
                return Err(Error::UnknownTest(name));
            }
            map.entry(name).or_default().extend(elements);
        }
        Ok(Self {
            tests,
            covered: map,
        })
    }

    pub fn tests(&self) -> &[TestCase] {
        &self.tests
    }

    pub fn failing_tests(&self) -> impl Iterator<Item = &TestCase> {
        self.tests.iter().filter(|t| t.is_failing())
    }

    pub fn passing_tests(&self) -> impl Iterator<Item = &TestCase> {
        self.tests.iter().filter(|t| !t.is_failing())
    }

    pub fn failing_count(&self) -> usize {
        self.failing_tests().count()
    }

    pub fn has_failure(&self) -> bool {
        self.tests.iter().any(TestCase::is_failing)
    }

    pub fn covered_by(&self, test: &str) -> impl Iterator<Item = &CodeElement> {
        self.covered.get(test).into_iter().flatten()
    }

    pub fn covers(&self, test: &str, element: &CodeElement) -> bool {
        self.covered.get(test).is_some_and(|s| s.contains(element))
    }

    /// Every element covered by at least one test.
    pub fn elements(&self) -> BTreeSet<CodeElement> {
        self.covered.values().flatten().cloned().collect()
    }

    /// A copy restricted to the tests satisfying `keep`.
    pub fn retain_tests(&self, mut keep: impl FnMut(&TestCase) -> bool) -> Self {
        let tests: Vec<TestCase> = self.tests.iter().filter(|t| keep(t)).cloned().collect();
        let covered = tests
            .iter()
            .filter_map(|t| {
                self.covered
                    .get(&t.full_name)
                    .map(|s| (t.full_name.clone(), s.clone()))
            })
            .collect();
        Self { tests, covered }
    }
}

/// Opaque commit identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommitId(pub String);

impl CommitId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CommitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for CommitId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for CommitId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Strict total order on commits: timestamp first, ties resolved by the
/// topological sequence number captured at ingestion (larger is newer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SortKey {
    pub time: i64,
    pub order: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: u32,
    pub old_lines: u32,
    pub new_start: u32,
    pub new_lines: u32,
}

/// One file touched by a commit. `None` on either side means the file did
/// not exist there (added or deleted).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    #[serde(default)]
    pub hunks: Vec<Hunk>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub id: CommitId,
    pub time: i64,
    pub order: u64,
    #[serde(default)]
    pub message: String,
    #[serde(default)]
    pub changed_files: Vec<FileChange>,
}

impl CommitRecord {
    pub fn new(id: impl Into<String>, time: i64, order: u64) -> Self {
        Self {
            id: CommitId::new(id),
            time,
            order,
            message: String::new(),
            changed_files: Vec::new(),
        }
    }

    pub fn key(&self) -> SortKey {
        SortKey {
            time: self.time,
            order: self.order,
        }
    }

    /// Folds another view of the same commit into this one, keeping the
    /// union of file changes.
    pub fn merge_changes(&mut self, other: &CommitRecord) {
        for change in &other.changed_files {
            match self
                .changed_files
                .iter_mut()
                .find(|c| c.old_path == change.old_path && c.new_path == change.new_path)
            {
                Some(existing) => {
                    for h in &change.hunks {
                        if !existing.hunks.contains(h) {
                            existing.hunks.push(*h);
                        }
                    }
                }
                None => self.changed_files.push(change.clone()),
            }
        }
        if self.message.is_empty() {
            self.message.clone_from(&other.message);
        }
    }
}

/// The `Evolve` relation: for each element, the commits in its change
/// history, newest first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvolveMap {
    history: BTreeMap<CodeElement, Vec<CommitId>>,
    commits: BTreeMap<CommitId, CommitRecord>,
}

impl EvolveMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a commit. A commit already present keeps its sort key and
    /// absorbs the file changes of `record`.
    pub fn add_commit(&mut self, record: CommitRecord) -> Result<()> {
        match self.commits.get_mut(&record.id) {
            Some(existing) => {
                if existing.key() != record.key() {
                    return Err(Error::InvalidHistory(format!(
                        "commit {} registered with two different sort keys",
                        record.id
                    )));
                }
                existing.merge_changes(&record);
            }
            None => {
                self.commits.insert(record.id.clone(), record);
            }
        }
        Ok(())
    }

    /// Sets the history of `element`. Every id must be a registered commit
    /// and the list must be strictly descending by sort key.
    pub fn set_history(&mut self, element: CodeElement, history: Vec<CommitId>) -> Result<()> {
        let mut previous: Option<SortKey> = None;
        for id in &history {
            let key = self
                .commits
                .get(id)
                .map(CommitRecord::key)
                .ok_or_else(|| Error::InvalidHistory(format!("{element}: unknown commit {id}")))?;
            if let Some(prev) = previous {
                if key >= prev {
                    return Err(Error::InvalidHistory(format!(
                        "{element}: history is not strictly newest-first at {id}"
                    )));
                }
            }
            previous = Some(key);
        }
        self.history.insert(element, history);
        Ok(())
    }

    pub fn history(&self, element: &CodeElement) -> Option<&[CommitId]> {
        self.history.get(element).map(Vec::as_slice)
    }

    pub fn contains(&self, commit: &CommitId, element: &CodeElement) -> bool {
        self.history(element).is_some_and(|h| h.contains(commit))
    }

    pub fn commit(&self, id: &CommitId) -> Option<&CommitRecord> {
        self.commits.get(id)
    }

    pub fn key(&self, id: &CommitId) -> Option<SortKey> {
        self.commits.get(id).map(CommitRecord::key)
    }

    pub fn commits(&self) -> impl Iterator<Item = &CommitRecord> {
        self.commits.values()
    }

    pub fn histories(&self) -> impl Iterator<Item = (&CodeElement, &[CommitId])> {
        self.history.iter().map(|(e, h)| (e, h.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }
}

/// Elements covered by at least one failing test.
pub fn suspicious_elements(cov: &CoverageMatrix) -> Result<BTreeSet<CodeElement>> {
    if !cov.has_failure() {
        return Err(Error::NoFailingTests);
    }
    Ok(cov
        .failing_tests()
        .flat_map(|t| cov.covered_by(&t.full_name))
        .cloned()
        .collect())
}

/// Commits appearing in the history of at least one suspicious element.
pub fn candidate_commits(
    suspicious: &BTreeSet<CodeElement>,
    evolve: &EvolveMap,
) -> Result<BTreeSet<CommitId>> {
    let mut out = BTreeSet::new();
    for e in suspicious {
        let history = evolve
            .history(e)
            .ok_or_else(|| Error::MissingHistory(e.clone()))?;
        out.extend(history.iter().cloned());
    }
    Ok(out)
}
