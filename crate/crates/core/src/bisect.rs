//! Score-weighted bisection over a newest-first commit sequence, the
//! standard midpoint bisection it generalises, and the oracles that decide
//! whether a snapshot contains the bug.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::vcs_binary;
use crate::model::{CommitId, SortKey};
use crate::scalar::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Good,
    Bad,
}

/// One oracle call. Serialized as a trace line `{"pivot":..,"verdict":..}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub pivot: CommitId,
    pub verdict: Verdict,
}

/// Decides whether the snapshot at a commit exhibits the failure.
pub trait Oracle {
    fn contains_bug(&mut self, commit: &CommitId) -> Result<Verdict>;
}

impl<O: Oracle + ?Sized> Oracle for &mut O {
    fn contains_bug(&mut self, commit: &CommitId) -> Result<Verdict> {
        (**self).contains_bug(commit)
    }
}

/// Search window over `ordered` (index 0 newest). `ordered[bad]` is known
/// bad; `good` is known good, where `good == ordered.len()` stands for the
/// snapshot just before the oldest candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisectState {
    pub ordered: Vec<CommitId>,
    pub bad: usize,
    pub good: usize,
    pub iterations: usize,
    pub trace: Vec<Probe>,
    pub pivots: Vec<usize>,
}

impl BisectState {
    pub fn new(ordered: Vec<CommitId>) -> Result<Self> {
        if ordered.is_empty() {
            return Err(Error::EmptySpace);
        }
        let good = ordered.len();
        Ok(Self {
            ordered,
            bad: 0,
            good,
            iterations: 0,
            trace: Vec::new(),
            pivots: Vec::new(),
        })
    }

    pub fn is_done(&self) -> bool {
        self.good <= self.bad + 1
    }

    /// Probes `ordered[pivot]` and narrows the window.
    pub fn probe(&mut self, pivot: usize, oracle: &mut dyn Oracle) -> Result<Verdict> {
        assert!(
            self.bad < pivot && pivot < self.good,
            "pivot {pivot} outside ({}, {})",
            self.bad,
            self.good
        );
        let verdict = oracle.contains_bug(&self.ordered[pivot])?;
        self.iterations += 1;
        self.pivots.push(pivot);
        self.trace.push(Probe {
            pivot: self.ordered[pivot].clone(),
            verdict,
        });
        match verdict {
            Verdict::Bad => self.bad = pivot,
            Verdict::Good => self.good = pivot,
        }
        Ok(verdict)
    }

    pub fn culprit(&self) -> &CommitId {
        &self.ordered[self.bad]
    }

    fn into_outcome(self) -> BisectOutcome {
        BisectOutcome {
            bic: self.ordered[self.bad].clone(),
            iterations: self.iterations,
            trace: self.trace,
            pivots: self.pivots,
        }
    }

    /// Single-candidate spaces: optionally spend one probe confirming it.
    fn confirm_single(&mut self, oracle: &mut dyn Oracle) -> Result<()> {
        let verdict = oracle.contains_bug(&self.ordered[0])?;
        self.iterations += 1;
        self.pivots.push(0);
        self.trace.push(Probe {
            pivot: self.ordered[0].clone(),
            verdict,
        });
        if verdict == Verdict::Good {
            return Err(Error::InconsistentOracle {
                trace: self.trace.clone(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BisectOptions {
    /// Probe the lone candidate of a one-commit space instead of returning
    /// it unchecked.
    pub confirm_single: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BisectOutcome {
    pub bic: CommitId,
    pub iterations: usize,
    pub trace: Vec<Probe>,
    #[serde(skip)]
    pub pivots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<W> {
    pub id: CommitId,
    pub key: SortKey,
    pub score: W,
}

impl<W> Candidate<W> {
    pub fn new(id: impl Into<String>, key: SortKey, score: W) -> Self {
        Self {
            id: CommitId::new(id),
            key,
            score,
        }
    }
}

/// Index in `(bad, good)` minimising `|S(bad, i-1) - S(i, good-1)|`, where
/// `prefix[k]` is the total weight of the first `k` commits. Near-equal
/// imbalances resolve to the smallest index.
pub fn weighted_pivot<W: Weight>(prefix: &[W], bad: usize, good: usize) -> usize {
    debug_assert!(good > bad + 1 && good < prefix.len());
    let imbalance = |i: usize| {
        let left = prefix[i] - prefix[bad];
        let right = prefix[good] - prefix[i];
        left.abs_diff(right)
    };
    let mut best = W::zero();
    let mut first = true;
    for i in bad + 1..good {
        let d = imbalance(i);
        if first || d < best {
            best = d;
            first = false;
        }
    }
    // Rounding error of a difference of prefix sums grows with the largest
    // prefix involved, not with the width of the current range.
    let tol = W::tie_tolerance(prefix[good], good);
    (bad + 1..good)
        .find(|&i| imbalance(i) <= best + tol)
        .expect("non-empty pivot range")
}

fn newest_first<T: Clone>(items: &[T], key: impl Fn(&T) -> SortKey) -> Vec<T> {
    let mut v = items.to_vec();
    v.sort_by(|a, b| key(b).cmp(&key(a)));
    v
}

/// Bisection whose pivot halves the remaining commit score.
/// Commits with non-positive score are dropped first.
pub fn weighted_bisect<W: Weight>(
    commits: &[Candidate<W>],
    oracle: &mut dyn Oracle,
    opts: BisectOptions,
) -> Result<BisectOutcome> {
    let positive: Vec<Candidate<W>> = commits
        .iter()
        .filter(|c| c.score > W::zero())
        .cloned()
        .collect();
    let ordered = newest_first(&positive, |c| c.key);
    let mut prefix = Vec::with_capacity(ordered.len() + 1);
    prefix.push(W::zero());
    for c in &ordered {
        let last = *prefix.last().expect("seeded");
        prefix.push(last + c.score);
    }
    let mut state = BisectState::new(ordered.into_iter().map(|c| c.id).collect())?;
    if state.ordered.len() == 1 && opts.confirm_single {
        state.confirm_single(oracle)?;
    }
    while !state.is_done() {
        let pivot = weighted_pivot(&prefix, state.bad, state.good);
        state.probe(pivot, oracle)?;
    }
    Ok(state.into_outcome())
}

/// Midpoint bisection over all given commits.
pub fn standard_bisect(
    commits: &[(CommitId, SortKey)],
    oracle: &mut dyn Oracle,
    opts: BisectOptions,
) -> Result<BisectOutcome> {
    let ordered = newest_first(commits, |c| c.1);
    let mut state = BisectState::new(ordered.into_iter().map(|c| c.0).collect())?;
    if state.ordered.len() == 1 && opts.confirm_single {
        state.confirm_single(oracle)?;
    }
    while !state.is_done() {
        let pivot = (state.bad + state.good) / 2;
        state.probe(pivot, oracle)?;
    }
    Ok(state.into_outcome())
}

/// Precomputed verdicts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TableOracle {
    verdicts: HashMap<CommitId, Verdict>,
}

impl TableOracle {
    pub fn new(verdicts: impl IntoIterator<Item = (CommitId, Verdict)>) -> Self {
        Self {
            verdicts: verdicts.into_iter().collect(),
        }
    }

    /// Verdicts of a monotone history whose bug was introduced by `bic`:
    /// `bic` and everything newer is bad, everything older is good.
    pub fn planted(newest_first: &[CommitId], bic: &CommitId) -> Result<Self> {
        let at = newest_first
            .iter()
            .position(|c| c == bic)
            .ok_or_else(|| Error::UnknownCommit(bic.to_string()))?;
        Ok(Self::new(newest_first.iter().enumerate().map(|(i, c)| {
            (c.clone(), if i <= at { Verdict::Bad } else { Verdict::Good })
        })))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<verdict table>".into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Checks that along `newest_first` no good verdict precedes a bad one
    /// further back in time.
    pub fn check_monotone(&self, newest_first: &[CommitId]) -> Result<()> {
        let mut last_good: Option<&CommitId> = None;
        for c in newest_first {
            match (self.verdicts.get(c), last_good) {
                (Some(Verdict::Good), _) => last_good = Some(c),
                (Some(Verdict::Bad), Some(g)) => {
                    return Err(Error::InconsistentOracle {
                        trace: vec![
                            Probe {
                                pivot: g.clone(),
                                verdict: Verdict::Good,
                            },
                            Probe {
                                pivot: c.clone(),
                                verdict: Verdict::Bad,
                            },
                        ],
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl Oracle for TableOracle {
    fn contains_bug(&mut self, commit: &CommitId) -> Result<Verdict> {
        self.verdicts
            .get(commit)
            .copied()
            .ok_or_else(|| Error::OracleAborted {
                commit: commit.clone(),
                reason: "no verdict recorded".into(),
            })
    }
}

/// Runs a shell command against a scratch worktree checked out at the
/// probed commit: exit 0 is good, exit 1 is bad, anything else aborts.
/// `{commit}` in the template is replaced by the commit id.
pub struct CommandOracle {
    repo: PathBuf,
    template: String,
    scratch: Option<tempfile::TempDir>,
}

impl CommandOracle {
    pub fn new(repo: impl Into<PathBuf>, template: impl Into<String>) -> Self {
        Self {
            repo: repo.into(),
            template: template.into(),
            scratch: None,
        }
    }

    fn worktree(&self) -> Option<PathBuf> {
        self.scratch.as_ref().map(|d| d.path().join("wt"))
    }

    fn checkout(&mut self, commit: &CommitId) -> Result<PathBuf> {
        let vcs = vcs_binary();
        let status = if let Some(wt) = self.worktree() {
            Command::new(&vcs)
                .arg("-C")
                .arg(&wt)
                .args(["checkout", "-q", "--force", "--detach", commit.as_str()])
                .output()
        } else {
            let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
            let wt = dir.path().join("wt");
            self.scratch = Some(dir);
            Command::new(&vcs)
                .arg("-C")
                .arg(&self.repo)
                .args(["worktree", "add", "-q", "--detach"])
                .arg(&wt)
                .arg(commit.as_str())
                .output()
        }
        .map_err(|e| Error::Vcs(format!("cannot run {vcs}: {e}")))?;
        if !status.status.success() {
            return Err(Error::Vcs(format!(
                "checkout of {commit} failed: {}",
                String::from_utf8_lossy(&status.stderr).trim()
            )));
        }
        Ok(self.worktree().expect("worktree created"))
    }
}

impl Oracle for CommandOracle {
    fn contains_bug(&mut self, commit: &CommitId) -> Result<Verdict> {
        let wt = self.checkout(commit)?;
        let cmd = self.template.replace("{commit}", commit.as_str());
        let status = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .current_dir(&wt)
            .env("CULPRIT_COMMIT", commit.as_str())
            .status()
            .map_err(|e| Error::io(&wt, e))?;
        match status.code() {
            Some(0) => Ok(Verdict::Good),
            Some(1) => Ok(Verdict::Bad),
            code => Err(Error::OracleAborted {
                commit: commit.clone(),
                reason: format!("command `{cmd}` exited with {code:?}"),
            }),
        }
    }
}

impl Drop for CommandOracle {
    fn drop(&mut self) {
        if let Some(wt) = self.worktree() {
            let _ = Command::new(vcs_binary())
                .arg("-C")
                .arg(&self.repo)
                .args(["worktree", "remove", "--force"])
                .arg(&wt)
                .output();
        }
    }
}

impl CommandOracle {
    pub fn repo(&self) -> &Path {
        &self.repo
    }
}

/// Asks a human for each verdict: answers are `good`, `bad` or `abort`
/// (or their first letter). End of input aborts.
pub struct InteractiveOracle<R, W> {
    input: R,
    prompt: W,
}

impl<R: BufRead, W: Write> InteractiveOracle<R, W> {
    pub fn new(input: R, prompt: W) -> Self {
        Self { input, prompt }
    }
}

impl<R: BufRead, W: Write> Oracle for InteractiveOracle<R, W> {
    fn contains_bug(&mut self, commit: &CommitId) -> Result<Verdict> {
        let aborted = |reason: &str| Error::OracleAborted {
            commit: commit.clone(),
            reason: reason.to_owned(),
        };
        loop {
            write!(self.prompt, "commit {commit}: good/bad/abort? ")
                .and_then(|_| self.prompt.flush())
                .map_err(|e| Error::io("<prompt>", e))?;
            let mut line = String::new();
            let n = self
                .input
                .read_line(&mut line)
                .map_err(|e| Error::io("<stdin>", e))?;
            if n == 0 {
                return Err(aborted("end of input"));
            }
            match line.trim().to_ascii_lowercase().as_str() {
                "good" | "g" => return Ok(Verdict::Good),
                "bad" | "b" => return Ok(Verdict::Bad),
                "abort" | "a" | "q" | "quit" => return Err(aborted("aborted by user")),
                _ => {
                    let _ = writeln!(self.prompt, "please answer good, bad or abort");
                }
            }
        }
    }
}

/// Oracle-call counts for one planted culprit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostComparison {
    /// Weighted bisection over the positive-score search space.
    pub weighted: usize,
    /// Midpoint bisection over the same space.
    pub standard_reduced: usize,
    /// Midpoint bisection over the whole history.
    pub standard_full: usize,
}

/// Simulates the three bisection variants against a monotone verdict table
/// planted at `planted`.
pub fn compare_costs<W: Weight>(
    space: &[Candidate<W>],
    full_history: &[(CommitId, SortKey)],
    planted: &CommitId,
) -> Result<CostComparison> {
    let opts = BisectOptions::default();
    let positive: Vec<(CommitId, SortKey)> = space
        .iter()
        .filter(|c| c.score > W::zero())
        .map(|c| (c.id.clone(), c.key))
        .collect();
    let ids = |v: &[(CommitId, SortKey)]| -> Vec<CommitId> {
        newest_first(v, |c| c.1).into_iter().map(|c| c.0).collect()
    };

    let mut oracle = TableOracle::planted(&ids(&positive), planted)?;
    let weighted = weighted_bisect(space, &mut oracle, opts)?;
    let standard_reduced = standard_bisect(&positive, &mut oracle, opts)?;
    let mut full_oracle = TableOracle::planted(&ids(full_history), planted)?;
    let standard_full = standard_bisect(full_history, &mut full_oracle, opts)?;
    debug_assert_eq!(&weighted.bic, planted);
    Ok(CostComparison {
        weighted: weighted.iterations,
        standard_reduced: standard_reduced.iterations,
        standard_full: standard_full.iterations,
    })
}
