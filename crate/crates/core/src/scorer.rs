//! Commit scoring: element votes distributed over their histories with a
//! per-element depth decay, plus the baseline aggregation modes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CodeElement, CommitId, EvolveMap, SortKey};
use crate::sbfl::{rank_elements, tied_ranks, SuspiciousnessMap, TieBreak};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VotingMode {
    /// Rank-based voting power.
    #[default]
    Vote,
    /// Every covered element votes 1.
    Equal,
    /// Every covered element votes its raw suspiciousness.
    ScoreOnly,
    /// Highest suspiciousness among the touched elements, no decay.
    MaxAggr,
}

impl FromStr for VotingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "vote" => Ok(VotingMode::Vote),
            "equal" => Ok(VotingMode::Equal),
            "score-only" | "score" => Ok(VotingMode::ScoreOnly),
            "max-aggr" | "max" => Ok(VotingMode::MaxAggr),
            other => Err(Error::InvalidConfig(format!("unknown voting mode `{other}`"))),
        }
    }
}

/// Scoring hyperparameters. `alpha` and `tau` only matter in
/// [`VotingMode::Vote`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VotingConfig {
    pub alpha: u8,
    pub tau: TieBreak,
    pub lambda: f64,
    #[serde(default)]
    pub mode: VotingMode,
}

impl Default for VotingConfig {
    fn default() -> Self {
        Self {
            alpha: 0,
            tau: TieBreak::Max,
            lambda: 0.1,
            mode: VotingMode::Vote,
        }
    }
}

impl VotingConfig {
    /// Preset for histories where many commits land on the same day:
    /// score numerator, max ties, no decay.
    pub fn batch() -> Self {
        Self {
            alpha: 1,
            tau: TieBreak::Max,
            lambda: 0.0,
            mode: VotingMode::Vote,
        }
    }

    pub fn with_mode(mut self, mode: VotingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha > 1 {
            return Err(Error::InvalidConfig(format!("alpha must be 0 or 1, got {}", self.alpha)));
        }
        if !(self.lambda.is_finite() && (0.0..1.0).contains(&self.lambda)) {
            return Err(Error::InvalidConfig(format!(
                "lambda must lie in [0, 1), got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Voting power of one element under `config`. Elements without a rank
/// (zero suspiciousness) carry no rank-based vote.
pub fn vote<S: Scalar>(
    element: &CodeElement,
    susp: &SuspiciousnessMap<S>,
    ranks: &BTreeMap<CodeElement, usize>,
    config: &VotingConfig,
) -> S {
    match config.mode {
        VotingMode::Vote => match ranks.get(element) {
            Some(&rank) => {
                let numerator = if config.alpha == 1 {
                    susp.get(element)
                } else {
                    S::one()
                };
                numerator / S::from_count(rank)
            }
            None => S::zero(),
        },
        VotingMode::Equal => S::one(),
        VotingMode::ScoreOnly | VotingMode::MaxAggr => susp.get(element),
    }
}

/// Number of in-space commits in the history of `element` strictly newer
/// than `commit`.
pub fn depth(
    element: &CodeElement,
    commit: &CommitId,
    evolve: &EvolveMap,
    space: &BTreeSet<CommitId>,
) -> usize {
    let (Some(key), Some(history)) = (evolve.key(commit), evolve.history(element)) else {
        return 0;
    };
    history
        .iter()
        .filter(|c| space.contains(*c))
        .filter(|c| evolve.key(c).is_some_and(|k| k > key))
        .count()
}

/// Score of a single commit. Walks every suspicious element; use
/// [`score_commits`] to score a whole search space.
pub fn commit_score<S: Scalar>(
    commit: &CommitId,
    suspicious: &BTreeSet<CodeElement>,
    susp: &SuspiciousnessMap<S>,
    ranks: &BTreeMap<CodeElement, usize>,
    evolve: &EvolveMap,
    space: &BTreeSet<CommitId>,
    config: &VotingConfig,
) -> S {
    if !space.contains(commit) {
        return S::zero();
    }
    let touched = suspicious.iter().filter(|e| evolve.contains(commit, e));
    match config.mode {
        VotingMode::MaxAggr => touched.map(|e| susp.get(e)).fold(S::zero(), S::max),
        _ => {
            let keep = S::one() - S::from_config(config.lambda);
            touched
                .map(|e| {
                    let d = depth(e, commit, evolve, space);
                    vote(e, susp, ranks, config) * keep.powi(d as i32)
                })
                .sum()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRecord<S> {
    pub element: CodeElement,
    pub vote: S,
    pub depth: usize,
    pub contribution: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCommit<S> {
    pub commit: CommitId,
    pub score: S,
    pub rank: usize,
    pub time: i64,
    pub order: u64,
}

impl<S> RankedCommit<S> {
    pub fn key(&self) -> SortKey {
        SortKey {
            time: self.time,
            order: self.order,
        }
    }
}

/// Ranked commits of the search space. Commits not listed score zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport<S> {
    pub config: VotingConfig,
    pub ranked: Vec<RankedCommit<S>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_commit_votes: BTreeMap<CommitId, Vec<VoteRecord<S>>>,
    /// Always true: every commit outside `ranked` has score zero.
    pub zero_tail: bool,
}

impl<S: Scalar> ScoreReport<S> {
    pub fn score_of(&self, commit: &CommitId) -> S {
        self.ranked
            .iter()
            .find(|r| &r.commit == commit)
            .map_or_else(S::zero, |r| r.score)
    }

    pub fn rank_of(&self, commit: &CommitId) -> Option<usize> {
        self.ranked.iter().find(|r| &r.commit == commit).map(|r| r.rank)
    }

    pub fn without_provenance(mut self) -> Self {
        self.per_commit_votes.clear();
        self
    }

    /// `commit,score,rank` rows in ranked order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("commit,score,rank\n");
        for r in &self.ranked {
            let _ = writeln!(out, "{},{},{}", r.commit, r.score, r.rank);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<score report>".into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

/// Sorts by score (descending) and assigns max-tiebreak ranks. Tied commits
/// are listed newest first; that order is for display only.
pub fn rank_commits<S: Scalar>(
    scores: impl IntoIterator<Item = (CommitId, SortKey, S)>,
    config: VotingConfig,
) -> ScoreReport<S> {
    let mut rows: Vec<(CommitId, SortKey, S)> = scores.into_iter().collect();
    rows.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.1.cmp(&a.1))
    });
    let values: Vec<S> = rows.iter().map(|r| r.2).collect();
    let ranks = tied_ranks(&values, TieBreak::Max);
    ScoreReport {
        config,
        ranked: rows
            .into_iter()
            .zip(ranks)
            .map(|((commit, key, score), rank)| RankedCommit {
                commit,
                score,
                rank,
                time: key.time,
                order: key.order,
            })
            .collect(),
        per_commit_votes: BTreeMap::new(),
        zero_tail: true,
    }
}

/// Scores every commit of `space` and ranks them.
///
/// Each element's history is already strictly newest-first, so an element's
/// depth at a commit is the commit's index among the in-space entries of
/// that history.
pub fn score_commits<S: Scalar>(
    suspicious: &BTreeSet<CodeElement>,
    susp: &SuspiciousnessMap<S>,
    evolve: &EvolveMap,
    space: &BTreeSet<CommitId>,
    config: &VotingConfig,
    explain: bool,
) -> Result<ScoreReport<S>> {
    config.validate()?;
    let ranks = match config.mode {
        VotingMode::Vote => match rank_elements(susp, config.tau) {
            Ok(r) => r,
            Err(Error::EmptyDomain) => BTreeMap::new(),
            Err(e) => return Err(e),
        },
        _ => BTreeMap::new(),
    };
    let keep = S::one() - S::from_config(config.lambda);

    let mut votes: BTreeMap<CommitId, Vec<VoteRecord<S>>> =
        space.iter().map(|c| (c.clone(), Vec::new())).collect();
    for e in suspicious {
        let history = evolve
            .history(e)
            .ok_or_else(|| Error::MissingHistory(e.clone()))?;
        let v = vote(e, susp, &ranks, config);
        for (d, c) in history.iter().filter(|c| space.contains(*c)).enumerate() {
            let contribution = match config.mode {
                VotingMode::MaxAggr => v,
                _ => v * keep.powi(d as i32),
            };
            votes.get_mut(c).expect("space commit").push(VoteRecord {
                element: e.clone(),
                vote: v,
                depth: d,
                contribution,
            });
        }
    }

    let mut scored = Vec::with_capacity(votes.len());
    for (c, records) in &votes {
        let key = evolve
            .key(c)
            .ok_or_else(|| Error::UnknownCommit(c.to_string()))?;
        let score = match config.mode {
            VotingMode::MaxAggr => records
                .iter()
                .map(|r| r.contribution)
                .fold(S::zero(), S::max),
            _ => records.iter().map(|r| r.contribution).sum(),
        };
        scored.push((c.clone(), key, score));
    }
    let mut report = rank_commits(scored, *config);
    if explain {
        report.per_commit_votes = votes;
    }
    Ok(report)
}
