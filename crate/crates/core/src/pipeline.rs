//! The three ranking stages wired together.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::coverage::select_relevant_tests;
use crate::error::{Result, Stage, StageExt};
use crate::history::{build_evolve_map, VcsAdapter};
use crate::model::{candidate_commits, suspicious_elements, CodeElement, CommitId, CoverageMatrix, EvolveMap};
use crate::sbfl::{ochiai, SuspiciousnessMap};
use crate::scalar::Scalar;
use crate::scorer::{score_commits, ScoreReport, VotingConfig};
use crate::style::{reduce_search_space, StyleChangeDetector, StyleFilterOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub voting: VotingConfig,
    /// Use the whole candidate set as the search space.
    pub skip_stage2: bool,
    /// Drop passing tests unrelated to the failing tests' classes before
    /// computing suspiciousness.
    pub select_relevant: bool,
    /// Keep per-commit vote provenance in the report.
    pub explain: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            voting: VotingConfig::default(),
            skip_stage2: false,
            select_relevant: true,
            explain: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RankOutcome<S> {
    pub suspicious: BTreeSet<CodeElement>,
    pub evolve: EvolveMap,
    /// Every commit in the history of a suspicious element.
    pub candidates: BTreeSet<CommitId>,
    pub style: StyleFilterOutcome,
    /// Candidates left after style filtering.
    pub search_space: BTreeSet<CommitId>,
    pub susp: SuspiciousnessMap<S>,
    pub report: ScoreReport<S>,
}

/// Runs the ranking stages against a VCS adapter. `detector` is consulted
/// unless stage 2 is skipped; `None` keeps every candidate.
pub fn rank<S: Scalar>(
    coverage: &CoverageMatrix,
    adapter: &dyn VcsAdapter,
    until: &str,
    detector: Option<&dyn StyleChangeDetector>,
    workers: usize,
    opts: &PipelineOptions,
) -> Result<RankOutcome<S>> {
    opts.voting.validate().stage(Stage::Scoring)?;
    let suspicious = suspicious_elements(coverage).stage(Stage::SearchSpace)?;
    let evolve = build_evolve_map(adapter, &suspicious, until, workers).stage(Stage::History)?;
    rank_with_history(coverage, evolve, detector, opts)
}

/// Runs the ranking stages on an already mined history.
pub fn rank_with_history<S: Scalar>(
    coverage: &CoverageMatrix,
    evolve: EvolveMap,
    detector: Option<&dyn StyleChangeDetector>,
    opts: &PipelineOptions,
) -> Result<RankOutcome<S>> {
    opts.voting.validate().stage(Stage::Scoring)?;
    let suspicious = suspicious_elements(coverage).stage(Stage::SearchSpace)?;
    let candidates = candidate_commits(&suspicious, &evolve).stage(Stage::SearchSpace)?;

    let style = match (opts.skip_stage2, detector) {
        (false, Some(d)) => reduce_search_space(&candidates, &evolve, d),
        _ => StyleFilterOutcome {
            kept: candidates.clone(),
            ..StyleFilterOutcome::default()
        },
    };
    let search_space = style.kept.clone();

    let matrix = if opts.select_relevant {
        select_relevant_tests(coverage).stage(Stage::Localisation)?
    } else {
        coverage.clone()
    };
    let susp = ochiai::<S>(&matrix).stage(Stage::Localisation)?;
    let report = score_commits(&suspicious, &susp, &evolve, &search_space, &opts.voting, opts.explain)
        .stage(Stage::Scoring)?;

    Ok(RankOutcome {
        suspicious,
        evolve,
        candidates,
        style,
        search_space,
        susp,
        report,
    })
}
