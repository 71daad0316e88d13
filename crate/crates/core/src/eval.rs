//! Ranking and bisection evaluation over labelled subjects.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bisect::{compare_costs, Candidate, CostComparison};
use crate::coverage::{load_coverage, CoverageFile, CoverageFormat};
use crate::error::{Error, Result, Stage, StageExt};
use crate::history::SerializedHistory;
use crate::model::{CommitId, CoverageMatrix, SortKey};
use crate::pipeline::{rank_with_history, PipelineOptions, RankOutcome};
use crate::scalar::Scalar;
use crate::scorer::{ScoreReport, VotingConfig, VotingMode};
use crate::style::{PrecomputedStyle, StyleFilterOutcome};
use crate::synth::SyntheticSubject;

/// Mean reciprocal rank.
pub fn mrr<S: Scalar>(ranks: &[S]) -> Result<S> {
    if ranks.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut total = S::zero();
    for &r in ranks {
        if !(r.is_finite() && r >= S::one()) {
            return Err(Error::InvalidRank(r.to_f64().unwrap_or(f64::NAN)));
        }
        total += r.recip();
    }
    Ok(total / S::from_count(ranks.len()))
}

/// Number of ranks within the top `n`.
pub fn accuracy_at<S: Scalar>(ranks: &[S], n: usize) -> usize {
    let n = S::from_count(n);
    ranks.iter().filter(|&&r| r <= n).count()
}

/// Expected rank of the true commit when `space_size` commits are shuffled.
pub fn random_baseline_expected_rank<S: Scalar>(space_size: usize) -> Result<S> {
    if space_size == 0 {
        return Err(Error::EmptyInput);
    }
    Ok((S::one() + S::from_count(space_size)) / S::from_count(2))
}

/// Cut-offs reported for accuracy.
pub const ACCURACY_AT: [usize; 5] = [1, 2, 3, 5, 10];

/// A failure with a known bug-inducing commit.
#[derive(Debug, Clone)]
pub struct LabelledSubject {
    pub id: String,
    pub coverage: CoverageMatrix,
    pub history: SerializedHistory,
    pub true_bic: CommitId,
}

impl LabelledSubject {
    /// Reads `coverage.json` (or an LCOV directory `coverage/`),
    /// `history.json` and `bic.txt` from `dir`. The id is the directory name.
    pub fn load(dir: &Path) -> Result<Self> {
        let id = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let json = dir.join("coverage.json");
        let coverage = if json.is_file() {
            load_coverage(&CoverageFile::new(json, CoverageFormat::MatrixJson))?
        } else {
            load_coverage(&CoverageFile::new(dir.join("coverage"), CoverageFormat::LcovPerTest))?
        };
        let history = SerializedHistory::load(&dir.join("history.json"))?;
        let bic_path = dir.join("bic.txt");
        let label = fs::read_to_string(&bic_path).map_err(|e| Error::io(&bic_path, e))?;
        let true_bic = label
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .map(CommitId::new)
            .ok_or_else(|| Error::Parse {
                path: bic_path.display().to_string(),
                line: 1,
                column: 1,
                message: "no commit id".into(),
            })?;
        Self::new(id, coverage, history, true_bic)
    }

    /// Validates that `true_bic` belongs to the history.
    pub fn new(
        id: impl Into<String>,
        coverage: CoverageMatrix,
        history: SerializedHistory,
        true_bic: CommitId,
    ) -> Result<Self> {
        if !history.commits().iter().any(|c| c.id == true_bic) {
            return Err(Error::UnknownCommit(true_bic.to_string()));
        }
        Ok(Self {
            id: id.into(),
            coverage,
            history,
            true_bic,
        })
    }

    pub fn from_synthetic(s: &SyntheticSubject) -> Result<Self> {
        let text = SerializedHistory::to_json(&s.evolve, &s.all_commits, &Default::default());
        let history = SerializedHistory::from_json(&text, &s.id)?;
        Self::new(s.id.clone(), s.coverage.clone(), history, s.bic.clone())
    }
}

/// Loads every subdirectory of `root`, sorted by name. Subjects that fail to
/// load are returned as errors alongside their id.
pub fn load_dataset(root: &Path) -> Result<Vec<(String, Result<LabelledSubject>)>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs
        .into_par_iter()
        .map(|d| {
            let id = d.file_name().unwrap_or_default().to_string_lossy().into_owned();
            (id, LabelledSubject::load(&d))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub voting: VotingConfig,
    pub select_relevant: bool,
    /// Also rank with stage 2 skipped and with each alternative voting mode.
    pub ablations: bool,
    /// Simulate bisection costs for each subject.
    pub costs: bool,
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            voting: VotingConfig::default(),
            select_relevant: true,
            ablations: true,
            costs: true,
            workers: 1,
        }
    }
}

pub const METHOD: &str = "culprit";
pub const RANDOM: &str = "random";
pub const LOWER_BOUND: &str = "lower-bound";

fn variants(config: &EvalConfig) -> Vec<(&'static str, PipelineOptions)> {
    let base = PipelineOptions {
        voting: config.voting,
        skip_stage2: false,
        select_relevant: config.select_relevant,
        explain: false,
    };
    let mut out = vec![(METHOD, base)];
    if config.ablations {
        out.push((
            "skip-stage2",
            PipelineOptions {
                skip_stage2: true,
                ..base
            },
        ));
        for (name, mode) in [
            ("equal", VotingMode::Equal),
            ("score-only", VotingMode::ScoreOnly),
            ("max-aggr", VotingMode::MaxAggr),
        ] {
            out.push((
                name,
                PipelineOptions {
                    voting: config.voting.with_mode(mode),
                    ..base
                },
            ));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubjectResult {
    pub id: String,
    pub true_bic: CommitId,
    /// |C|, the whole history.
    pub history_size: usize,
    /// |C_F|.
    pub candidates: usize,
    /// |C_BIC|.
    pub search_space: usize,
    pub bic_in_space: bool,
    /// Rank of the true commit per method. A commit outside the ranked
    /// space is given rank |C|.
    pub ranks: BTreeMap<String, f64>,
    pub cost: Option<CostComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_skipped: Option<String>,
}

/// Per-subject artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubjectTrace {
    pub result: SubjectResult,
    pub style: StyleFilterOutcome,
    pub report: ScoreReport<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubjectFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub subjects: usize,
    pub mrr: f64,
    /// `(n, count)` for each cut-off in [`ACCURACY_AT`].
    pub accuracy: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub lower_bound_le_random: bool,
    pub random_le_method: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub subjects: usize,
    pub mean_weighted: f64,
    pub mean_standard_reduced: f64,
    pub mean_standard_full: f64,
    /// Subjects where weighted bisection needs fewer probes than midpoint
    /// bisection over the same space.
    pub weighted_fewer: usize,
    pub weighted_more: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: EvalConfig,
    pub rows: Vec<MethodRow>,
    pub dominance: Option<Dominance>,
    pub costs: Option<CostSummary>,
    pub subjects: Vec<SubjectResult>,
    pub failures: Vec<SubjectFailure>,
    #[serde(skip)]
    pub traces: Vec<SubjectTrace>,
}

impl BenchmarkReport {
    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,subjects,mrr");
        for n in ACCURACY_AT {
            let _ = write!(out, ",acc@{n}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{},{:.6}", r.method, r.subjects, r.mrr);
            for (_, c) in &r.accuracy {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }

    /// One line per subject: sizes, ranks and bisection costs.
    pub fn subjects_csv(&self) -> String {
        let methods: Vec<&str> = self.rows.iter().map(|r| r.method.as_str()).collect();
        let mut out = String::from("subject,history,candidates,search_space");
        for m in &methods {
            let _ = write!(out, ",rank:{m}");
        }
        out.push_str(",weighted,standard_reduced,standard_full\n");
        for s in &self.subjects {
            let _ = write!(out, "{},{},{},{}", s.id, s.history_size, s.candidates, s.search_space);
            for m in &methods {
                let _ = write!(out, ",{}", s.ranks.get(*m).copied().unwrap_or(f64::NAN));
            }
            match s.cost {
                Some(c) => {
                    let _ = writeln!(out, ",{},{},{}", c.weighted, c.standard_reduced, c.standard_full);
                }
                None => out.push_str(",,,\n"),
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("benchmark report serializes")
    }

    /// Writes `results.csv`, `subjects.csv`, `results.json` and
    /// `trace/<id>.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let trace_dir = dir.join("trace");
        fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;
        let put = |p: PathBuf, text: String| fs::write(&p, text).map_err(|e| Error::io(&p, e));
        put(dir.join("results.csv"), self.to_csv())?;
        put(dir.join("subjects.csv"), self.subjects_csv())?;
        put(dir.join("results.json"), self.to_json())?;
        for t in &self.traces {
            put(
                trace_dir.join(format!("{}.json", t.result.id)),
                serde_json::to_string_pretty(t).expect("trace serializes"),
            )?;
        }
        Ok(())
    }
}

fn bic_rank(report: &ScoreReport<f64>, bic: &CommitId, fallback: usize) -> f64 {
    report.rank_of(bic).unwrap_or(fallback) as f64
}

/// Evaluates one subject under every configured method.
pub fn evaluate_subject(subject: &LabelledSubject, config: &EvalConfig) -> Result<SubjectTrace> {
    let detector = PrecomputedStyle(subject.history.style_changes().clone());
    let history_size = subject.history.commits().len();
    let mut ranks = BTreeMap::new();
    let mut main: Option<RankOutcome<f64>> = None;
    for (name, opts) in variants(config) {
        let out: RankOutcome<f64> =
            rank_with_history(&subject.coverage, subject.history.evolve().clone(), Some(&detector), &opts)?;
        ranks.insert(name.to_owned(), bic_rank(&out.report, &subject.true_bic, history_size));
        if main.is_none() {
            main = Some(out);
        }
    }
    let main = main.expect("method variant always runs");
    let bic_in_space = main.search_space.contains(&subject.true_bic);
    let n = if bic_in_space {
        main.search_space.len()
    } else {
        history_size
    };
    ranks.insert(RANDOM.to_owned(), random_baseline_expected_rank::<f64>(n)?);
    ranks.insert(LOWER_BOUND.to_owned(), n as f64);

    let (cost, cost_skipped) = if !config.costs {
        (None, None)
    } else if main.report.score_of(&subject.true_bic) > 0.0 {
        let space: Vec<Candidate<f64>> = main
            .report
            .ranked
            .iter()
            .map(|r| Candidate {
                id: r.commit.clone(),
                key: r.key(),
                score: r.score,
            })
            .collect();
        let full: Vec<(CommitId, SortKey)> = subject
            .history
            .commits()
            .iter()
            .map(|c| (c.id.clone(), c.key()))
            .collect();
        (
            Some(compare_costs(&space, &full, &subject.true_bic).stage(Stage::Bisection)?),
            None,
        )
    } else {
        (None, Some("true commit has no positive score".to_owned()))
    };

    Ok(SubjectTrace {
        result: SubjectResult {
            id: subject.id.clone(),
            true_bic: subject.true_bic.clone(),
            history_size,
            candidates: main.candidates.len(),
            search_space: main.search_space.len(),
            bic_in_space,
            ranks,
            cost,
            cost_skipped,
        },
        style: main.style,
        report: main.report,
    })
}

/// Evaluates every subject in parallel. Subjects that failed to load or
/// evaluate are listed under `failures`; the rest are aggregated in id order.
pub fn run_benchmark(
    subjects: Vec<(String, Result<LabelledSubject>)>,
    config: &EvalConfig,
) -> Result<BenchmarkReport> {
    config.voting.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let mut results: Vec<(String, Result<SubjectTrace>)> = pool.install(|| {
        subjects
            .into_par_iter()
            .map(|(id, s)| {
                let r = s.and_then(|s| evaluate_subject(&s, config).stage(Stage::Evaluation));
                (id, r)
            })
            .collect()
    });
    results.sort_by(|a, b| a.0.cmp(&b.0));

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(t) => traces.push(t),
            Err(e) => failures.push(SubjectFailure {
                id,
                error: e.to_string(),
            }),
        }
    }
    let subjects: Vec<SubjectResult> = traces.iter().map(|t| t.result.clone()).collect();

    let mut methods: Vec<String> = variants(config).into_iter().map(|(n, _)| n.to_owned()).collect();
    methods.push(RANDOM.into());
    methods.push(LOWER_BOUND.into());
    let mut rows = Vec::new();
    if !subjects.is_empty() {
        for m in methods {
            let ranks: Vec<f64> = subjects.iter().map(|s| s.ranks[&m]).collect();
            rows.push(MethodRow {
                subjects: ranks.len(),
                mrr: mrr(&ranks)?,
                accuracy: ACCURACY_AT.iter().map(|&n| (n, accuracy_at(&ranks, n))).collect(),
                method: m,
            });
        }
    }
    let dominance = (!rows.is_empty()).then(|| {
        let get = |m: &str| rows.iter().find(|r| r.method == m).map_or(0.0, |r| r.mrr);
        Dominance {
            lower_bound_le_random: get(LOWER_BOUND) <= get(RANDOM),
            random_le_method: get(RANDOM) <= get(METHOD),
        }
    });

    let costed: Vec<CostComparison> = subjects.iter().filter_map(|s| s.cost).collect();
    let costs = (!costed.is_empty()).then(|| {
        let n = costed.len() as f64;
        let mean = |f: fn(&CostComparison) -> usize| costed.iter().map(|c| f(c) as f64).sum::<f64>() / n;
        CostSummary {
            subjects: costed.len(),
            mean_weighted: mean(|c| c.weighted),
            mean_standard_reduced: mean(|c| c.standard_reduced),
            mean_standard_full: mean(|c| c.standard_full),
            weighted_fewer: costed.iter().filter(|c| c.weighted < c.standard_reduced).count(),
            weighted_more: costed.iter().filter(|c| c.weighted > c.standard_reduced).count(),
        }
    });

    Ok(BenchmarkReport {
        config: *config,
        rows,
        dominance,
        costs,
        subjects,
        failures,
        traces,
    })
}
