//! Acceptance criteria, one PASS/FAIL line each. Every tolerance and
//! sample count is pinned below.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use culprit_core::bisect::{
    compare_costs, standard_bisect, weighted_bisect, BisectOptions, Candidate, TableOracle,
};
use culprit_core::eval::{
    accuracy_at, load_dataset, mrr, random_baseline_expected_rank, run_benchmark, EvalConfig,
};
use culprit_core::history::GitCli;
use culprit_core::model::CommitRecord;
use culprit_core::pipeline::{rank, rank_with_history, PipelineOptions, RankOutcome};
use culprit_core::sbfl::{ochiai, rank_elements, SbflFormula, SuspiciousnessMap, TieBreak};
use culprit_core::scorer::{commit_score, score_commits, vote, VotingConfig, VotingMode};
use culprit_core::style::{NormalizerRegistry, SyntacticDetector};
use culprit_core::synth::{generate, scored_subject, ScoreProfile, SynthParams};
use culprit_core::{CodeElement, CommitId, CoverageMatrix, EvolveMap, Outcome, SortKey, TestCase};

use common::escape::EscapeRepo;

const VOTE_TOLERANCE: f64 = 0.005;
const BISECT_MAX_N: usize = 7;
const BISECT_VECTORS: usize = 200;
const UNIFORM_MAX_N: usize = 64;
const UNIFORM_TRIALS: usize = 1000;
const SAVINGS_SUBJECTS: usize = 500;
const SAVINGS_MAX_RANK: usize = 3;
const SAVINGS_MIN_MEDIAN: f64 = 1.0;
const FULL_HISTORY_FACTOR: usize = 4;
const SCORE_FIXTURES: usize = 1000;
const SCORE_MAX_COMMITS: usize = 10;
const SCORE_MAX_ELEMENTS: usize = 20;
const SCORE_REL_TOLERANCE: f64 = 1e-12;
const OCHIAI_MATRICES: usize = 1000;
const OCHIAI_REL_TOLERANCE: f64 = 1e-12;
const METRIC_TOLERANCE: f64 = 1e-12;
const HARNESS_SUBJECTS: usize = 60;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn key(i: usize) -> SortKey {
    SortKey {
        time: i as i64,
        order: i as u64,
    }
}

/// Candidates `c{n-1}` (newest) .. `c0`, listed newest first.
fn candidates(scores: &[f64]) -> Vec<Candidate<f64>> {
    let n = scores.len();
    scores
        .iter()
        .enumerate()
        .map(|(i, s)| Candidate::new(format!("c{}", n - 1 - i), key(n - 1 - i), *s))
        .collect()
}

fn ids(cands: &[Candidate<f64>]) -> Vec<CommitId> {
    cands.iter().map(|c| c.id.clone()).collect()
}

/// Binary search for the last bad commit in a newest-first list whose
/// first `bic + 1` entries are bad. Returns (index found, probed indices).
fn textbook_search(n: usize, bic: usize) -> (usize, Vec<usize>) {
    let (mut lo, mut hi) = (0usize, n);
    let mut probes = Vec::new();
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        probes.push(mid);
        if mid <= bic {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, probes)
}

fn criterion_1() -> Check {
    let scores = [1.0, 0.6, 0.6, 0.6, 0.3];
    let susp = SuspiciousnessMap::<f64>::from_scores(
        scores
            .iter()
            .enumerate()
            .map(|(i, s)| (CodeElement::new("T.java", i as u32 + 1).unwrap(), *s)),
        SbflFormula::Ochiai,
    )
    .map_err(|e| e.to_string())?;
    let table = [
        (0u8, TieBreak::Max, [1.00, 0.25, 0.25, 0.25, 0.20]),
        (1, TieBreak::Max, [1.00, 0.15, 0.15, 0.15, 0.06]),
        (0, TieBreak::Dense, [1.00, 0.50, 0.50, 0.50, 0.33]),
        (1, TieBreak::Dense, [1.00, 0.30, 0.30, 0.30, 0.10]),
    ];
    let mut worst: f64 = 0.0;
    for (alpha, tau, expected) in table {
        let config = VotingConfig {
            alpha,
            tau,
            lambda: 0.1,
            mode: VotingMode::Vote,
        };
        let ranks = rank_elements(&susp, tau).map_err(|e| e.to_string())?;
        for (i, want) in expected.iter().enumerate() {
            let e = CodeElement::new("T.java", i as u32 + 1).unwrap();
            let got = vote(&e, &susp, &ranks, &config);
            worst = worst.max((got - want).abs());
            ensure((got - want).abs() <= VOTE_TOLERANCE, || {
                format!("alpha={alpha} tau={tau:?} element {i}: {got} vs {want}")
            })?;
        }
    }
    Ok(format!("4 configurations, max deviation {worst:.4}"))
}

fn criterion_2() -> Check {
    let mut rng = StdRng::seed_from_u64(2);
    let mut runs = 0;
    for n in 1..=BISECT_MAX_N {
        for bic in 0..n {
            let (text_found, text_probes) = textbook_search(n, bic);
            for v in 0..BISECT_VECTORS {
                let scores: Vec<f64> = if v % 2 == 0 {
                    (0..n).map(|_| rng.gen_range(1e-3..1.0)).collect()
                } else {
                    (0..n).map(|_| rng.gen_range(1..=3) as f64).collect()
                };
                let cands = candidates(&scores);
                let order = ids(&cands);
                let mut oracle = TableOracle::planted(&order, &order[bic]).map_err(|e| e.to_string())?;
                let w = weighted_bisect(&cands, &mut oracle, BisectOptions::default())
                    .map_err(|e| e.to_string())?;
                ensure(w.bic == order[bic], || format!("n={n} bic={bic}: weighted found {}", w.bic))?;
                ensure(w.iterations <= n - 1, || {
                    format!("n={n} bic={bic}: {} oracle calls", w.iterations)
                })?;
                ensure(w.trace.len() == w.iterations, || "trace length differs".into())?;

                let plain: Vec<(CommitId, SortKey)> = cands.iter().map(|c| (c.id.clone(), c.key)).collect();
                let s = standard_bisect(&plain, &mut oracle, BisectOptions::default())
                    .map_err(|e| e.to_string())?;
                ensure(s.bic == order[text_found], || format!("n={n} bic={bic}: standard disagrees"))?;
                ensure(s.pivots == text_probes, || {
                    format!("n={n} bic={bic}: pivots {:?} vs {:?}", s.pivots, text_probes)
                })?;
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} searches"))
}

fn criterion_3() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    for trial in 0..UNIFORM_TRIALS {
        let n = rng.gen_range(1..=UNIFORM_MAX_N);
        let bic = rng.gen_range(0..n);
        let weight = [1.0, 0.1, 0.37, 7.5][trial % 4];
        let cands = candidates(&vec![weight; n]);
        let order = ids(&cands);
        let mut oracle = TableOracle::planted(&order, &order[bic]).map_err(|e| e.to_string())?;
        let w = weighted_bisect(&cands, &mut oracle, BisectOptions::default()).map_err(|e| e.to_string())?;
        let plain: Vec<(CommitId, SortKey)> = cands.iter().map(|c| (c.id.clone(), c.key)).collect();
        let s = standard_bisect(&plain, &mut oracle, BisectOptions::default()).map_err(|e| e.to_string())?;
        ensure(w.trace == s.trace && w.pivots == s.pivots, || {
            format!("n={n} bic={bic} weight={weight}: {:?} vs {:?}", w.pivots, s.pivots)
        })?;
    }
    Ok(format!("{UNIFORM_TRIALS} placements, identical traces"))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    if values.len() % 2 == 0 {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    }
}

/// Savings over subjects drawn straight from a recency-biased score profile.
fn profile_savings() -> Result<(Vec<f64>, usize), String> {
    let profile = ScoreProfile {
        max_bic_rank: SAVINGS_MAX_RANK,
        ..ScoreProfile::default()
    };
    let mut rng = StdRng::seed_from_u64(4);
    let mut savings = Vec::new();
    let mut full_checked = 0;
    for i in 0..SAVINGS_SUBJECTS {
        let s = scored_subject(&profile, &mut rng).map_err(|e| e.to_string())?;
        let cost = compare_costs(&s.space, &s.history, &s.bic).map_err(|e| e.to_string())?;
        savings.push(cost.standard_reduced as f64 - cost.weighted as f64);
        if s.history.len() >= FULL_HISTORY_FACTOR * s.space.len() {
            full_checked += 1;
            ensure(cost.weighted <= cost.standard_full, || {
                format!("profile {i}: weighted {} > full-history {}", cost.weighted, cost.standard_full)
            })?;
        }
    }
    Ok((savings, full_checked))
}

/// Savings over subjects ranked end to end from synthetic coverage and
/// history; reported alongside, not gated on the median.
fn pipeline_savings() -> Result<(Vec<f64>, usize), String> {
    let params = SynthParams::default();
    let config = PipelineOptions::default();
    let mut savings = Vec::new();
    let mut full_checked = 0;
    let mut seed = 0u64;
    while savings.len() < SAVINGS_SUBJECTS {
        ensure(seed < 20 * SAVINGS_SUBJECTS as u64, || "too few subjects with a top-ranked culprit".into())?;
        let s = generate(&format!("s{seed}"), &params, seed).map_err(|e| e.to_string())?;
        seed += 1;
        let out: RankOutcome<f64> =
            rank_with_history(&s.coverage, s.evolve.clone(), None, &config).map_err(|e| e.to_string())?;
        match out.report.rank_of(&s.bic) {
            Some(r) if r <= SAVINGS_MAX_RANK && out.report.score_of(&s.bic) > 0.0 => {}
            _ => continue,
        }
        let space: Vec<Candidate<f64>> = out
            .report
            .ranked
            .iter()
            .map(|r| Candidate {
                id: r.commit.clone(),
                key: r.key(),
                score: r.score,
            })
            .collect();
        let full: Vec<(CommitId, SortKey)> = s.all_commits.iter().map(|c| (c.id.clone(), c.key())).collect();
        let cost = compare_costs(&space, &full, &s.bic).map_err(|e| e.to_string())?;
        savings.push(cost.standard_reduced as f64 - cost.weighted as f64);
        if full.len() >= FULL_HISTORY_FACTOR * out.search_space.len() {
            full_checked += 1;
            ensure(cost.weighted <= cost.standard_full, || {
                format!("{}: weighted {} > full-history {}", s.id, cost.weighted, cost.standard_full)
            })?;
        }
    }
    Ok((savings, full_checked))
}

fn criterion_4() -> Check {
    let (mut savings, full_checked) = profile_savings()?;
    let (mut piped, piped_checked) = pipeline_savings()?;
    let m = median(&mut savings);
    let mean = savings.iter().sum::<f64>() / savings.len() as f64;
    let pm = median(&mut piped);
    let pmean = piped.iter().sum::<f64>() / piped.len() as f64;
    ensure(m >= SAVINGS_MIN_MEDIAN, || format!("median saving {m} (mean {mean:.3})"))?;
    Ok(format!(
        "median saving {m}, mean {mean:.3}; end-to-end synthetic median {pm}, mean {pmean:.3}; \
         full-history bound checked on {}",
        full_checked + piped_checked
    ))
}

/// Direct evaluation of a commit score by summing over the Evolve pairs.
fn brute_force_score(
    commit: &CommitId,
    evolve: &EvolveMap,
    suspicious: &BTreeSet<CodeElement>,
    space: &BTreeSet<CommitId>,
    susp: &BTreeMap<CodeElement, f64>,
    config: &VotingConfig,
) -> f64 {
    if !space.contains(commit) {
        return 0.0;
    }
    let positive: Vec<f64> = susp.values().copied().filter(|s| *s > 0.0).collect();
    let rank_of = |s: f64| -> f64 {
        match config.tau {
            TieBreak::Max => positive.iter().filter(|&&o| o >= s).count() as f64,
            TieBreak::Dense => {
                let mut distinct: Vec<f64> = positive.iter().copied().filter(|&o| o >= s).collect();
                distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
                distinct.dedup();
                distinct.len() as f64
            }
        }
    };
    let mut total = 0.0f64;
    let mut best = 0.0f64;
    let key = |c: &CommitId| evolve.key(c).unwrap();
    for (e, history) in evolve.histories() {
        if !suspicious.contains(e) || !history.contains(commit) {
            continue;
        }
        let s = susp.get(e).copied().unwrap_or(0.0);
        let depth = history
            .iter()
            .filter(|c| space.contains(*c) && key(c) > key(commit))
            .count();
        let v = match config.mode {
            VotingMode::Vote if s > 0.0 => {
                let numerator = if config.alpha == 1 { s } else { 1.0 };
                numerator / rank_of(s)
            }
            VotingMode::Vote => 0.0,
            VotingMode::Equal => 1.0,
            VotingMode::ScoreOnly | VotingMode::MaxAggr => s,
        };
        best = best.max(s);
        total += v * (1.0 - config.lambda).powi(depth as i32);
    }
    if config.mode == VotingMode::MaxAggr {
        best
    } else {
        total
    }
}

fn criterion_5() -> Check {
    let mut rng = StdRng::seed_from_u64(5);
    let mut compared = 0usize;
    for _ in 0..SCORE_FIXTURES {
        let n_commits = rng.gen_range(1..=SCORE_MAX_COMMITS);
        let n_elements = rng.gen_range(1..=SCORE_MAX_ELEMENTS);
        let mut evolve = EvolveMap::new();
        let mut keys: Vec<SortKey> = (0..n_commits)
            .map(|i| SortKey {
                time: rng.gen_range(0..4),
                order: i as u64,
            })
            .collect();
        keys.sort();
        let commits: Vec<CommitId> = (0..n_commits).map(|i| CommitId::new(format!("k{i}"))).collect();
        for (c, k) in commits.iter().zip(&keys) {
            evolve
                .add_commit(CommitRecord::new(c.as_str(), k.time, k.order))
                .map_err(|e| e.to_string())?;
        }
        let levels = [0.0, 0.2, 0.5, 0.5, 1.0];
        let mut susp = BTreeMap::new();
        for i in 0..n_elements {
            let e = CodeElement::new(format!("F{}.java", i % 3), i as u32 + 1).unwrap();
            let mut hist: Vec<usize> = (0..n_commits).filter(|_| rng.gen_bool(0.4)).collect();
            hist.reverse();
            evolve
                .set_history(e.clone(), hist.iter().map(|&i| commits[i].clone()).collect())
                .map_err(|err| err.to_string())?;
            let s = if rng.gen_bool(0.5) {
                levels[rng.gen_range(0..levels.len())]
            } else {
                rng.gen_range(0.0..1.0)
            };
            susp.insert(e, s);
        }
        let suspicious: BTreeSet<CodeElement> = susp.keys().cloned().collect();
        let space: BTreeSet<CommitId> = commits.iter().filter(|_| rng.gen_bool(0.8)).cloned().collect();
        let map = SuspiciousnessMap::from_scores(susp.clone(), SbflFormula::Ochiai).map_err(|e| e.to_string())?;

        for mode in [VotingMode::Vote, VotingMode::Equal, VotingMode::ScoreOnly, VotingMode::MaxAggr] {
            let config = VotingConfig {
                alpha: rng.gen_range(0..=1),
                tau: if rng.gen_bool(0.5) { TieBreak::Max } else { TieBreak::Dense },
                lambda: [0.0, 0.1, 0.5, 0.9][rng.gen_range(0..4)],
                mode,
            };
            let ranks = rank_elements(&map, config.tau).unwrap_or_default();
            let report = score_commits(&suspicious, &map, &evolve, &space, &config, false)
                .map_err(|e| e.to_string())?;
            for c in &commits {
                let want = brute_force_score(c, &evolve, &suspicious, &space, &susp, &config);
                let single = commit_score(c, &suspicious, &map, &ranks, &evolve, &space, &config);
                let batch = report.score_of(c);
                ensure(rel_close(single, want, SCORE_REL_TOLERANCE), || {
                    format!("{mode:?} {c}: commit_score {single} vs {want}")
                })?;
                ensure(rel_close(batch, want, SCORE_REL_TOLERANCE), || {
                    format!("{mode:?} {c}: score_commits {batch} vs {want}")
                })?;
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} commit scores compared"))
}

fn criterion_6() -> Check {
    let mut rng = StdRng::seed_from_u64(6);
    let mut elements_seen = 0;
    for _ in 0..OCHIAI_MATRICES {
        let n_tests = rng.gen_range(1..=8);
        let n_elements = rng.gen_range(1..=10);
        let elements: Vec<CodeElement> = (0..n_elements)
            .map(|i| CodeElement::new("M.java", i as u32 + 1).unwrap())
            .collect();
        let failing_at = rng.gen_range(0..n_tests);
        let mut tests = Vec::new();
        let mut covered = BTreeMap::new();
        for t in 0..n_tests {
            let outcome = if t == failing_at || rng.gen_bool(0.3) {
                Outcome::Fail
            } else {
                Outcome::Pass
            };
            let name = format!("MTest::t{t}");
            let set: BTreeSet<CodeElement> = elements.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
            tests.push(TestCase::new(name.clone(), outcome));
            covered.insert(name, set);
        }
        let cov = CoverageMatrix::new(tests.clone(), covered.clone()).map_err(|e| e.to_string())?;
        let scores = ochiai::<f64>(&cov).map_err(|e| e.to_string())?;
        let total_failing = tests.iter().filter(|t| t.outcome == Outcome::Fail).count();
        for e in &elements {
            let (mut ef, mut ep) = (0usize, 0usize);
            for t in &tests {
                if covered[&t.full_name].contains(e) {
                    match t.outcome {
                        Outcome::Fail => ef += 1,
                        Outcome::Pass => ep += 1,
                    }
                }
            }
            let want = if ef == 0 {
                0.0
            } else {
                ef as f64 / ((total_failing * (ef + ep)) as f64).sqrt()
            };
            let got = scores.get(e);
            ensure(rel_close(got, want, OCHIAI_REL_TOLERANCE), || format!("{e}: {got} vs {want}"))?;
            ensure((got == 1.0) == (ef == total_failing && ep == 0), || {
                format!("{e}: score {got} with ef={ef}, ep={ep}, |T_F|={total_failing}")
            })?;
            ensure((got == 0.0) == (ef == 0), || format!("{e}: score {got} with ef={ef}"))?;
            elements_seen += 1;
        }
    }
    Ok(format!("{elements_seen} element scores checked"))
}

fn criterion_7() -> Check {
    let repo = EscapeRepo::build();
    let git = GitCli::new(repo.fx.path());
    let registry = NormalizerRegistry::default();
    let detector = SyntacticDetector {
        adapter: &git,
        registry: &registry,
    };
    let out: RankOutcome<f64> = rank(
        &repo.coverage(),
        &git,
        "HEAD",
        Some(&detector),
        2,
        &PipelineOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let id = |s: &str| CommitId::new(s);
    ensure(out.candidates.contains(&id(&repo.style)), || "style commit not among candidates".into())?;
    ensure(!out.search_space.contains(&id(&repo.style)), || {
        format!("style commit kept; undecided: {:?}", out.style.undecided)
    })?;
    ensure(out.search_space.contains(&id(&repo.bic)), || "culprit filtered out".into())?;
    let top = &out.report.ranked[0];
    ensure(top.commit == id(&repo.bic) && top.rank == 1, || {
        format!("top commit {} (rank {})", top.commit, top.rank)
    })?;
    // Ochiai: escape lines 1, pad lines 1/sqrt(2); max-tie ranks 3 and 5.
    // bic: 3 * 1/3 = 1; c0: 0.9; pad2: 2 * 1/5 = 0.4; pad: 0.9 * 0.4.
    let expected = [
        (&repo.bic, 1.0),
        (&repo.c0, 0.9),
        (&repo.pad2, 0.4),
        (&repo.pad, 0.36),
    ];
    for (c, want) in expected {
        let got = out.report.score_of(&id(c));
        ensure((got - want).abs() < 1e-12, || format!("score of {c}: {got} vs {want}"))?;
    }
    ensure(out.search_space.len() == expected.len(), || {
        format!("search space has {} commits", out.search_space.len())
    })?;
    Ok(format!(
        "style commit removed, culprit ranked 1 of {}",
        out.search_space.len()
    ))
}

fn criterion_8() -> Check {
    let close = |a: f64, b: f64| (a - b).abs() <= METRIC_TOLERANCE;
    let m = |r: &[f64]| mrr(r).map_err(|e| e.to_string());
    ensure(close(m(&[1.0, 1.0, 1.0])?, 1.0), || "mrr(1,1,1)".into())?;
    ensure(close(m(&[1.0, 2.0, 4.0])?, (1.0 + 0.5 + 0.25) / 3.0), || "mrr(1,2,4)".into())?;
    ensure(close(m(&[2.0])?, 0.5), || "mrr(2)".into())?;
    let ranks = [1.0, 3.0, 7.0];
    ensure(
        accuracy_at(&ranks, 3) == 2 && accuracy_at(&ranks, 1) == 1 && accuracy_at(&ranks, 10) == 3,
        || "accuracy_at".into(),
    )?;
    for (n, want) in [(1usize, 1.0), (9, 5.0), (2, 1.5)] {
        let got: f64 = random_baseline_expected_rank(n).map_err(|e| e.to_string())?;
        ensure(close(got, want), || format!("random baseline n={n}: {got}"))?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for i in 0..HARNESS_SUBJECTS {
        generate(&format!("subject-{i:03}"), &SynthParams::default(), 800 + i as u64)
            .and_then(|s| s.write(dir.path()))
            .map_err(|e| e.to_string())?;
    }
    let configs = [
        EvalConfig::default(),
        EvalConfig {
            voting: VotingConfig::batch(),
            ..EvalConfig::default()
        },
        EvalConfig {
            voting: VotingConfig {
                tau: TieBreak::Dense,
                ..VotingConfig::default()
            },
            select_relevant: false,
            ..EvalConfig::default()
        },
    ];
    let mut runs = 0;
    for config in configs {
        let subjects = load_dataset(dir.path()).map_err(|e| e.to_string())?;
        let report = run_benchmark(subjects, &config).map_err(|e| e.to_string())?;
        ensure(report.failures.is_empty(), || format!("failures: {:?}", report.failures))?;
        let d = report.dominance.ok_or("no dominance computed")?;
        let row = |m: &str| report.row(m).map(|r| r.mrr).unwrap_or(f64::NAN);
        ensure(d.lower_bound_le_random && d.random_le_method, || {
            format!(
                "lower {:.4}, random {:.4}, method {:.4}",
                row("lower-bound"),
                row("random"),
                row("culprit")
            )
        })?;
        runs += 1;
    }
    Ok(format!("metric identities hold; dominance on {runs} harness runs"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("voting table", criterion_1),
        ("exhaustive bisection", criterion_2),
        ("uniform specialization", criterion_3),
        ("savings direction", criterion_4),
        ("commit score oracle", criterion_5),
        ("ochiai properties", criterion_6),
        ("stage soundness", criterion_7),
        ("metric identities", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>())));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
