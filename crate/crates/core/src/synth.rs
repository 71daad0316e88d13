//! Seeded generator of labelled subjects with a planted bug-inducing
//! commit, for benchmarks where no real dataset is at hand.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::coverage::to_matrix_json;
use crate::error::{Error, Result};
use crate::history::SerializedHistory;
use crate::bisect::Candidate;
use crate::model::{CodeElement, CommitId, CommitRecord, CoverageMatrix, EvolveMap, Outcome, SortKey, TestCase};
use crate::sbfl::{tied_ranks, TieBreak};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    /// Length of the whole history.
    pub history: usize,
    /// Commits that touch covered code.
    pub touching: usize,
    pub elements: usize,
    /// Elements modified by the planted commit; every failing test covers them.
    pub faulty: usize,
    pub failing_tests: usize,
    pub passing_tests: usize,
    /// Chance that an element's history contains a given touching commit.
    pub touch_rate: f64,
    /// Exponent of the recency bias used to place the planted commit
    /// (0 is uniform).
    pub recency: f64,
    /// Chance that a passing test covers a faulty element.
    pub noise: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            history: 60,
            touching: 12,
            elements: 20,
            faulty: 2,
            failing_tests: 2,
            passing_tests: 10,
            touch_rate: 0.2,
            recency: 2.0,
            noise: 0.1,
        }
    }
}

impl SynthParams {
    /// Sizes drawn to resemble real failures: the touching set is
    /// log-uniform over `[2, 300]` commits and the whole history is 8 to
    /// 20 times larger.
    pub fn sample_realistic(rng: &mut impl Rng) -> Self {
        let touching = (rng.gen_range(2f64.ln()..300f64.ln())).exp().round() as usize;
        let history = touching * rng.gen_range(8..=20);
        Self {
            history,
            touching,
            elements: (2 * touching).clamp(10, 200),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.touching == 0 || self.touching > self.history {
            return bad("need 1 <= touching <= history");
        }
        if self.faulty == 0 || self.faulty > self.elements {
            return bad("need 1 <= faulty <= elements");
        }
        if self.failing_tests == 0 {
            return bad("need at least one failing test");
        }
        for p in [self.touch_rate, self.noise] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if !(self.recency.is_finite() && self.recency >= 0.0) {
            return bad("recency must be a non-negative number");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSubject {
    pub id: String,
    pub coverage: CoverageMatrix,
    pub evolve: EvolveMap,
    /// The whole history, newest first.
    pub all_commits: Vec<CommitRecord>,
    pub bic: CommitId,
}

impl SyntheticSubject {
    /// Writes the subject in the dataset layout read by the evaluation
    /// harness: `coverage.json`, `history.json` and `bic.txt` under
    /// `root/<id>/`.
    pub fn write(&self, root: &Path) -> Result<()> {
        let dir = root.join(&self.id);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let put = |name: &str, text: String| {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        put("coverage.json", to_matrix_json(&self.coverage))?;
        put(
            "history.json",
            SerializedHistory::to_json(&self.evolve, &self.all_commits, &BTreeSet::new()),
        )?;
        put("bic.txt", format!("{}\n", self.bic))
    }
}

/// Index into `0..n` drawn with weight `(i + 1)^recency`.
fn recent_index(rng: &mut StdRng, n: usize, recency: f64) -> usize {
    let weights: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(recency)).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    n - 1
}

pub fn generate(id: &str, params: &SynthParams, seed: u64) -> Result<SyntheticSubject> {
    params.validate()?;
    let mut rng = StdRng::seed_from_u64(seed);

    let all: Vec<CommitRecord> = (0..params.history)
        .map(|i| {
            let mut r = CommitRecord::new(format!("{id}-c{i:04}"), 1_000 + 60 * i as i64, i as u64);
            r.message = format!("commit {i}");
            r
        })
        .collect();

    // Touching commits, oldest first.
    let mut touching: Vec<usize> = (0..params.history).collect();
    touching.shuffle(&mut rng);
    touching.truncate(params.touching);
    touching.sort_unstable();

    let bic_pos = recent_index(&mut rng, touching.len(), params.recency);
    let bic = all[touching[bic_pos]].id.clone();

    let elements: Vec<CodeElement> = (0..params.elements)
        .map(|i| CodeElement::new(format!("src/C{}.java", i % 4), 10 + i as u32))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..params.elements).collect();
    order.shuffle(&mut rng);
    let faulty: BTreeSet<usize> = order[..params.faulty].iter().copied().collect();

    let mut evolve = EvolveMap::new();
    for r in &all {
        evolve.add_commit(r.clone())?;
    }
    for (i, e) in elements.iter().enumerate() {
        let is_faulty = faulty.contains(&i);
        // Each element is created by one of the older touching commits;
        // faulty ones exist no later than the planted commit.
        let latest_creation = if is_faulty { bic_pos } else { touching.len() / 2 };
        let created = rng.gen_range(0..=latest_creation);
        let mut hist: Vec<usize> = vec![touching[created]];
        for (pos, &c) in touching.iter().enumerate().skip(created + 1) {
            let touched = if pos == bic_pos {
                // The planted commit modifies exactly the faulty elements.
                is_faulty
            } else {
                rng.gen_bool(params.touch_rate)
            };
            if touched {
                hist.push(c);
            }
        }
        hist.reverse();
        evolve.set_history(e.clone(), hist.iter().map(|&c| all[c].id.clone()).collect())?;
    }

    let healthy: Vec<&CodeElement> = elements
        .iter()
        .enumerate()
        .filter(|(i, _)| !faulty.contains(i))
        .map(|(_, e)| e)
        .collect();
    let mut tests = Vec::new();
    let mut covered: BTreeMap<String, BTreeSet<CodeElement>> = BTreeMap::new();
    for t in 0..params.failing_tests {
        let name = format!("pkg.C{}Test::failing{t}", t % 4);
        let mut set: BTreeSet<CodeElement> = faulty.iter().map(|&i| elements[i].clone()).collect();
        set.extend(healthy.iter().filter(|_| rng.gen_bool(0.3)).map(|e| (*e).clone()));
        tests.push(TestCase::new(name.clone(), Outcome::Fail));
        covered.insert(name, set);
    }
    for t in 0..params.passing_tests {
        let name = format!("pkg.C{}Test::passing{t}", t % 4);
        let mut set: BTreeSet<CodeElement> = healthy
            .iter()
            .filter(|_| rng.gen_bool(0.4))
            .map(|e| (*e).clone())
            .collect();
        set.extend(
            faulty
                .iter()
                .filter(|_| rng.gen_bool(params.noise))
                .map(|&i| elements[i].clone()),
        );
        tests.push(TestCase::new(name.clone(), Outcome::Pass));
        covered.insert(name, set);
    }
    let coverage = CoverageMatrix::new(tests, covered)?;

    let mut all_commits = all;
    all_commits.reverse();
    Ok(SyntheticSubject {
        id: id.to_owned(),
        coverage,
        evolve,
        all_commits,
        bic,
    })
}

/// `count` subjects with ids `prefix-0000..`, seeds derived from `seed`.
pub fn generate_many(prefix: &str, count: usize, params: &SynthParams, seed: u64) -> Result<Vec<SyntheticSubject>> {
    (0..count)
        .map(|i| generate(&format!("{prefix}-{i:04}"), params, seed.wrapping_add(i as u64)))
        .collect()
}

/// Commit scores generated directly, without coverage or history.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreProfile {
    /// Smallest and largest search space; sizes are drawn log-uniformly.
    pub space: (usize, usize),
    /// Whole history is this many times the search space (inclusive range).
    pub history_factor: (usize, usize),
    /// Score of the commit `k` positions behind the newest is scaled by
    /// `decay^k`.
    pub decay: f64,
    /// Each score is further multiplied by a uniform draw from `[noise, 1]`.
    pub noise: f64,
    /// The planted commit is drawn from commits whose max-tiebreak rank is
    /// at most this.
    pub max_bic_rank: usize,
}

impl Default for ScoreProfile {
    fn default() -> Self {
        Self {
            space: (4, 300),
            history_factor: (8, 20),
            decay: 0.9,
            noise: 0.2,
            max_bic_rank: 3,
        }
    }
}

/// A scored search space, the whole history and a planted culprit.
#[derive(Debug, Clone)]
pub struct ScoredSubject {
    pub space: Vec<Candidate<f64>>,
    /// Newest first; contains every commit of `space`.
    pub history: Vec<(CommitId, SortKey)>,
    pub bic: CommitId,
}

/// Draws one scored subject with recency-biased scores.
pub fn scored_subject(profile: &ScoreProfile, rng: &mut impl Rng) -> Result<ScoredSubject> {
    let (lo, hi) = profile.space;
    if lo == 0 || lo > hi || profile.history_factor.0 == 0 || profile.history_factor.0 > profile.history_factor.1 {
        return Err(Error::InvalidConfig("empty size range".into()));
    }
    if !(profile.decay > 0.0 && profile.decay <= 1.0 && (0.0..=1.0).contains(&profile.noise)) {
        return Err(Error::InvalidConfig("decay must lie in (0, 1] and noise in [0, 1]".into()));
    }
    let n = if lo == hi {
        lo
    } else {
        (rng.gen_range((lo as f64).ln()..=(hi as f64).ln())).exp().round() as usize
    }
    .clamp(lo, hi);
    let total = n * rng.gen_range(profile.history_factor.0..=profile.history_factor.1);

    let mut positions: Vec<usize> = (0..total).collect();
    positions.shuffle(rng);
    positions.truncate(n);
    positions.sort_unstable_by(|a, b| b.cmp(a));

    let key = |i: usize| SortKey {
        time: i as i64,
        order: i as u64,
    };
    let space: Vec<Candidate<f64>> = positions
        .iter()
        .enumerate()
        .map(|(age, &p)| {
            let score = profile.decay.powi(age as i32) * rng.gen_range(profile.noise..=1.0);
            Candidate::new(format!("h{p:05}"), key(p), score.max(f64::MIN_POSITIVE))
        })
        .collect();

    let mut by_score: Vec<&Candidate<f64>> = space.iter().collect();
    by_score.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<f64> = by_score.iter().map(|c| c.score).collect();
    let eligible: Vec<&Candidate<f64>> = by_score
        .iter()
        .zip(tied_ranks(&values, TieBreak::Max))
        .filter(|(_, r)| *r <= profile.max_bic_rank)
        .map(|(c, _)| *c)
        .collect();
    let bic = eligible
        .choose(rng)
        .map(|c| c.id.clone())
        .ok_or_else(|| Error::InvalidConfig("no commit within the requested rank".into()))?;

    let history = (0..total)
        .rev()
        .map(|p| (CommitId::new(format!("h{p:05}")), key(p)))
        .collect();
    Ok(ScoredSubject { space, history, bic })
}
