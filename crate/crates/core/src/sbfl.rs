//! Statement-level suspiciousness from test spectra.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CodeElement, CoverageMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SbflFormula {
    #[default]
    Ochiai,
}

/// Non-negative suspiciousness per element.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspiciousnessMap<S> {
    scores: BTreeMap<CodeElement, S>,
    formula: SbflFormula,
}

impl<S: Scalar> SuspiciousnessMap<S> {
    /// Wraps externally computed scores. Negative or non-finite values are rejected.
    pub fn from_scores(
        scores: impl IntoIterator<Item = (CodeElement, S)>,
        formula: SbflFormula,
    ) -> Result<Self> {
        let scores: BTreeMap<_, _> = scores.into_iter().collect();
        if let Some((e, s)) = scores.iter().find(|(_, s)| !(s.is_finite() && **s >= S::zero())) {
            return Err(Error::InvalidConfig(format!("suspiciousness of {e} is {s}")));
        }
        Ok(Self { scores, formula })
    }

    /// Score of `element`; elements never seen score zero.
    pub fn get(&self, element: &CodeElement) -> S {
        self.scores.get(element).copied().unwrap_or_else(S::zero)
    }

    pub fn formula(&self) -> SbflFormula {
        self.formula
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CodeElement, S)> {
        self.scores.iter().map(|(e, s)| (e, *s))
    }

    /// Elements ordered by (score desc, file, line).
    pub fn ordered(&self) -> Vec<(&CodeElement, S)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by(|a, b| desc(a.1, b.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}

fn desc<S: PartialOrd>(a: S, b: S) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// Ochiai: `ef / sqrt(|T_F| * (ef + ep))` for every covered element.
pub fn ochiai<S: Scalar>(cov: &CoverageMatrix) -> Result<SuspiciousnessMap<S>> {
    let failing = cov.failing_count();
    if failing == 0 {
        return Err(Error::NoFailingTests);
    }
    let mut counts: BTreeMap<&CodeElement, (usize, usize)> = BTreeMap::new();
    for t in cov.tests() {
        for e in cov.covered_by(&t.full_name) {
            let c = counts.entry(e).or_default();
            if t.is_failing() {
                c.0 += 1;
            } else {
                c.1 += 1;
            }
        }
    }
    let total_failing = S::from_count(failing);
    let scores = counts
        .into_iter()
        .map(|(e, (ef, ep))| {
            let score = if ef == 0 {
                S::zero()
            } else {
                S::from_count(ef) / (total_failing * S::from_count(ef + ep)).sqrt()
            };
            (e.clone(), score)
        })
        .collect();
    Ok(SuspiciousnessMap {
        scores,
        formula: SbflFormula::Ochiai,
    })
}

/// Tie-breaking scheme for element ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    /// Every member of a tie group takes the worst position of the group.
    #[default]
    Max,
    /// Distinct score values get consecutive ranks starting at 1.
    Dense,
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(TieBreak::Max),
            "dense" => Ok(TieBreak::Dense),
            other => Err(Error::InvalidConfig(format!("unknown tie-break `{other}`"))),
        }
    }
}

/// Assigns 1-based ranks to a descending-sorted score sequence.
/// Equal scores (exact comparison) form a tie group.
pub fn tied_ranks<S: PartialOrd + Copy>(sorted_desc: &[S], tau: TieBreak) -> Vec<usize> {
    let mut ranks = vec![0; sorted_desc.len()];
    let mut start = 0;
    let mut group = 0;
    while start < sorted_desc.len() {
        let mut end = start + 1;
        while end < sorted_desc.len() && sorted_desc[end] == sorted_desc[start] {
            end += 1;
        }
        group += 1;
        let rank = match tau {
            TieBreak::Max => end,
            TieBreak::Dense => group,
        };
        ranks[start..end].fill(rank);
        start = end;
    }
    ranks
}

/// Ranks the elements with positive score, best first.
pub fn rank_elements<S: Scalar>(
    susp: &SuspiciousnessMap<S>,
    tau: TieBreak,
) -> Result<BTreeMap<CodeElement, usize>> {
    let positive: Vec<(&CodeElement, S)> = susp
        .ordered()
        .into_iter()
        .filter(|(_, s)| *s > S::zero())
        .collect();
    if positive.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let scores: Vec<S> = positive.iter().map(|(_, s)| *s).collect();
    let ranks = tied_ranks(&scores, tau);
    Ok(positive
        .into_iter()
        .zip(ranks)
        .map(|((e, _), r)| (e.clone(), r))
        .collect())
}
