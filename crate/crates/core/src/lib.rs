//! Locating bug-inducing commits from failing-test coverage and code history.

pub mod bisect;
pub mod config;
pub mod coverage;
pub mod error;
pub mod eval;
pub mod history;
pub mod lexer;
pub mod model;
pub mod pipeline;
pub mod sbfl;
pub mod scalar;
pub mod scorer;
pub mod span;
pub mod style;
pub mod synth;

pub use error::{Error, Result, Stage};
pub use model::{
    candidate_commits, suspicious_elements, CodeElement, CommitId, CommitRecord, CoverageMatrix,
    EvolveMap, Outcome, SortKey, TestCase,
};
pub use scalar::{Scalar, Weight};

pub type SuspiciousnessMap = sbfl::SuspiciousnessMap<f64>;
pub type ScoreReport = scorer::ScoreReport<f64>;
pub type SuspiciousnessMap32 = sbfl::SuspiciousnessMap<f32>;
pub type ScoreReport32 = scorer::ScoreReport<f32>;
