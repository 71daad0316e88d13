use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::bisect::Probe;
use crate::model::{CodeElement, CommitId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage an error was raised in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    History,
    SearchSpace,
    StyleFilter,
    Localisation,
    Scoring,
    Bisection,
    Evaluation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Ingest => "ingest",
            Stage::History => "history",
            Stage::SearchSpace => "search-space",
            Stage::StyleFilter => "style-filter",
            Stage::Localisation => "localisation",
            Stage::Scoring => "scoring",
            Stage::Bisection => "bisection",
            Stage::Evaluation => "evaluation",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("coverage contains no failing test")]
    NoFailingTests,

    #[error("no history entry for element {0}")]
    MissingHistory(CodeElement),

    #[error("parse error in {path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate test name `{0}`")]
    DuplicateTestName(String),

    #[error("coverage refers to undeclared test `{0}`")]
    UnknownTest(String),

    #[error("invalid code element: {0}")]
    InvalidElement(String),

    #[error("no element has a positive suspiciousness score")]
    EmptyDomain,

    #[error("vcs error: {0}")]
    Vcs(String),

    #[error("unknown commit `{0}`")]
    UnknownCommit(String),

    #[error("history tracing failed for {} element(s); first: {}: {}", .0.len(), .0[0].0, .0[0].1)]
    HistoryFailures(Vec<(CodeElement, Error)>),

    #[error("file unavailable: {0}")]
    FileUnavailable(String),

    #[error("invalid history: {0}")]
    InvalidHistory(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no commit with a positive score to bisect")]
    EmptySpace,

    #[error("oracle verdicts violate monotonicity after {} probe(s)", .trace.len())]
    InconsistentOracle { trace: Vec<Probe> },

    #[error("oracle aborted at commit {commit}: {reason}")]
    OracleAborted { commit: CommitId, reason: String },

    #[error("empty input")]
    EmptyInput,

    #[error("rank must be a finite value of at least 1, got {0}")]
    InvalidRank(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: Stage) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The error with any stage wrapper removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
