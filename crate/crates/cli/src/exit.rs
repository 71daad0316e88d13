//! Process exit codes. These are part of the scripting interface and do
//! not change between releases.
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 1    | any other failure                         |
//! | 2    | invalid usage or configuration            |
//! | 3    | coverage contains no failing test         |
//! | 4    | version-control failure or unknown commit |
//! | 5    | unreadable or malformed input             |
//! | 6    | oracle verdicts are inconsistent          |
//! | 7    | nothing to bisect                         |
//! | 8    | oracle aborted                            |

use culprit_core::{Error, Stage};

pub const OTHER: u8 = 1;
pub const USAGE: u8 = 2;
pub const NO_FAILING_TESTS: u8 = 3;
pub const VCS: u8 = 4;
pub const PARSE: u8 = 5;
pub const INCONSISTENT_ORACLE: u8 = 6;
pub const EMPTY_SPACE: u8 = 7;
pub const ORACLE_ABORTED: u8 = 8;

pub fn code_for(err: &anyhow::Error) -> u8 {
    let Some(e) = err.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return OTHER;
    };
    let ingest = e.stage() == Some(Stage::Ingest);
    match e.root() {
        Error::NoFailingTests => NO_FAILING_TESTS,
        Error::Vcs(_) | Error::UnknownCommit(_) | Error::HistoryFailures(_) => VCS,
        Error::Parse { .. } | Error::DuplicateTestName(_) | Error::UnknownTest(_) | Error::InvalidElement(_) => PARSE,
        Error::InvalidHistory(_) => PARSE,
        Error::Io { .. } if ingest => PARSE,
        Error::InconsistentOracle { .. } => INCONSISTENT_ORACLE,
        Error::EmptySpace => EMPTY_SPACE,
        Error::OracleAborted { .. } => ORACLE_ABORTED,
        Error::InvalidConfig(_) => USAGE,
        _ => OTHER,
    }
}
