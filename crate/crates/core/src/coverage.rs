//! Loading per-test coverage and selecting the tests relevant to a failure.
//!
//! Two on-disk formats are accepted:
//!
//! * `MATRIX_JSON`: `{"tests":[{"name":..,"outcome":"PASS"|"FAIL","covered":[["path",line],..]},..]}`.
//!   A covered entry may carry the enclosing method span as two extra
//!   numbers: `["path", line, start, end]`.
//! * `LCOV_PER_TEST`: a directory holding `outcomes.tsv` (`name<TAB>PASS|FAIL`)
//!   and one `<name>.lcov` tracefile per test.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CodeElement, CoverageMatrix, Outcome, TestCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageFormat {
    MatrixJson,
    LcovPerTest,
}

impl FromStr for CoverageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "matrix-json" | "json" => Ok(CoverageFormat::MatrixJson),
            "lcov-per-test" | "lcov" => Ok(CoverageFormat::LcovPerTest),
            other => Err(Error::InvalidConfig(format!("unknown coverage format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageFile {
    pub path: PathBuf,
    pub format: CoverageFormat,
}

impl CoverageFile {
    pub fn new(path: impl Into<PathBuf>, format: CoverageFormat) -> Self {
        Self {
            path: path.into(),
            format,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixDoc {
    tests: Vec<MatrixTest>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixTest {
    name: String,
    outcome: Outcome,
    #[serde(default)]
    covered: Vec<CoveredEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum CoveredEntry {
    Line(String, u32),
    WithSpan(String, u32, u32, u32),
}

impl CoveredEntry {
    fn into_element(self) -> Result<CodeElement> {
        match self {
            CoveredEntry::Line(file, line) => CodeElement::new(file, line),
            CoveredEntry::WithSpan(file, line, start, end) => {
                CodeElement::with_span(file, line, start, end)
            }
        }
    }
}

pub fn load_coverage(file: &CoverageFile) -> Result<CoverageMatrix> {
    match file.format {
        CoverageFormat::MatrixJson => {
            let text = fs::read_to_string(&file.path).map_err(|e| Error::io(&file.path, e))?;
            parse_matrix_json(&text, &file.path.display().to_string())
        }
        CoverageFormat::LcovPerTest => load_lcov_dir(&file.path),
    }
}

/// Parses a `MATRIX_JSON` document. `origin` is used in error messages.
pub fn parse_matrix_json(text: &str, origin: &str) -> Result<CoverageMatrix> {
    let doc: MatrixDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut tests = Vec::with_capacity(doc.tests.len());
    let mut covered = Vec::with_capacity(doc.tests.len());
    for t in doc.tests {
        let elements = t
            .covered
            .into_iter()
            .map(CoveredEntry::into_element)
            .collect::<Result<BTreeSet<_>>>()?;
        tests.push(TestCase::new(t.name.clone(), t.outcome));
        covered.push((t.name, elements));
    }
    CoverageMatrix::new(tests, covered)
}

/// Serializes a matrix as `MATRIX_JSON`, spans included where known.
pub fn to_matrix_json(cov: &CoverageMatrix) -> String {
    let tests = cov
        .tests()
        .iter()
        .map(|t| MatrixTest {
            name: t.full_name.clone(),
            outcome: t.outcome,
            covered: cov
                .covered_by(&t.full_name)
                .map(|e| match e.enclosing_span {
                    Some((s, end)) => CoveredEntry::WithSpan(e.file.clone(), e.line, s, end),
                    None => CoveredEntry::Line(e.file.clone(), e.line),
                })
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&MatrixDoc { tests }).expect("matrix serializes")
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        column: 1,
        message: message.into(),
    }
}

fn load_lcov_dir(dir: &Path) -> Result<CoverageMatrix> {
    let outcomes_path = dir.join("outcomes.tsv");
    let text = fs::read_to_string(&outcomes_path).map_err(|e| Error::io(&outcomes_path, e))?;
    let mut tests = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, outcome) = line
            .split_once('\t')
            .ok_or_else(|| parse_error(&outcomes_path, i + 1, "expected `name<TAB>PASS|FAIL`"))?;
        let outcome = match outcome.trim() {
            "PASS" => Outcome::Pass,
            "FAIL" => Outcome::Fail,
            other => {
                return Err(parse_error(
                    &outcomes_path,
                    i + 1,
                    format!("unknown outcome `{other}`"),
                ))
            }
        };
        tests.push(TestCase::new(name, outcome));
    }

    let declared: BTreeSet<&str> = tests.iter().map(|t| t.full_name.as_str()).collect();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "lcov") {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            if !declared.contains(stem) {
                return Err(Error::UnknownTest(stem.to_owned()));
            }
        }
    }

    let mut covered = Vec::with_capacity(tests.len());
    for t in &tests {
        let path = dir.join(format!("{}.lcov", t.full_name));
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        covered.push((t.full_name.clone(), parse_lcov(&text, &path)?));
    }
    CoverageMatrix::new(tests, covered)
}

/// Reads the executed lines of one LCOV tracefile. `FN:start,end,name`
/// records (LCOV 2 form) supply enclosing method spans.
pub fn parse_lcov(text: &str, origin: &Path) -> Result<BTreeSet<CodeElement>> {
    let mut out = BTreeSet::new();
    let mut source: Option<String> = None;
    let mut functions: Vec<(u32, u32)> = Vec::new();
    let mut hit_lines: Vec<u32> = Vec::new();

    let mut flush = |source: &Option<String>,
                     functions: &mut Vec<(u32, u32)>,
                     hit_lines: &mut Vec<u32>|
     -> Result<()> {
        if let Some(file) = source {
            for &line in hit_lines.iter() {
                let mut e = CodeElement::new(file.clone(), line)?;
                if let Some(&(s, end)) = functions
                    .iter()
                    .filter(|(s, end)| *s <= line && line <= *end)
                    .min_by_key(|(s, end)| end - s)
                {
                    e.set_span(s, end)?;
                }
                out.insert(e);
            }
        }
        functions.clear();
        hit_lines.clear();
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix("SF:") {
            source = Some(rest.to_owned());
        } else if let Some(rest) = line.strip_prefix("DA:") {
            let mut parts = rest.split(',');
            let num = parts.next().and_then(|s| s.trim().parse::<u32>().ok());
            let hits = parts.next().and_then(|s| s.trim().parse::<i64>().ok());
            match (num, hits) {
                (Some(n), Some(h)) => {
                    if source.is_none() {
                        return Err(parse_error(origin, lineno, "DA record before SF"));
                    }
                    if h > 0 {
                        hit_lines.push(n);
                    }
                }
                _ => return Err(parse_error(origin, lineno, format!("malformed DA record `{line}`"))),
            }
        } else if let Some(rest) = line.strip_prefix("FN:") {
            let parts: Vec<&str> = rest.splitn(3, ',').collect();
            if parts.len() == 3 {
                if let (Ok(s), Ok(end)) = (parts[0].parse::<u32>(), parts[1].parse::<u32>()) {
                    if s >= 1 && s <= end {
                        functions.push((s, end));
                    }
                }
            }
        } else if line == "end_of_record" {
            flush(&source, &mut functions, &mut hit_lines)?;
            source = None;
        }
    }
    flush(&source, &mut functions, &mut hit_lines)?;
    Ok(out)
}

/// Keeps every failing test plus the passing tests whose full name contains
/// the simple name of a class executed by a failing test. The class name of
/// an element is its file stem; matching is a case-sensitive substring test.
pub fn select_relevant_tests(cov: &CoverageMatrix) -> Result<CoverageMatrix> {
    if !cov.has_failure() {
        return Err(Error::NoFailingTests);
    }
    let classes: BTreeSet<&str> = cov
        .failing_tests()
        .flat_map(|t| cov.covered_by(&t.full_name))
        .map(CodeElement::file_stem)
        .filter(|s| !s.is_empty())
        .collect();
    Ok(cov.retain_tests(|t| t.is_failing() || classes.iter().any(|c| t.full_name.contains(c))))
}

/// Class names (file stems) executed by failing tests, for reporting.
pub fn failing_classes(cov: &CoverageMatrix) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for e in cov
        .failing_tests()
        .flat_map(|t| cov.covered_by(&t.full_name))
    {
        *out.entry(e.file_stem().to_owned()).or_insert(0) += 1;
    }
    out
}
