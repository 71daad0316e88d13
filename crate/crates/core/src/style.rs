//! Detection of style-only commits.
//!
//! A commit is style-only when, for every covered file it modifies, the
//! normalized token sequence before and after the commit is identical.
//! Normalization drops comments and layout and removes braces around a
//! single simple statement that forms the body of `if`/`else`/`for`/
//! `while`/`do`. Any file that cannot be read or lexed makes the commit
//! count as a semantic change, so a positive verdict is always safe.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::history::VcsAdapter;
use crate::lexer::{tokenize, LexError, LexOptions, Token, TokenKind};
use crate::model::{CodeElement, CommitId, CommitRecord, EvolveMap, FileChange};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SyntaxFingerprint {
    pub digest: String,
    pub tokens: usize,
}

impl SyntaxFingerprint {
    pub fn of_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut hasher = Sha256::new();
        for t in tokens {
            let t = t.as_ref();
            hasher.update((t.len() as u64).to_le_bytes());
            hasher.update(t.as_bytes());
        }
        Self {
            digest: hex::encode(hasher.finalize()),
            tokens: tokens.len(),
        }
    }
}

pub trait Normalizer: Send + Sync {
    fn name(&self) -> &'static str;

    /// Canonical token sequence of `source`.
    fn normalize(&self, source: &str) -> Result<Vec<String>, LexError>;

    fn fingerprint(&self, source: &str) -> Result<SyntaxFingerprint, LexError> {
        Ok(SyntaxFingerprint::of_tokens(&self.normalize(source)?))
    }
}

/// Token normalizer for brace-delimited languages.
#[derive(Debug, Clone)]
pub struct CLikeNormalizer {
    lex: LexOptions,
    unwrap_single_statement_braces: bool,
}

impl CLikeNormalizer {
    pub fn java() -> Self {
        Self {
            lex: LexOptions::java(),
            unwrap_single_statement_braces: true,
        }
    }

    pub fn c_family() -> Self {
        Self {
            lex: LexOptions::c_family(),
            unwrap_single_statement_braces: true,
        }
    }

    pub fn without_brace_rewrite(mut self) -> Self {
        self.unwrap_single_statement_braces = false;
        self
    }
}

impl Normalizer for CLikeNormalizer {
    fn name(&self) -> &'static str {
        if self.lex.preprocessor {
            "c-family"
        } else {
            "java"
        }
    }

    fn normalize(&self, source: &str) -> Result<Vec<String>, LexError> {
        let tokens = tokenize(source, &self.lex)?;
        let tokens = if self.unwrap_single_statement_braces {
            unwrap_redundant_braces(tokens)
        } else {
            tokens
        };
        Ok(tokens.into_iter().map(|t| t.text).collect())
    }
}

const BODY_KEYWORDS: &[&str] = &["if", "for", "while", "foreach"];
const COMPOUND_STARTS: &[&str] = &[
    "if", "else", "for", "foreach", "while", "do", "switch", "try", "synchronized", "case",
    "default", "catch", "finally",
];

fn is(tok: &Token, text: &str) -> bool {
    tok.kind != TokenKind::Literal && tok.text == text
}

/// Index of the bracket matching the one at `open`, scanning in `step`
/// direction.
fn matching(tokens: &[Token], open: usize, forward: bool) -> Option<usize> {
    let (o, c) = match (tokens[open].text.as_str(), forward) {
        ("{", true) => ("{", "}"),
        ("(", true) => ("(", ")"),
        (")", false) => (")", "("),
        _ => return None,
    };
    let mut depth = 0usize;
    let mut i = open;
    loop {
        let t = &tokens[i];
        if is(t, o) {
            depth += 1;
        } else if is(t, c) {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
        if forward {
            i += 1;
            if i >= tokens.len() {
                return None;
            }
        } else {
            if i == 0 {
                return None;
            }
            i -= 1;
        }
    }
}

/// Whether the `{` at `open` is the body of a control statement.
fn is_control_body(tokens: &[Token], open: usize) -> bool {
    let Some(prev) = open.checked_sub(1).map(|i| &tokens[i]) else {
        return false;
    };
    if is(prev, "else") || is(prev, "do") {
        return true;
    }
    if !is(prev, ")") {
        return false;
    }
    let Some(paren) = matching(tokens, open - 1, false) else {
        return false;
    };
    paren
        .checked_sub(1)
        .is_some_and(|k| BODY_KEYWORDS.iter().any(|kw| is(&tokens[k], kw)))
}

/// A single statement with no nested block: exactly one `;` outside
/// parentheses, at the end, and not itself a compound statement.
fn is_simple_statement(body: &[Token]) -> bool {
    let Some(first) = body.first() else {
        return false;
    };
    if COMPOUND_STARTS.iter().any(|kw| is(first, kw)) {
        return false;
    }
    let mut depth = 0i32;
    let mut semis = 0;
    for (i, t) in body.iter().enumerate() {
        if is(t, "{") || is(t, "}") || t.kind == TokenKind::DirectiveEnd || is(t, "#") {
            return false;
        }
        if is(t, "(") || is(t, "[") {
            depth += 1;
        } else if is(t, ")") || is(t, "]") {
            depth -= 1;
        } else if is(t, ";") && depth == 0 {
            semis += 1;
            if i + 1 != body.len() {
                return false;
            }
        }
    }
    semis == 1 && depth == 0
}

/// Removes `{`/`}` around one simple statement that is the body of a
/// control statement: `if (c) { x(); }` becomes `if (c) x();`.
pub fn unwrap_redundant_braces(tokens: Vec<Token>) -> Vec<Token> {
    let mut drop = vec![false; tokens.len()];
    for open in 0..tokens.len() {
        if !is(&tokens[open], "{") || !is_control_body(&tokens, open) {
            continue;
        }
        let Some(close) = matching(&tokens, open, true) else {
            continue;
        };
        if is_simple_statement(&tokens[open + 1..close]) {
            drop[open] = true;
            drop[close] = true;
        }
    }
    tokens
        .into_iter()
        .zip(drop)
        .filter_map(|(t, d)| (!d).then_some(t))
        .collect()
}

/// Normalizers keyed by lower-case file extension.
#[derive(Clone)]
pub struct NormalizerRegistry {
    by_ext: BTreeMap<String, Arc<dyn Normalizer>>,
}

impl Default for NormalizerRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        let java: Arc<dyn Normalizer> = Arc::new(CLikeNormalizer::java());
        let c: Arc<dyn Normalizer> = Arc::new(CLikeNormalizer::c_family());
        reg.register("java", java);
        for ext in ["c", "h", "cc", "cpp", "cxx", "hpp", "hh", "hxx", "cs"] {
            reg.register(ext, c.clone());
        }
        reg
    }
}

impl NormalizerRegistry {
    pub fn empty() -> Self {
        Self {
            by_ext: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, ext: &str, normalizer: Arc<dyn Normalizer>) {
        self.by_ext
            .insert(ext.trim_start_matches('.').to_ascii_lowercase(), normalizer);
    }

    /// Maps `ext` onto a built-in normalizer by name (`java` or `c-family`).
    pub fn register_named(&mut self, ext: &str, name: &str) -> Result<()> {
        let n: Arc<dyn Normalizer> = match name {
            "java" => Arc::new(CLikeNormalizer::java()),
            "c-family" | "c" => Arc::new(CLikeNormalizer::c_family()),
            other => return Err(Error::InvalidConfig(format!("unknown normalizer `{other}`"))),
        };
        self.register(ext, n);
        Ok(())
    }

    pub fn for_path(&self, path: &str) -> Option<&dyn Normalizer> {
        let name = path.rsplit('/').next().unwrap_or(path);
        let ext = name.rsplit_once('.')?.1.to_ascii_lowercase();
        self.by_ext.get(&ext).map(Arc::as_ref)
    }

    pub fn extensions(&self) -> impl Iterator<Item = &str> {
        self.by_ext.keys().map(String::as_str)
    }
}

/// Per-file outcome of comparing two versions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum FileVerdict {
    Equivalent,
    Changed,
    Unavailable { reason: String },
}

/// Compares two versions of one file. Added/deleted files, unknown
/// extensions and unlexable text all count as changed.
pub fn compare_versions(
    path: &str,
    before: Option<&str>,
    after: Option<&str>,
    registry: &NormalizerRegistry,
) -> FileVerdict {
    let (Some(before), Some(after)) = (before, after) else {
        return FileVerdict::Changed;
    };
    let Some(normalizer) = registry.for_path(path) else {
        return FileVerdict::Unavailable {
            reason: format!("no normalizer for {path}"),
        };
    };
    match (normalizer.fingerprint(before), normalizer.fingerprint(after)) {
        (Ok(a), Ok(b)) if a == b => FileVerdict::Equivalent,
        (Ok(_), Ok(_)) => FileVerdict::Changed,
        (Err(e), _) | (_, Err(e)) => FileVerdict::Unavailable {
            reason: format!("{path}: {e}"),
        },
    }
}

/// Elements of `suspicious` whose history contains `commit`.
pub fn elements_touched_by(
    commit: &CommitId,
    suspicious: &BTreeSet<CodeElement>,
    evolve: &EvolveMap,
) -> BTreeSet<CodeElement> {
    suspicious
        .iter()
        .filter(|e| evolve.contains(commit, e))
        .cloned()
        .collect()
}

/// True iff every listed file is unchanged after normalization.
/// An empty file list is not evidence of a style change.
pub fn is_style_change(
    commit: &CommitRecord,
    files: &[FileChange],
    adapter: &dyn VcsAdapter,
    registry: &NormalizerRegistry,
) -> Result<bool> {
    if files.is_empty() {
        return Err(Error::FileUnavailable(format!(
            "commit {} records no changed files",
            commit.id
        )));
    }
    for change in files {
        let path = change
            .new_path
            .as_deref()
            .or(change.old_path.as_deref())
            .unwrap_or_default();
        let (before, after) = adapter.file_versions(&commit.id, change)?;
        match compare_versions(path, before.as_deref(), after.as_deref(), registry) {
            FileVerdict::Equivalent => {}
            FileVerdict::Changed => return Ok(false),
            FileVerdict::Unavailable { reason } => return Err(Error::FileUnavailable(reason)),
        }
    }
    Ok(true)
}

/// Decides whether a candidate commit is style-only.
pub trait StyleChangeDetector: Sync {
    fn is_style_change(&self, commit: &CommitRecord) -> Result<bool>;
}

/// Compares file versions materialized from a VCS adapter. The files
/// checked are the ones recorded on the commit by history tracing, i.e. the
/// covered files it modified.
pub struct SyntacticDetector<'a> {
    pub adapter: &'a dyn VcsAdapter,
    pub registry: &'a NormalizerRegistry,
}

impl StyleChangeDetector for SyntacticDetector<'_> {
    fn is_style_change(&self, commit: &CommitRecord) -> Result<bool> {
        is_style_change(commit, &commit.changed_files, self.adapter, self.registry)
    }
}

/// Verdicts computed earlier (e.g. stored alongside a serialized history).
pub struct PrecomputedStyle(pub BTreeSet<CommitId>);

impl StyleChangeDetector for PrecomputedStyle {
    fn is_style_change(&self, commit: &CommitRecord) -> Result<bool> {
        Ok(self.0.contains(&commit.id))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleFilterOutcome {
    pub kept: BTreeSet<CommitId>,
    pub removed: BTreeSet<CommitId>,
    /// Commits kept because a verdict could not be reached.
    pub undecided: BTreeMap<CommitId, String>,
}

/// Drops style-only commits from the candidate set. Detector errors keep
/// the commit.
pub fn reduce_search_space(
    candidates: &BTreeSet<CommitId>,
    evolve: &EvolveMap,
    detector: &dyn StyleChangeDetector,
) -> StyleFilterOutcome {
    let verdicts: Vec<(CommitId, Result<bool>)> = candidates
        .par_iter()
        .map(|c| {
            let verdict = match evolve.commit(c) {
                Some(record) => detector.is_style_change(record),
                None => Err(Error::UnknownCommit(c.to_string())),
            };
            (c.clone(), verdict)
        })
        .collect();
    let mut out = StyleFilterOutcome::default();
    for (c, verdict) in verdicts {
        match verdict {
            Ok(true) => {
                out.removed.insert(c);
            }
            Ok(false) => {
                out.kept.insert(c);
            }
            Err(e) => {
                out.undecided.insert(c.clone(), e.to_string());
                out.kept.insert(c);
            }
        }
    }
    out
}
