//! Run configuration (TOML) and the reproducibility manifest written next
//! to every output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coverage::CoverageFormat;
use crate::error::{Error, Result};
use crate::scorer::VotingConfig;
use crate::style::NormalizerRegistry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    /// Working copy used for live history mining and command oracles.
    pub repo: Option<PathBuf>,
    pub coverage: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub coverage_format: CoverageFormat,
    /// Serialized history; used instead of mining `repo` when set.
    pub history: Option<PathBuf>,
    /// Revision the failure was observed at.
    #[serde(default = "default_until")]
    pub until: String,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_format() -> CoverageFormat {
    CoverageFormat::MatrixJson
}

fn default_until() -> String {
    "HEAD".into()
}

fn default_out() -> PathBuf {
    PathBuf::from("culprit-out")
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            repo: None,
            coverage: None,
            coverage_format: default_format(),
            history: None,
            until: default_until(),
            out: default_out(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    #[serde(default)]
    pub skip_stage2: bool,
    #[serde(default = "yes")]
    pub select_relevant: bool,
}

fn yes() -> bool {
    true
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            skip_stage2: false,
            select_relevant: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleConfig {
    /// Shell command run in a checkout of each probed commit; `{commit}` is
    /// replaced by the commit id. Exit 0 means good, 1 bad.
    Command { command: String },
    /// JSON object mapping commit ids to `"good"` / `"bad"`.
    Table { table: PathBuf },
    Interactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub voting: VotingConfig,
    #[serde(default)]
    pub stages: StageConfig,
    pub oracle: Option<OracleConfig>,
    /// Probe the lone candidate of a one-commit search space.
    #[serde(default = "yes")]
    pub confirm_single: bool,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
    /// Extra extension to normalizer mappings, e.g. `{ kt = "java" }`.
    #[serde(default)]
    pub style_extensions: BTreeMap<String, String>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).min(8)
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            paths: PathsConfig::default(),
            voting: VotingConfig::default(),
            stages: StageConfig::default(),
            oracle: None,
            confirm_single: true,
            workers: default_workers(),
            seed: 0,
            style_extensions: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    /// Parses TOML; relative paths are taken relative to `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_col(text, s.start))
                .unwrap_or((0, 0));
            Error::Parse {
                path: base.display().to_string(),
                line,
                column,
                message: e.message().to_owned(),
            }
        })?;
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Parse {
                line,
                column,
                message,
                ..
            } => Error::Parse {
                path: path.display().to_string(),
                line,
                column,
                message,
            },
            other => other,
        })
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        paths.repo.as_mut().map(fix);
        paths.coverage.as_mut().map(fix);
        paths.history.as_mut().map(fix);
        fix(&mut paths.out);
        if let Some(OracleConfig::Table { table }) = &mut self.oracle {
            fix(table);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.voting.validate()?;
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if self.paths.until.trim().is_empty() {
            return Err(Error::InvalidConfig("`until` must name a revision".into()));
        }
        if let Some(OracleConfig::Command { command }) = &self.oracle {
            if command.trim().is_empty() {
                return Err(Error::InvalidConfig("oracle command is empty".into()));
            }
        }
        self.registry()?;
        Ok(())
    }

    /// Default normalizers plus the configured extension overrides.
    pub fn registry(&self) -> Result<NormalizerRegistry> {
        let mut reg = NormalizerRegistry::default();
        for (ext, name) in &self.style_extensions {
            reg.register_named(ext, name)?;
        }
        Ok(reg)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Inputs, configuration and tool version of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    /// Input path to SHA-256 digest.
    pub inputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            tool: "culprit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs
            .insert(path.display().to_string(), digest_path(path)?);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("run-manifest.json");
        fs::write(&path, self.to_json()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// SHA-256 of a file, or of a directory's relative paths and contents in
/// sorted order.
pub fn digest_path(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    if path.is_dir() {
        let mut files = Vec::new();
        collect_files(path, path, &mut files)?;
        files.sort();
        for rel in files {
            let bytes = fs::read(path.join(&rel)).map_err(|e| Error::io(path.join(&rel), e))?;
            hasher.update((rel.len() as u64).to_le_bytes());
            hasher.update(rel.as_bytes());
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(&bytes);
        }
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let p = entry.path();
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).unwrap_or(&p);
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}
