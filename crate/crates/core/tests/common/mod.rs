#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

/// Scratch git repository with deterministic commit dates.
pub struct GitFixture {
    dir: tempfile::TempDir,
    clock: i64,
}

impl GitFixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        let fx = Self {
            dir,
            clock: 1_600_000_000,
        };
        fx.git(&["init", "-q", "-b", "main"]);
        fx
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn git(&self, args: &[&str]) -> String {
        let out = Command::new("git")
            .arg("-C")
            .arg(self.path())
            .args(["-c", "user.name=Fixture", "-c", "user.email=fixture@example.com"])
            .args(["-c", "commit.gpgsign=false"])
            .args(args)
            .env("GIT_AUTHOR_DATE", format!("@{} +0000", self.clock))
            .env("GIT_COMMITTER_DATE", format!("@{} +0000", self.clock))
            .output()
            .expect("git runs");
        assert!(
            out.status.success(),
            "git {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).expect("utf-8")
    }

    pub fn write(&self, path: &str, content: &str) {
        let p: PathBuf = self.path().join(path);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).unwrap();
        }
        fs::write(p, content).unwrap();
    }

    /// Writes `files`, commits everything one hour after the previous
    /// commit, and returns the new commit's hash.
    pub fn commit(&mut self, files: &[(&str, &str)], message: &str) -> String {
        for (path, content) in files {
            self.write(path, content);
        }
        self.clock += 3600;
        self.git(&["add", "-A"]);
        self.git(&["commit", "-q", "--allow-empty", "-m", message]);
        self.git(&["rev-parse", "HEAD"]).trim().to_owned()
    }

    pub fn mv(&mut self, from: &str, to: &str, message: &str) -> String {
        if let Some(parent) = self.path().join(to).parent() {
            fs::create_dir_all(parent).unwrap();
        }
        self.git(&["mv", from, to]);
        self.commit(&[], message)
    }

    /// Line number (1-based) of the first line of `content` containing `needle`.
    pub fn line_of(content: &str, needle: &str) -> u32 {
        content
            .lines()
            .position(|l| l.contains(needle))
            .unwrap_or_else(|| panic!("`{needle}` not found")) as u32
            + 1
    }
}

pub mod escape;
