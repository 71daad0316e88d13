#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use culprit_core::coverage::to_matrix_json;
use culprit_core::{CodeElement, CoverageMatrix, Outcome, TestCase};

pub const FILE: &str = "src/Calc.java";

const V0: &str = "\
public class Calc {
    // adds two numbers
    public static int add(int a, int b) {
        if (a == 0) return b;
        int s = a + b;
        return s;
    }
}
";

const NEG: &str = "
    public static int neg(int a) {
        return -a;
    }
}
";

/// Six commits: import of `add`, addition of `neg`, a style-only edit of
/// `add`, the culprit changing `add`, an edit of `neg`, and a README.
pub struct Repo {
    pub dir: tempfile::TempDir,
    pub commits: Vec<String>,
    clock: i64,
}

impl Repo {
    pub fn build() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut repo = Self {
            dir,
            commits: Vec::new(),
            clock: 1_600_000_000,
        };
        repo.git(&["init", "-q", "-b", "main"]);
        let with_neg = format!("{}{NEG}", V0.strip_suffix("}\n").unwrap());
        let v1 = with_neg
            .replace("    // adds two numbers\n", "    /** Sum of {@code a} and {@code b}. */\n")
            .replace("        if (a == 0) return b;\n", "        if (a == 0) {\n            return b;\n        }\n");
        let v2 = v1.replace("int s = a + b;", "int s = a - b;");
        let v3 = v2.replace("return -a;", "return 0 - a;");
        repo.commit(FILE, V0, "import");
        repo.commit(FILE, &with_neg, "add neg");
        repo.commit(FILE, &v1, "tidy add");
        repo.commit(FILE, &v2, "rework add");
        repo.commit(FILE, &v3, "rework neg");
        repo.commit("README.md", "calc\n", "readme");
        repo
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn import(&self) -> &str {
        &self.commits[0]
    }

    pub fn style(&self) -> &str {
        &self.commits[2]
    }

    pub fn bic(&self) -> &str {
        &self.commits[3]
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
            .unwrap();
        assert!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    fn commit(&mut self, path: &str, content: &str, message: &str) {
        let p = self.path().join(path);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
        self.clock += 3600;
        self.git(&["add", "-A"]);
        self.git(&["commit", "-q", "-m", message]);
        let sha = self.git(&["rev-parse", "HEAD"]).trim().to_owned();
        self.commits.push(sha);
    }

    /// Failing test covers the body of `add` and the body of `neg`; the
    /// passing test covers `neg` only.
    pub fn coverage(&self) -> CoverageMatrix {
        let head = fs::read_to_string(self.path().join(FILE)).unwrap();
        let line = |needle: &str| {
            let n = head.lines().position(|l| l.contains(needle)).unwrap() as u32 + 1;
            CodeElement::new(FILE, n).unwrap()
        };
        let add: BTreeSet<CodeElement> = [line("int s ="), line("return s;")].into();
        let neg: BTreeSet<CodeElement> = [line("return 0 - a;")].into();
        let mut covered = BTreeMap::new();
        covered.insert("CalcTest::testAdd".to_owned(), add.union(&neg).cloned().collect());
        covered.insert("CalcTest::testNeg".to_owned(), neg);
        CoverageMatrix::new(
            vec![
                TestCase::new("CalcTest::testAdd", Outcome::Fail),
                TestCase::new("CalcTest::testNeg", Outcome::Pass),
            ],
            covered,
        )
        .unwrap()
    }

    pub fn write_coverage(&self, dir: &Path) -> PathBuf {
        let p = dir.join("coverage.json");
        fs::write(&p, to_matrix_json(&self.coverage())).unwrap();
        p
    }
}

pub fn culprit(args: &[&str]) -> Output {
    culprit_with_input(args, "")
}

pub fn culprit_with_input(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_culprit"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
