//! A small Java history with one style-only commit (comment rewrite plus
//! braces around a single-statement `if` body) and one semantic culprit.

use std::collections::{BTreeMap, BTreeSet};

use culprit_core::{CodeElement, CoverageMatrix, Outcome, TestCase};

use super::GitFixture;

const V0: &str = r#"package org.example;

public class StringEscape {

    // Escapes a string for output.
    public static String escape(String s) {
        if (s == null) return null;
        StringBuilder out = new StringBuilder();
        for (char ch : s.toCharArray()) {
            if (ch == '/') out.append("\\/");
            else out.append(ch);
        }
        return out.toString();
    }
}
"#;

const PAD: &str = r#"
    public static String pad(String s, int n) {
        StringBuilder b = new StringBuilder(s);
        while (b.length() < n) b.append(' ');
        return b.toString();
    }
}
"#;

/// Appends `pad` after `escape`, inside the class body.
fn with_pad(base: &str) -> String {
    format!("{}{PAD}", base.strip_suffix("}\n").unwrap())
}

pub struct EscapeRepo {
    pub fx: GitFixture,
    pub c0: String,
    pub pad: String,
    pub style: String,
    pub bic: String,
    pub pad2: String,
    pub head_source: String,
}

pub const FILE: &str = "src/org/example/StringEscape.java";

impl EscapeRepo {
    pub fn build() -> Self {
        let mut fx = GitFixture::new();
        let v1 = with_pad(V0);
        let v2 = v1
            .replace(
                "    // Escapes a string for output.\n",
                "    /**\n     * Escapes {@code s} for JavaScript output.\n     */\n",
            )
            .replace(
                "        if (s == null) return null;\n",
                "        if (s == null) {\n            return null;\n        }\n",
            );
        let v3 = v2.replace(r#"if (ch == '/') out.append("\\/");"#, r#"if (ch == '"') out.append("\\\"");"#);
        let v4 = v3.replace("b.append(' ');", "b.append('.');");
        assert!(v1 != V0 && v2 != v1 && v3 != v2 && v4 != v3);

        let other = |n: u32| format!("package org.example;\n\nclass Other {{\n    int v() {{ return {n}; }}\n}}\n");
        let c0 = fx.commit(&[(FILE, V0), ("README.md", "escape utils\n")], "initial import");
        fx.commit(&[("src/org/example/Other.java", &other(1))], "add Other");
        let pad = fx.commit(&[(FILE, &v1)], "add pad");
        fx.commit(&[("README.md", "escape utils\n\nsee docs\n")], "readme");
        let style = fx.commit(&[(FILE, &v2)], "tidy escape javadoc and braces");
        fx.commit(&[("src/org/example/Other.java", &other(2))], "tweak Other");
        let bic = fx.commit(&[(FILE, &v3)], "escape quotes instead of slashes");
        fx.commit(&[("src/org/example/Other.java", &other(3))], "tweak Other again");
        let pad2 = fx.commit(&[(FILE, &v4)], "pad with dots");
        fx.commit(&[("README.md", "escape utils\n\nsee docs\nv2\n")], "readme v2");
        fx.commit(&[("docs/notes.txt", "notes\n")], "notes");
        Self {
            fx,
            c0,
            pad,
            style,
            bic,
            pad2,
            head_source: v4,
        }
    }

    fn el(&self, needle: &str) -> CodeElement {
        CodeElement::new(FILE, GitFixture::line_of(&self.head_source, needle)).unwrap()
    }

    /// Three `escape` lines covered only by the failing test, two `pad`
    /// lines covered by it and by one passing test.
    pub fn coverage(&self) -> CoverageMatrix {
        let escape: BTreeSet<CodeElement> = ["StringBuilder out", "if (ch ==", "return out.toString()"]
            .iter()
            .map(|n| self.el(n))
            .collect();
        let pad: BTreeSet<CodeElement> = ["StringBuilder b", "return b.toString()"]
            .iter()
            .map(|n| self.el(n))
            .collect();
        let failing = "org.example.StringEscapeTest::testEscapeSlash";
        let passing = "org.example.StringEscapeTest::testPad";
        let mut covered = BTreeMap::new();
        covered.insert(failing.to_owned(), escape.union(&pad).cloned().collect());
        covered.insert(passing.to_owned(), pad);
        CoverageMatrix::new(
            vec![TestCase::new(failing, Outcome::Fail), TestCase::new(passing, Outcome::Pass)],
            covered,
        )
        .unwrap()
    }
}
