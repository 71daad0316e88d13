//! A small tokenizer for C-family source text.
//!
//! Comments and whitespace are dropped; string and character literals are
//! kept byte-exact; operators are split with maximal munch so that two
//! inputs lex identically only if they differ in layout alone.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Number,
    Literal,
    Punct,
    /// End of a preprocessor directive line.
    DirectiveEnd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub line: u32,
    pub kind: TokenKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("input is not text")]
    Binary,
    #[error("unterminated {what} starting at line {line}")]
    Unterminated { what: &'static str, line: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexOptions {
    pub line_comment: Option<&'static str>,
    pub block_comment: Option<(&'static str, &'static str)>,
    /// `#` at the start of a line opens a directive that ends at the newline.
    pub preprocessor: bool,
    /// `'...'` is a character literal (otherwise `'` is punctuation).
    pub char_literals: bool,
    /// `"""` opens a multi-line text block.
    pub text_blocks: bool,
}

impl LexOptions {
    pub fn java() -> Self {
        Self {
            line_comment: Some("//"),
            block_comment: Some(("/*", "*/")),
            preprocessor: false,
            char_literals: true,
            text_blocks: true,
        }
    }

    pub fn c_family() -> Self {
        Self {
            preprocessor: true,
            text_blocks: false,
            ..Self::java()
        }
    }
}

const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->*", "<=>", "??=", "==", "!=", "<=", ">=", "&&", "||",
    "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "->", "::", "=>", "##",
    ".*", "?.", "??",
];

fn is_word_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_word_char(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

pub fn tokenize(src: &str, opts: &LexOptions) -> Result<Vec<Token>, LexError> {
    if src.contains('\0') {
        return Err(LexError::Binary);
    }
    let chars: Vec<char> = src.chars().collect();
    let n = chars.len();
    let starts_with = |i: usize, pat: &str| -> bool {
        let mut j = i;
        for p in pat.chars() {
            if j >= n || chars[j] != p {
                return false;
            }
            j += 1;
        }
        true
    };

    let mut out = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut at_line_start = true;
    let mut in_directive = false;

    while i < n {
        let c = chars[i];

        if c == '\n' {
            if in_directive {
                out.push(Token {
                    text: "\n".into(),
                    line,
                    kind: TokenKind::DirectiveEnd,
                });
                in_directive = false;
            }
            line += 1;
            i += 1;
            at_line_start = true;
            continue;
        }
        if in_directive && c == '\\' && (starts_with(i + 1, "\n") || starts_with(i + 1, "\r\n")) {
            i += if chars[i + 1] == '\r' { 3 } else { 2 };
            line += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if let Some(lc) = opts.line_comment {
            if starts_with(i, lc) {
                while i < n && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
        }
        if let Some((open, close)) = opts.block_comment {
            if starts_with(i, open) {
                let start_line = line;
                i += open.chars().count();
                loop {
                    if i >= n {
                        return Err(LexError::Unterminated {
                            what: "comment",
                            line: start_line,
                        });
                    }
                    if starts_with(i, close) {
                        i += close.chars().count();
                        break;
                    }
                    if chars[i] == '\n' {
                        line += 1;
                    }
                    i += 1;
                }
                continue;
            }
        }

        let was_line_start = at_line_start;
        at_line_start = false;
        let tok_line = line;

        if opts.preprocessor && c == '#' && was_line_start && !in_directive {
            in_directive = true;
            out.push(Token {
                text: "#".into(),
                line,
                kind: TokenKind::Punct,
            });
            i += 1;
            continue;
        }

        if opts.text_blocks && starts_with(i, "\"\"\"") {
            let start = i;
            i += 3;
            loop {
                if i >= n {
                    return Err(LexError::Unterminated {
                        what: "text block",
                        line: tok_line,
                    });
                }
                if chars[i] == '\\' {
                    i += 2;
                    continue;
                }
                if starts_with(i, "\"\"\"") {
                    i += 3;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                }
                i += 1;
            }
            out.push(Token {
                text: chars[start..i.min(n)].iter().collect(),
                line: tok_line,
                kind: TokenKind::Literal,
            });
            continue;
        }

        if c == '"' || (c == '\'' && opts.char_literals) {
            let start = i;
            i += 1;
            loop {
                if i >= n || chars[i] == '\n' {
                    return Err(LexError::Unterminated {
                        what: if c == '"' { "string" } else { "character literal" },
                        line: tok_line,
                    });
                }
                if chars[i] == '\\' {
                    i += 2;
                    continue;
                }
                if chars[i] == c {
                    i += 1;
                    break;
                }
                i += 1;
            }
            out.push(Token {
                text: chars[start..i.min(n)].iter().collect(),
                line: tok_line,
                kind: TokenKind::Literal,
            });
            continue;
        }

        if is_word_start(c) {
            let start = i;
            while i < n && is_word_char(chars[i]) {
                i += 1;
            }
            out.push(Token {
                text: chars[start..i].iter().collect(),
                line: tok_line,
                kind: TokenKind::Word,
            });
            continue;
        }

        if c.is_ascii_digit() || (c == '.' && i + 1 < n && chars[i + 1].is_ascii_digit()) {
            let start = i;
            i += 1;
            while i < n {
                let d = chars[i];
                if d.is_alphanumeric() || d == '_' || d == '.' {
                    i += 1;
                } else if (d == '+' || d == '-')
                    && matches!(chars[i - 1], 'e' | 'E' | 'p' | 'P')
                {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(Token {
                text: chars[start..i].iter().collect(),
                line: tok_line,
                kind: TokenKind::Number,
            });
            continue;
        }

        let op = OPERATORS
            .iter()
            .find(|op| starts_with(i, op))
            .map(|op| op.to_string())
            .unwrap_or_else(|| c.to_string());
        i += op.chars().count();
        out.push(Token {
            text: op,
            line: tok_line,
            kind: TokenKind::Punct,
        });
    }
    if in_directive {
        out.push(Token {
            text: "\n".into(),
            line,
            kind: TokenKind::DirectiveEnd,
        });
    }
    Ok(out)
}
