//! Brace-matching resolver for the method enclosing a line.

use crate::lexer::{tokenize, LexOptions, Token, TokenKind};

const NON_CALLABLE_HEADS: &[&str] = &[
    "if", "else", "for", "foreach", "while", "do", "switch", "try", "catch", "finally",
    "synchronized", "using", "lock", "return", "new", "class", "interface", "enum", "struct",
    "namespace", "record",
];

struct Block {
    header_line: u32,
    close_line: u32,
    callable: bool,
}

fn is(tok: &Token, text: &str) -> bool {
    tok.kind != TokenKind::Literal && tok.text == text
}

/// First token of the header belonging to the `{` at `open`: the token
/// after the previous `;`, `{` or `}` outside parentheses.
fn header_start(tokens: &[Token], open: usize) -> usize {
    let mut depth = 0i32;
    let mut i = open;
    while i > 0 {
        let t = &tokens[i - 1];
        if is(t, ")") {
            depth += 1;
        } else if is(t, "(") {
            depth -= 1;
        } else if depth <= 0 && (is(t, ";") || is(t, "{") || is(t, "}")) {
            break;
        }
        i -= 1;
    }
    i
}

fn is_callable_header(header: &[Token]) -> bool {
    let mut depth = 0;
    let mut saw_paren = false;
    for t in header {
        if is(t, "(") {
            depth += 1;
            saw_paren = true;
        } else if is(t, ")") {
            depth -= 1;
        } else if depth == 0
            && (is(t, "=")
                || is(t, "->")
                || is(t, "=>")
                || NON_CALLABLE_HEADS.iter().any(|kw| is(t, kw)))
        {
            return false;
        }
    }
    saw_paren
}

/// `(start, end)` lines of the outermost callable block (method, function,
/// constructor) containing `line`, or `None` when the source cannot be lexed
/// or no such block exists.
pub fn resolve_enclosing_span(source: &str, line: u32, opts: &LexOptions) -> Option<(u32, u32)> {
    let tokens = tokenize(source, opts).ok()?;
    let mut stack: Vec<(u32, bool)> = Vec::new();
    let mut blocks = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if is(t, "{") {
            let start = header_start(&tokens, i);
            let header = &tokens[start..i];
            let header_line = header.first().map_or(t.line, |h| h.line);
            stack.push((header_line, is_callable_header(header)));
        } else if is(t, "}") {
            let (header_line, callable) = stack.pop()?;
            blocks.push(Block {
                header_line,
                close_line: t.line,
                callable,
            });
        }
    }
    if !stack.is_empty() {
        return None;
    }
    blocks
        .iter()
        .filter(|b| b.callable && b.header_line <= line && line <= b.close_line)
        .max_by_key(|b| b.close_line - b.header_line)
        .map(|b| (b.header_line, b.close_line))
}
