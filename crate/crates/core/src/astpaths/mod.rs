//! Java-subset parsing and AST path-context extraction.
//!
//! The entry points are [`parse_method`] (source text for a single method
//! declaration in), [`extract_paths`] (path contexts out), [`subtokenize`]
//! (identifier splitting shared with dataset targets), and [`loc_count`].

mod ast;
mod lexer;
mod paths;

pub use ast::{parse_method, Ast, Node, NodeId, ParseError, Terminal};
pub use lexer::LexError;
pub use paths::{extract_paths, Direction, PathContext, PathLimits};

/// Split an identifier-like string into lowercase subtokens on camelCase
/// boundaries, letter/digit transitions, and any non-alphanumeric character.
///
/// `getLastKnownLocation` → `[get, last, known, location]`;
/// `HTTP_client2go` → `[http, client, 2, go]`.
pub fn subtokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pieces = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_ascii_alphanumeric() {
            if !cur.is_empty() {
                pieces.push(std::mem::take(&mut cur));
            }
            continue;
        }
        if !cur.is_empty() {
            let prev = *chars[..i]
                .iter()
                .rev()
                .find(|ch| ch.is_ascii_alphanumeric())
                .unwrap();
            let next_lower = chars.get(i + 1).map(|n| n.is_ascii_lowercase());
            let boundary =
                // camelCase: aB
                (prev.is_ascii_lowercase() && c.is_ascii_uppercase())
                // acronym end: HTTPClient -> HTTP | Client
                || (prev.is_ascii_uppercase()
                    && c.is_ascii_uppercase()
                    && next_lower == Some(true))
                // letter/digit transitions, both directions
                || (prev.is_ascii_alphabetic() && c.is_ascii_digit())
                || (prev.is_ascii_digit() && c.is_ascii_alphabetic());
            if boundary {
                pieces.push(std::mem::take(&mut cur));
            }
        }
        cur.push(c.to_ascii_lowercase());
    }
    if !cur.is_empty() {
        pieces.push(cur);
    }
    pieces
}

/// Count lines that contain at least one character that is neither
/// whitespace nor part of a comment. String and char literals keep their
/// content (so `"http://x"` does not start a comment).
pub fn loc_count(source: &str) -> usize {
    #[derive(PartialEq)]
    enum State {
        Code,
        Line,
        Block,
        Str,
        Chr,
    }
    let mut state = State::Code;
    let mut count = 0;
    for line in source.lines() {
        if state == State::Line {
            state = State::Code;
        }
        let chars: Vec<char> = line.chars().collect();
        let mut has_code = false;
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            match state {
                State::Code => {
                    if c == '/' && chars.get(i + 1) == Some(&'/') {
                        state = State::Line;
                        break;
                    } else if c == '/' && chars.get(i + 1) == Some(&'*') {
                        state = State::Block;
                        i += 2;
                        continue;
                    } else if c == '"' {
                        state = State::Str;
                        has_code = true;
                    } else if c == '\'' {
                        state = State::Chr;
                        has_code = true;
                    } else if !c.is_whitespace() {
                        has_code = true;
                    }
                }
                State::Block => {
                    if c == '*' && chars.get(i + 1) == Some(&'/') {
                        state = State::Code;
                        i += 2;
                        continue;
                    }
                }
                State::Str => {
                    if c == '\\' {
                        i += 2;
                        continue;
                    }
                    if c == '"' {
                        state = State::Code;
                    }
                }
                State::Chr => {
                    if c == '\\' {
                        i += 2;
                        continue;
                    }
                    if c == '\'' {
                        state = State::Code;
                    }
                }
                State::Line => unreachable!(),
            }
            i += 1;
        }
        // unterminated string/char literals do not span lines in Java
        if state == State::Str || state == State::Chr {
            state = State::Code;
        }
        if has_code {
            count += 1;
        }
    }
    count
}
