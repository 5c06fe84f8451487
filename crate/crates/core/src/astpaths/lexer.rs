//! Tokenizer for the supported Java subset.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexError {
    #[error("unexpected character {ch:?} at line {line}, column {col}")]
    UnexpectedChar { ch: char, line: usize, col: usize },
    #[error("unterminated {what} starting at line {line}, column {col}")]
    Unterminated {
        what: &'static str,
        line: usize,
        col: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Keyword,
    Modifier,
    PrimType,
    IntLit,
    FloatLit,
    StringLit,
    CharLit,
    BoolLit,
    NullLit,
    Punct,
    Op,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    pub line: usize,
    pub col: usize,
}

const MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "static",
    "final",
    "abstract",
    "native",
    "synchronized",
    "strictfp",
    "transient",
    "volatile",
];

const PRIM_TYPES: &[&str] = &[
    "void", "boolean", "byte", "short", "char", "int", "long", "float", "double",
];

// reserved words we either support or reject by name during parsing
const KEYWORDS: &[&str] = &[
    "return",
    "if",
    "else",
    "while",
    "for",
    "new",
    "switch",
    "case",
    "default",
    "do",
    "break",
    "continue",
    "try",
    "catch",
    "finally",
    "throw",
    "throws",
    "this",
    "super",
    "instanceof",
    "class",
    "interface",
    "enum",
    "extends",
    "implements",
    "import",
    "package",
    "assert",
    "goto",
    "const",
];

pub fn lex(source: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! advance {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let (tok_line, tok_col) = (line, col);
        if c.is_whitespace() {
            advance!();
            continue;
        }
        // comments
        if c == '/' && i + 1 < chars.len() && chars[i + 1] == '/' {
            while i < chars.len() && chars[i] != '\n' {
                advance!();
            }
            continue;
        }
        if c == '/' && i + 1 < chars.len() && chars[i + 1] == '*' {
            advance!();
            advance!();
            let mut closed = false;
            while i < chars.len() {
                if chars[i] == '*' && i + 1 < chars.len() && chars[i + 1] == '/' {
                    advance!();
                    advance!();
                    closed = true;
                    break;
                }
                advance!();
            }
            if !closed {
                return Err(LexError::Unterminated {
                    what: "block comment",
                    line: tok_line,
                    col: tok_col,
                });
            }
            continue;
        }
        // identifiers and words
        if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                advance!();
            }
            let text: String = chars[start..i].iter().collect();
            let kind = if text == "true" || text == "false" {
                TokKind::BoolLit
            } else if text == "null" {
                TokKind::NullLit
            } else if MODIFIERS.contains(&text.as_str()) {
                TokKind::Modifier
            } else if PRIM_TYPES.contains(&text.as_str()) {
                TokKind::PrimType
            } else if KEYWORDS.contains(&text.as_str()) {
                TokKind::Keyword
            } else {
                TokKind::Ident
            };
            tokens.push(Token {
                kind,
                text,
                line: tok_line,
                col: tok_col,
            });
            continue;
        }
        // numbers
        if c.is_ascii_digit() {
            let start = i;
            let mut is_float = false;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance!();
            }
            if i < chars.len() && chars[i] == '.' && i + 1 < chars.len() && chars[i + 1].is_ascii_digit()
            {
                is_float = true;
                advance!();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    advance!();
                }
            }
            let text: String = chars[start..i].iter().collect();
            if text.ends_with('f') || text.ends_with('F') || text.ends_with('d') || text.ends_with('D')
            {
                is_float = true;
            }
            tokens.push(Token {
                kind: if is_float {
                    TokKind::FloatLit
                } else {
                    TokKind::IntLit
                },
                text,
                line: tok_line,
                col: tok_col,
            });
            continue;
        }
        // string literal
        if c == '"' {
            advance!();
            let mut value = String::new();
            let mut closed = false;
            while i < chars.len() {
                if chars[i] == '\\' && i + 1 < chars.len() {
                    value.push(chars[i]);
                    advance!();
                    value.push(chars[i]);
                    advance!();
                    continue;
                }
                if chars[i] == '"' {
                    advance!();
                    closed = true;
                    break;
                }
                if chars[i] == '\n' {
                    break;
                }
                value.push(chars[i]);
                advance!();
            }
            if !closed {
                return Err(LexError::Unterminated {
                    what: "string literal",
                    line: tok_line,
                    col: tok_col,
                });
            }
            tokens.push(Token {
                kind: TokKind::StringLit,
                text: value,
                line: tok_line,
                col: tok_col,
            });
            continue;
        }
        // char literal
        if c == '\'' {
            advance!();
            let mut value = String::new();
            let mut closed = false;
            while i < chars.len() {
                if chars[i] == '\\' && i + 1 < chars.len() {
                    value.push(chars[i]);
                    advance!();
                    value.push(chars[i]);
                    advance!();
                    continue;
                }
                if chars[i] == '\'' {
                    advance!();
                    closed = true;
                    break;
                }
                if chars[i] == '\n' {
                    break;
                }
                value.push(chars[i]);
                advance!();
            }
            if !closed {
                return Err(LexError::Unterminated {
                    what: "char literal",
                    line: tok_line,
                    col: tok_col,
                });
            }
            tokens.push(Token {
                kind: TokKind::CharLit,
                text: value,
                line: tok_line,
                col: tok_col,
            });
            continue;
        }
        // operators and punctuation, longest match first
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let multi = ["==", "!=", "<=", ">=", "&&", "||", "->", "++", "--", "+=", "-=", "*=", "/=", "%=", "<<", ">>", "&=", "|=", "^="];
        if multi.contains(&two.as_str()) {
            advance!();
            advance!();
            tokens.push(Token {
                kind: TokKind::Op,
                text: two,
                line: tok_line,
                col: tok_col,
            });
            continue;
        }
        if "(){}[];,.".contains(c) {
            advance!();
            tokens.push(Token {
                kind: TokKind::Punct,
                text: c.to_string(),
                line: tok_line,
                col: tok_col,
            });
            continue;
        }
        if "=<>+-*/%!&|^~?:@".contains(c) {
            advance!();
            tokens.push(Token {
                kind: TokKind::Op,
                text: c.to_string(),
                line: tok_line,
                col: tok_col,
            });
            continue;
        }
        return Err(LexError::UnexpectedChar {
            ch: c,
            line: tok_line,
            col: tok_col,
        });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_simple_method_tokens() {
        let toks = lex("int f(){return 1;}").unwrap();
        let kinds: Vec<TokKind> = toks.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokKind::PrimType,
                TokKind::Ident,
                TokKind::Punct,
                TokKind::Punct,
                TokKind::Punct,
                TokKind::Keyword,
                TokKind::IntLit,
                TokKind::Punct,
                TokKind::Punct,
            ]
        );
    }

    #[test]
    fn skips_comments_and_tracks_lines() {
        let toks = lex("// header\nint /* mid */ x;").unwrap();
        assert_eq!(toks[0].text, "int");
        assert_eq!(toks[0].line, 2);
        assert_eq!(toks[1].text, "x");
    }

    #[test]
    fn string_escapes_do_not_terminate_early() {
        let toks = lex(r#"String s = "a\"b";"#).unwrap();
        assert_eq!(toks[3].kind, TokKind::StringLit);
        assert_eq!(toks[3].text, "a\\\"b");
    }

    #[test]
    fn unterminated_comment_is_an_error() {
        assert!(matches!(
            lex("int x; /* oops"),
            Err(LexError::Unterminated { what: "block comment", .. })
        ));
    }

    #[test]
    fn rejects_unexpected_characters() {
        assert!(matches!(lex("int § x;"), Err(LexError::UnexpectedChar { .. })));
    }
}
