//! Tokenizer for the supported Java subset.
//!
//! Tokens keep byte offsets and 1-based line numbers so statement spans can
//! be mapped back to verbatim source slices.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Keyword,
    IntLit,
    FloatLit,
    StrLit,
    CharLit,
    Op,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub end_line: u32,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        matches!(self.kind, TokKind::Op | TokKind::Keyword) && self.text == text
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}` at line {}", self.text, self.line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: u32,
    pub message: String,
}

pub const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while", "true", "false", "null",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

// Longest first so greedy matching works.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", "(", ")", "{", "}", "[", "]",
    ";", ",", ".", "@", "=", ">", "<", "!", "~", "?", ":", "+", "-", "*", "/", "&", "|", "^",
    "%",
];

/// Splits `src` into tokens. Comments and whitespace are dropped.
///
/// `>>` and `>>>` are never produced as single tokens; the parser
/// recombines adjacent `>` when it needs shift operators, which keeps nested
/// generic type arguments (`Map<K, List<V>>`) simple to close.
pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start_line = line;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(LexError { line: start_line, message: "unterminated block comment".into() });
                }
                if bytes[i] == b'\n' {
                    line += 1;
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        let start_line = line;
        if c == b'"' {
            if bytes.get(i + 1) == Some(&b'"') && bytes.get(i + 2) == Some(&b'"') {
                return Err(LexError { line, message: "text blocks are not supported".into() });
            }
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'\n' {
                    return Err(LexError { line, message: "unterminated string literal".into() });
                }
                i += 1;
            }
            if i >= bytes.len() {
                return Err(LexError { line, message: "unterminated string literal".into() });
            }
            i += 1;
            toks.push(tok(TokKind::StrLit, src, start, i, start_line, line));
            continue;
        }
        if c == b'\'' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'\'' {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            if i >= bytes.len() {
                return Err(LexError { line, message: "unterminated char literal".into() });
            }
            i += 1;
            toks.push(tok(TokKind::CharLit, src, start, i, start_line, line));
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
            let mut float = false;
            if c == b'0' && matches!(bytes.get(i + 1), Some(b'x' | b'X' | b'b' | b'B')) {
                i += 2;
                while i < bytes.len() && (bytes[i].is_ascii_hexdigit() || bytes[i] == b'_') {
                    i += 1;
                }
            } else {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()) {
                    float = true;
                    i += 1;
                    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                        i += 1;
                    }
                } else if i < bytes.len() && bytes[i] == b'.' && !bytes.get(i + 1).is_some_and(|b| b.is_ascii_alphabetic()) {
                    float = true;
                    i += 1;
                }
                if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
                    float = true;
                    i += 1;
                    if i < bytes.len() && matches!(bytes[i], b'+' | b'-') {
                        i += 1;
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            if i < bytes.len() && matches!(bytes[i], b'l' | b'L' | b'f' | b'F' | b'd' | b'D') {
                if matches!(bytes[i], b'f' | b'F' | b'd' | b'D') {
                    float = true;
                }
                i += 1;
            }
            let kind = if float { TokKind::FloatLit } else { TokKind::IntLit };
            toks.push(tok(kind, src, start, i, start_line, line));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' || c == b'$' || c >= 0x80 {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$' || bytes[i] >= 0x80)
            {
                i += 1;
            }
            let text = &src[start..i];
            let kind = if is_keyword(text) { TokKind::Keyword } else { TokKind::Ident };
            toks.push(tok(kind, src, start, i, start_line, line));
            continue;
        }
        let rest = &src[i..];
        let op = OPERATORS
            .iter()
            .find(|op| rest.starts_with(**op))
            .ok_or_else(|| LexError { line, message: format!("unexpected character {:?}", rest.chars().next().unwrap_or('?')) })?;
        i += op.len();
        toks.push(tok(TokKind::Op, src, start, i, start_line, line));
    }
    toks.push(Token { kind: TokKind::Eof, text: String::new(), start: src.len(), end: src.len(), line, end_line: line });
    Ok(toks)
}

fn tok(kind: TokKind, src: &str, start: usize, end: usize, line: u32, end_line: u32) -> Token {
    Token { kind, text: src[start..end].to_string(), start, end, line, end_line }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        tokenize(src).unwrap().into_iter().filter(|t| t.kind != TokKind::Eof).map(|t| t.text).collect()
    }

    #[test]
    fn skips_comments_and_tracks_lines() {
        let toks = tokenize("int a; // x\n/* multi\nline */ b = \"s;\";").unwrap();
        let b = toks.iter().find(|t| t.text == "b").unwrap();
        assert_eq!(b.line, 3);
        assert!(toks.iter().any(|t| t.kind == TokKind::StrLit && t.text == "\"s;\""));
    }

    #[test]
    fn shift_is_two_tokens() {
        assert_eq!(texts("a >> 2"), vec!["a", ">", ">", "2"]);
        assert_eq!(texts("x >>= 1"), vec!["x", ">>=", "1"]);
    }

    #[test]
    fn numbers_and_escapes() {
        assert_eq!(texts("1.5f 0x1F 10L 'a' '\\n' \"a\\\"b\""), vec!["1.5f", "0x1F", "10L", "'a'", "'\\n'", "\"a\\\"b\""]);
    }

    #[test]
    fn rejects_text_blocks() {
        assert!(tokenize("String s = \"\"\"\nhi\"\"\";").is_err());
    }
}
