use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

/// Ordered code tokens. Never contains an empty string.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSeq(tokens.into_iter().map(Into::into).filter(|t: &String| !t.is_empty()).collect())
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.0.join(", "))
    }
}

pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, code: &str) -> TokenSeq;
}

/// Multi-character operators, longest first so the scan is maximal munch.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", "**=", "//=", "...", "===", "!==", ">>>", "<=>", "??=", "->", "=>", "::",
    "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
    "^=", "<<", ">>", "**", "//", "..", "??", "?.", ":=",
];

/// Pattern-based tokenizer shared by all languages.
///
/// Token classes: identifiers (`$` allowed as a leading char), numbers with suffixes and
/// exponents, quoted literals terminated on the same line, maximal-munch operators and single
/// punctuation characters. Whitespace separates tokens and is dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct CodeTokenizer;

impl Tokenizer for CodeTokenizer {
    fn tokenize(&self, code: &str) -> TokenSeq {
        let chars: Vec<(usize, char)> = code.char_indices().collect();
        let byte_at = |i: usize| chars.get(i).map_or(code.len(), |&(b, _)| b);
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i].1;
            let start = i;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_alphabetic() || c == '_' || c == '$' {
                i += 1;
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
            } else if c.is_ascii_digit() {
                i = scan_number(&chars, i);
            } else if matches!(c, '"' | '\'' | '`') {
                i = scan_quoted(&chars, i).unwrap_or(i + 1);
            } else if let Some(op) = OPERATORS.iter().find(|op| code[byte_at(i)..].starts_with(**op)) {
                i += op.chars().count();
            } else {
                i += 1;
            }
            tokens.push(code[byte_at(start)..byte_at(i)].to_string());
        }
        TokenSeq(tokens)
    }
}

fn scan_number(chars: &[(usize, char)], mut i: usize) -> usize {
    let hex = chars[i].1 == '0' && matches!(chars.get(i + 1), Some((_, 'x' | 'X')));
    i += 1;
    while let Some(&(_, c)) = chars.get(i) {
        let next_is_digit = chars.get(i + 1).is_some_and(|(_, n)| n.is_ascii_digit());
        if c.is_alphanumeric() || c == '_' {
            i += 1;
            if !hex && matches!(c, 'e' | 'E') {
                if let Some((_, '+' | '-')) = chars.get(i) {
                    if chars.get(i + 1).is_some_and(|(_, n)| n.is_ascii_digit()) {
                        i += 1;
                    }
                }
            }
        } else if c == '.' && next_is_digit {
            i += 1;
        } else {
            break;
        }
    }
    i
}

/// End index (exclusive) of a literal opened at `i`, or `None` when it is not closed on the
/// same line.
fn scan_quoted(chars: &[(usize, char)], i: usize) -> Option<usize> {
    let quote = chars[i].1;
    let mut j = i + 1;
    while let Some(&(_, c)) = chars.get(j) {
        match c {
            '\\' => j += 2,
            '\n' => return None,
            c if c == quote => return Some(j + 1),
            _ => j += 1,
        }
    }
    None
}

/// Splits on whitespace only. Mostly useful for comparing against word-level references.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, code: &str) -> TokenSeq {
        TokenSeq::new(code.split_whitespace())
    }
}

pub fn tokenize(code: &str) -> TokenSeq {
    CodeTokenizer.tokenize(code)
}
