//! Completion trigger points.
//!
//! Automatic completion fires when the text left of the cursor ends in one of a fixed set of
//! keywords or operator symbols. Symbols match after stripping at most one trailing space;
//! keywords need a word boundary in front and exactly one space after them, so `del` never
//! fires inside `delta`.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const KEYWORDS: &[&str] = &[
    "await", "assert", "raise", "del", "lambda", "yield", "return", "while", "for", "if", "elif",
    "else", "global", "in", "and", "not", "or", "is", "with", "except",
];

const SYMBOLS: &[&str] = &[
    ".", "+", "-", "*", "/", "%", "**", "<<", ">>", "&", "|", "^", "==", "!=", "<=", ">=", "+=",
    "-=", "=", "<", ">", ";", ",", "[", "(", "{", "~",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TriggerKind {
    Keyword,
    Symbol,
}

/// One member of the canonical trigger vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriggerToken {
    text: &'static str,
    kind: TriggerKind,
}

impl TriggerToken {
    pub fn text(&self) -> &'static str {
        self.text
    }

    pub fn kind(&self) -> TriggerKind {
        self.kind
    }

    /// Looks up a trigger by its text. Returns `None` for strings outside the vocabulary.
    pub fn parse(text: &str) -> Option<Self> {
        trigger_vocabulary().iter().copied().find(|t| t.text == text)
    }
}

impl fmt::Display for TriggerToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text)
    }
}

impl Serialize for TriggerToken {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.text)
    }
}

impl<'de> Deserialize<'de> for TriggerToken {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        TriggerToken::parse(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown trigger token {text:?}")))
    }
}

/// A trigger found at the end of a left context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriggerMatch {
    pub token: TriggerToken,
    /// Character offset just past the token (before the optional trailing space).
    pub end_offset: usize,
}

/// The canonical trigger set: keywords first, then symbols ordered longest-first.
pub fn trigger_vocabulary() -> &'static [TriggerToken] {
    static VOCAB: OnceLock<Vec<TriggerToken>> = OnceLock::new();
    VOCAB.get_or_init(|| {
        let mut symbols: Vec<&'static str> = SYMBOLS.to_vec();
        // stable sort keeps the listed order among equal lengths
        symbols.sort_by_key(|s| std::cmp::Reverse(s.len()));
        KEYWORDS
            .iter()
            .map(|&text| TriggerToken { text, kind: TriggerKind::Keyword })
            .chain(symbols.into_iter().map(|text| TriggerToken { text, kind: TriggerKind::Symbol }))
            .collect()
    })
}

/// `[A-Za-z0-9_]`, the identifier alphabet used for word boundaries and mid-token checks.
pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Finds the trigger token the cursor sits on, if any.
pub fn detect_trigger(left_context: &str) -> Option<TriggerMatch> {
    let stripped = left_context.strip_suffix(' ');
    let char_len = |s: &str| s.chars().count();

    // Keywords: "<boundary>kw " with exactly one trailing space.
    if let Some(body) = stripped {
        for token in trigger_vocabulary().iter().filter(|t| t.kind == TriggerKind::Keyword) {
            if let Some(before) = body.strip_suffix(token.text) {
                if !before.chars().next_back().is_some_and(is_ident_char) {
                    return Some(TriggerMatch { token: *token, end_offset: char_len(body) });
                }
            }
        }
    }

    let body = stripped.unwrap_or(left_context);
    trigger_vocabulary()
        .iter()
        .filter(|t| t.kind == TriggerKind::Symbol)
        .find(|t| body.ends_with(t.text))
        .map(|token| TriggerMatch { token: *token, end_offset: char_len(body) })
}

/// True when the character left of the cursor is part of an identifier or literal.
pub fn is_mid_token(left_context: &str) -> bool {
    left_context.chars().next_back().is_some_and(is_ident_char)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn detected(s: &str) -> Option<&'static str> {
        detect_trigger(s).map(|m| m.token.text())
    }

    #[test]
    fn symbol_after_expression() {
        let m = detect_trigger("if a % 2 =").unwrap();
        assert_eq!(m.token.text(), "=");
        assert_eq!(m.token.kind(), TriggerKind::Symbol);
        assert_eq!(m.end_offset, 10);
    }

    #[test]
    fn longest_symbol_wins() {
        assert_eq!(detected("x <<"), Some("<<"));
        assert_eq!(detected("x **"), Some("**"));
        assert_eq!(detected("a =="), Some("=="));
        assert_eq!(detected("a += "), Some("+="));
    }

    #[test]
    fn keyword_needs_trailing_space_and_boundary() {
        let m = detect_trigger("return ").unwrap();
        assert_eq!(m.token.text(), "return");
        assert_eq!(m.token.kind(), TriggerKind::Keyword);
        assert_eq!(m.end_offset, 6);
        assert_eq!(detected("myreturn "), None);
        assert_eq!(detected("return"), None);
        assert_eq!(detected("delta "), None);
        assert_eq!(detected("x = a and "), Some("and"));
        assert_eq!(detected("(not "), Some("not"));
    }

    #[test]
    fn at_most_one_trailing_space_is_stripped() {
        assert_eq!(detected("x = "), Some("="));
        assert_eq!(detected("x =  "), None);
        assert_eq!(detected("return  "), None);
    }

    #[test]
    fn empty_and_plain_text() {
        assert_eq!(detected(""), None);
        assert_eq!(detected(" "), None);
        assert_eq!(detected("foo"), None);
        assert_eq!(detected("}"), None);
    }

    #[test]
    fn mid_token() {
        assert!(is_mid_token("for c in alphebt"));
        assert!(is_mid_token("x1"));
        assert!(is_mid_token("foo_"));
        assert!(!is_mid_token("x = "));
        assert!(!is_mid_token(""));
        assert!(!is_mid_token("f("));
    }

    #[test]
    fn vocabulary_contents() {
        let vocab = trigger_vocabulary();
        assert_eq!(vocab.len(), KEYWORDS.len() + SYMBOLS.len());
        assert_eq!(vocab.first().unwrap().text(), "await");
        assert!(TriggerToken::parse("elif").is_some());
        assert!(TriggerToken::parse("~").is_some());
        assert!(TriggerToken::parse("::").is_none());
        for t in vocab {
            let alphabetic = t.text().chars().all(|c| c.is_ascii_alphabetic());
            assert_eq!(alphabetic, t.kind() == TriggerKind::Keyword, "{t}");
        }
        let lens: Vec<usize> =
            vocab.iter().filter(|t| t.kind() == TriggerKind::Symbol).map(|t| t.text().len()).collect();
        assert!(lens.windows(2).all(|w| w[0] >= w[1]));
        assert!(std::ptr::eq(vocab, trigger_vocabulary()));
    }

    #[test]
    fn serde_as_plain_string() {
        let t = TriggerToken::parse("<<").unwrap();
        assert_eq!(serde_json::to_string(&t).unwrap(), "\"<<\"");
        assert_eq!(serde_json::from_str::<TriggerToken>("\"<<\"").unwrap(), t);
        assert!(serde_json::from_str::<TriggerToken>("\"::\"").is_err());
    }

    fn prefix_strategy() -> impl Strategy<Value = String> {
        "[ -~\n]{0,20}".prop_filter("no trailing identifier char", |s| !is_mid_token(s))
    }

    proptest! {
        #[test]
        fn every_token_is_detected_after_a_boundary(prefix in prefix_strategy(), idx in 0usize..47) {
            let vocab = trigger_vocabulary();
            let token = vocab[idx % vocab.len()];
            let mut input = format!("{prefix} {}", token.text());
            if token.kind() == TriggerKind::Keyword {
                input.push(' ');
            }
            prop_assert_eq!(detected(&input), Some(token.text()));
        }

        #[test]
        fn match_strips_to_shorter_context(s in "[ -~]{0,24}") {
            if let Some(m) = detect_trigger(&s) {
                let chars: Vec<char> = s.chars().collect();
                prop_assert!(m.end_offset <= chars.len());
                let start = m.end_offset - m.token.text().chars().count();
                let head: String = chars[..m.end_offset].iter().collect();
                prop_assert!(head.ends_with(m.token.text()));
                let tail: String = chars[m.end_offset..].iter().collect();
                prop_assert!(tail.is_empty() || tail == " ");
                prop_assert!(start < chars.len());
            }
        }

        #[test]
        fn no_longer_symbol_also_matches(s in "[-+*/%<>=!&|^.;,\\[({~ a]{0,12}") {
            if let Some(m) = detect_trigger(&s) {
                if m.token.kind() == TriggerKind::Symbol {
                    let body = s.strip_suffix(' ').unwrap_or(&s);
                    for other in trigger_vocabulary() {
                        if other.kind() == TriggerKind::Symbol && other.text().len() > m.token.text().len() {
                            prop_assert!(!body.ends_with(other.text()));
                        }
                    }
                }
            }
        }
    }
}
