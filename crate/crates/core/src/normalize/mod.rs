//! Corpus normalization: codepoint canonicalization, cleaning, sentence
//! segmentation, tokenization, and Sorani-to-Latin transliteration.
//!
//! Sentences are cut on the configured terminators (and on line breaks)
//! *before* punctuation is stripped, so boundary information survives the
//! cleaning step. Within a sentence, whitespace, digits, punctuation, and
//! symbols all act as token separators; format controls such as the
//! zero-width non-joiner are deleted without splitting the word.

mod map;
mod script;
mod translit;

use std::collections::BTreeSet;
use std::ops::Range;

use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

pub use map::CodepointMap;
pub use script::ScriptMode;
pub use translit::{transliterate_sorani_to_latin, transliterate_word, TranslitError};

/// A single vocabulary item. Byte-identical strings are the same token.
pub type Token = String;

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("input is not valid UTF-8 (first invalid byte at offset {offset})")]
    InvalidEncoding { offset: usize },
    #[error("codepoint map does not converge (cyclic rewrite starting from {sample:?})")]
    CyclicMap { sample: String },
    #[error("codepoint map line {line}: {reason}")]
    InvalidMap { line: usize, reason: String },
    #[error("sentence terminator set is empty")]
    NoTerminators,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationConfig {
    pub script_mode: ScriptMode,
    pub codepoint_map: CodepointMap,
    pub lowercase_latin: bool,
    pub strip_digits: bool,
    pub strip_punctuation: bool,
    pub sentence_terminators: BTreeSet<char>,
}

pub const DEFAULT_TERMINATORS: [char; 6] = ['.', '!', '?', '\u{061F}', '\u{06D4}', '\u{0589}'];

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            script_mode: ScriptMode::Mixed,
            codepoint_map: CodepointMap::default_kurdish(),
            lowercase_latin: true,
            strip_digits: true,
            strip_punctuation: true,
            sentence_terminators: DEFAULT_TERMINATORS.into_iter().collect(),
        }
    }
}

impl NormalizationConfig {
    pub fn with_script_mode(mut self, mode: ScriptMode) -> Self {
        self.script_mode = mode;
        self
    }

    pub fn with_map(mut self, map: CodepointMap) -> Self {
        self.codepoint_map = map;
        self
    }

    pub fn validate(&self) -> Result<(), NormalizeError> {
        if self.sentence_terminators.is_empty() {
            return Err(NormalizeError::NoTerminators);
        }
        Ok(())
    }

    /// Stable hex digest of every setting that influences token output.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!(
            "script={};lower={};digits={};punct={};",
            self.script_mode, self.lowercase_latin, self.strip_digits, self.strip_punctuation
        ));
        h.update("term=");
        for c in &self.sentence_terminators {
            h.update(format!("{:X},", *c as u32));
        }
        h.update(";map=");
        h.update(self.codepoint_map.to_file_format());
        hex::encode(&h.finalize()[..8])
    }

    pub fn is_terminator(&self, c: char) -> bool {
        c == '\n' || self.sentence_terminators.contains(&c)
    }
}

/// One cleaned sentence and the byte range it came from in the input text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub source_span: Range<usize>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence {
            tokens,
            source_span: 0..0,
        }
    }
}

impl AsRef<[Token]> for Sentence {
    fn as_ref(&self) -> &[Token] {
        &self.tokens
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleanStats {
    pub sentences: usize,
    pub tokens: usize,
    pub dropped_tokens: usize,
}

/// Validate UTF-8, compose to NFC and apply the codepoint map to a fixpoint.
pub fn canonicalize(raw: &[u8], config: &NormalizationConfig) -> Result<String, NormalizeError> {
    let text = std::str::from_utf8(raw).map_err(|e| NormalizeError::InvalidEncoding {
        offset: e.valid_up_to(),
    })?;
    canonicalize_str(text, config)
}

pub fn canonicalize_str(text: &str, config: &NormalizationConfig) -> Result<String, NormalizeError> {
    let mut current: String = text.nfc().collect();
    // NFC and the map are each idempotent, but a map output may not be in
    // NFC (or NFC may expose a new map source), so iterate the pair.
    for _ in 0..8 {
        let mapped = config.codepoint_map.apply(&current)?;
        let composed: String = mapped.nfc().collect();
        if composed == current {
            return Ok(current);
        }
        current = composed;
    }
    Err(NormalizeError::CyclicMap {
        sample: text.chars().take(32).collect(),
    })
}

enum CharClass {
    Keep,
    Separator,
    Delete,
}

fn classify(c: char, config: &NormalizationConfig) -> CharClass {
    use GeneralCategory::*;
    if c.is_whitespace() {
        return CharClass::Separator;
    }
    match get_general_category(c) {
        DecimalNumber | LetterNumber | OtherNumber => {
            if config.strip_digits {
                CharClass::Separator
            } else {
                CharClass::Keep
            }
        }
        ConnectorPunctuation | DashPunctuation | OpenPunctuation | ClosePunctuation | InitialPunctuation
        | FinalPunctuation | OtherPunctuation | MathSymbol | CurrencySymbol | ModifierSymbol | OtherSymbol => {
            if config.strip_punctuation {
                CharClass::Separator
            } else {
                CharClass::Keep
            }
        }
        Control | Format | PrivateUse | Surrogate | Unassigned | SpaceSeparator | LineSeparator
        | ParagraphSeparator => CharClass::Delete,
        _ => CharClass::Keep,
    }
}

/// Split canonicalized text into cleaned, tokenized sentences.
pub fn clean_and_segment(raw: &str, config: &NormalizationConfig) -> Vec<Sentence> {
    clean_and_segment_with_stats(raw, config).0
}

pub fn clean_and_segment_with_stats(raw: &str, config: &NormalizationConfig) -> (Vec<Sentence>, CleanStats) {
    let mut sentences = Vec::new();
    let mut stats = CleanStats::default();
    let mut start = 0;
    for (idx, c) in raw.char_indices() {
        if config.is_terminator(c) {
            push_sentence(raw, start..idx, config, &mut sentences, &mut stats);
            start = idx + c.len_utf8();
        }
    }
    push_sentence(raw, start..raw.len(), config, &mut sentences, &mut stats);
    stats.sentences = sentences.len();
    (sentences, stats)
}

fn push_sentence(
    raw: &str,
    span: Range<usize>,
    config: &NormalizationConfig,
    out: &mut Vec<Sentence>,
    stats: &mut CleanStats,
) {
    let tokens = tokenize_segment(&raw[span.clone()], config, stats);
    if !tokens.is_empty() {
        stats.tokens += tokens.len();
        out.push(Sentence {
            tokens,
            source_span: span,
        });
    }
}

fn tokenize_segment(segment: &str, config: &NormalizationConfig, stats: &mut CleanStats) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut flush = |current: &mut String| {
        if current.is_empty() {
            return;
        }
        let word = std::mem::take(current);
        let word = if config.lowercase_latin {
            word.to_lowercase()
        } else {
            word
        };
        // Deleted format characters can leave a base and a combining mark
        // (or a map source) newly adjacent.
        let word = canonicalize_str(&word, config).unwrap_or(word);
        if word.is_empty() {
            return;
        }
        if config.script_mode.accepts(&word) {
            tokens.push(word);
        } else {
            stats.dropped_tokens += 1;
        }
    };
    for c in segment.chars() {
        match classify(c, config) {
            CharClass::Keep => current.push(c),
            CharClass::Separator => flush(&mut current),
            CharClass::Delete => {}
        }
    }
    flush(&mut current);
    tokens
}

/// Canonicalize then clean, the full pipeline a corpus goes through.
pub fn normalize_text(raw: &[u8], config: &NormalizationConfig) -> Result<(Vec<Sentence>, CleanStats), NormalizeError> {
    config.validate()?;
    let text = canonicalize(raw, config)?;
    Ok(clean_and_segment_with_stats(&text, config))
}

/// Normalize a single word-like fragment (for example a typed prefix) the
/// same way corpus tokens are normalized, without segmentation.
pub fn normalize_fragment(fragment: &str, config: &NormalizationConfig) -> Result<String, NormalizeError> {
    let text = canonicalize_str(fragment, config)?;
    let mut stats = CleanStats::default();
    Ok(tokenize_segment(&text, config, &mut stats).concat())
}

/// Render sentences one per line, tokens separated by single spaces.
pub fn render_sentences(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.tokens.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn latin() -> NormalizationConfig {
        NormalizationConfig::default().with_script_mode(ScriptMode::Latin)
    }

    fn toks(sentences: &[Sentence]) -> Vec<Vec<&str>> {
        sentences
            .iter()
            .map(|s| s.tokens.iter().map(String::as_str).collect())
            .collect()
    }

    #[test]
    fn latin_example_splits_then_strips() {
        let out = clean_and_segment("Ez diçim! 123 ok?", &latin());
        assert_eq!(toks(&out), vec![vec!["ez", "diçim"], vec!["ok"]]);
        assert_eq!(&"Ez diçim! 123 ok?"[out[0].source_span.clone()], "Ez diçim");
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(clean_and_segment("", &latin()).is_empty());
        assert!(clean_and_segment(" . ! \n", &latin()).is_empty());
    }

    #[test]
    fn canonicalize_applies_map() {
        let cfg = NormalizationConfig::default()
            .with_map(CodepointMap::new(vec![("\u{0643}".into(), "\u{06A9}".into())]).unwrap());
        assert_eq!(canonicalize("\u{0643}".as_bytes(), &cfg).unwrap(), "\u{06A9}");
        let plain = NormalizationConfig::default().with_map(CodepointMap::empty());
        assert_eq!(canonicalize(b"abc", &plain).unwrap(), "abc");
    }

    #[test]
    fn invalid_utf8_is_an_error() {
        let err = canonicalize(b"ab\xffcd", &NormalizationConfig::default()).unwrap_err();
        assert!(matches!(err, NormalizeError::InvalidEncoding { offset: 2 }));
    }

    #[test]
    fn digits_and_quotes_are_separators() {
        let out = clean_and_segment("\"ser\"2020bajar, «av»", &latin());
        assert_eq!(toks(&out), vec![vec!["ser", "bajar", "av"]]);
    }

    #[test]
    fn arabic_mode_drops_latin_tokens_whole() {
        let cfg = NormalizationConfig::default().with_script_mode(ScriptMode::Arabic);
        let (out, stats) = clean_and_segment_with_stats("من kitab ڕۆشتم؟ abcد", &cfg);
        assert_eq!(toks(&out), vec![vec!["من", "ڕۆشتم"]]);
        assert_eq!(stats.dropped_tokens, 2);
    }

    #[test]
    fn arabic_question_mark_and_full_stop_terminate() {
        let cfg = NormalizationConfig::default().with_script_mode(ScriptMode::Arabic);
        let out = clean_and_segment("چۆنی؟ باشم۔ سوپاس", &cfg);
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn zwnj_is_deleted_inside_words() {
        let cfg = NormalizationConfig::default().with_map(CodepointMap::empty());
        let out = clean_and_segment("ده\u{200C}زانم", &cfg);
        assert_eq!(toks(&out), vec![vec!["دهزانم"]]);
    }

    #[test]
    fn digits_kept_when_configured() {
        let mut cfg = latin();
        cfg.strip_digits = false;
        let out = clean_and_segment("sal 2020", &cfg);
        assert_eq!(toks(&out), vec![vec!["sal", "2020"]]);
    }

    #[test]
    fn crlf_lines_are_sentences() {
        let out = clean_and_segment("a b\r\nc\r\n", &latin());
        assert_eq!(toks(&out), vec![vec!["a", "b"], vec!["c"]]);
    }

    #[test]
    fn empty_terminators_rejected() {
        let mut cfg = latin();
        cfg.sentence_terminators.clear();
        assert!(matches!(normalize_text(b"a", &cfg), Err(NormalizeError::NoTerminators)));
    }

    #[test]
    fn fingerprint_tracks_settings() {
        let a = NormalizationConfig::default();
        let b = latin();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), NormalizationConfig::default().fingerprint());
    }

    #[test]
    fn rendered_output_recleans_to_itself() {
        let cfg = latin();
        let first = clean_and_segment("Ez diçim, tu jî? Belê! 12 av", &cfg);
        let again = clean_and_segment(&render_sentences(&first), &cfg);
        assert_eq!(toks(&first), toks(&again));
    }
}
