//! Sorani (Arabic script) to Kurmanji (Latin script) transliteration.
//!
//! Letters with a single Latin counterpart are mapped directly, the hamza
//! seat `ئ` and non-letters (harakat, joiners, tatweel) are dropped, and
//! the digraph `وو` is read as `û`.
//!
//! Three letters have two Latin readings: `و` (w/u), `ی` (y/î) and `ه`
//! (h/e, also written `ھ`). They are resolved by position: the consonant
//! reading is used when the next letter is a vowel letter (`ا ێ ۆ ە` or
//! the digraph `وو`), the vowel reading otherwise. Dropped codepoints are
//! skipped when looking at the next letter.

use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

use super::Token;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no Latin mapping for {codepoint:?} (U+{:04X}) in token {token:?}", *.codepoint as u32)]
pub struct TranslitError {
    pub codepoint: char,
    pub token: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    Fixed(&'static str),
    Vowel(&'static str),
    Ambiguous {
        consonant: &'static str,
        vowel: &'static str,
    },
    Silent,
}

fn single(c: char) -> Option<Unit> {
    use Unit::*;
    Some(match c {
        'ا' => Vowel("a"),
        'ێ' => Vowel("ê"),
        'ۆ' => Vowel("o"),
        'ە' => Vowel("e"),
        'ب' => Fixed("b"),
        'ج' => Fixed("c"),
        'چ' => Fixed("ç"),
        'د' => Fixed("d"),
        'ف' => Fixed("f"),
        'ڤ' => Fixed("v"),
        'گ' => Fixed("g"),
        'ژ' => Fixed("j"),
        'ک' => Fixed("k"),
        'ل' => Fixed("l"),
        'م' => Fixed("m"),
        'ن' => Fixed("n"),
        'پ' => Fixed("p"),
        'ق' => Fixed("q"),
        'ر' => Fixed("r"),
        'س' => Fixed("s"),
        'ش' => Fixed("ş"),
        'ت' => Fixed("t"),
        'خ' => Fixed("x"),
        'ز' => Fixed("z"),
        // Sorani letters without a distinct Latin letter.
        'ڕ' => Fixed("rr"),
        'ڵ' => Fixed("l"),
        'ع' => Fixed("e"),
        'غ' => Fixed("x"),
        'ح' => Fixed("h"),
        'و' => Ambiguous {
            consonant: "w",
            vowel: "u",
        },
        'ی' => Ambiguous {
            consonant: "y",
            vowel: "î",
        },
        'ه' | 'ھ' => Ambiguous {
            consonant: "h",
            vowel: "e",
        },
        'ئ' | '\u{0640}' => Silent,
        _ => return None,
    })
}

fn units(word: &str) -> Result<Vec<Unit>, TranslitError> {
    let chars: Vec<char> = word.chars().collect();
    let mut out = Vec::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == 'و' && chars.get(i + 1) == Some(&'و') {
            out.push(Unit::Vowel("û"));
            i += 2;
            continue;
        }
        let unit = match single(c) {
            Some(u) => u,
            None if !is_letter(c) => Unit::Silent,
            None => {
                return Err(TranslitError {
                    codepoint: c,
                    token: word.to_string(),
                })
            }
        };
        out.push(unit);
        i += 1;
    }
    Ok(out)
}

fn is_letter(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        UppercaseLetter | LowercaseLetter | TitlecaseLetter | ModifierLetter | OtherLetter
    )
}

pub fn transliterate_word(word: &str) -> Result<String, TranslitError> {
    let units = units(word)?;
    let mut out = String::with_capacity(word.len());
    for (i, unit) in units.iter().enumerate() {
        match *unit {
            Unit::Fixed(s) | Unit::Vowel(s) => out.push_str(s),
            Unit::Silent => {}
            Unit::Ambiguous { consonant, vowel } => {
                let next = units[i + 1..].iter().find(|u| !matches!(u, Unit::Silent));
                if matches!(next, Some(Unit::Vowel(_))) {
                    out.push_str(consonant);
                } else {
                    out.push_str(vowel);
                }
            }
        }
    }
    Ok(out)
}

/// Transliterate every token; tokens that map to nothing are omitted.
pub fn transliterate_sorani_to_latin(tokens: &[Token]) -> Result<Vec<Token>, TranslitError> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        let latin = transliterate_word(t)?;
        if !latin.is_empty() {
            out.push(latin);
        }
    }
    Ok(out)
}
