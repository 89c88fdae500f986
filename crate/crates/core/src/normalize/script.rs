use std::fmt;
use std::str::FromStr;

use unicode_general_category::{get_general_category, GeneralCategory};

/// Which writing system a corpus is expected to be in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ScriptMode {
    /// Arabic-based script (Sorani).
    Arabic,
    /// Latin-based script (Kurmanji).
    Latin,
    /// No script filtering.
    #[default]
    Mixed,
}

impl ScriptMode {
    /// Whether every letter of `token` falls inside this mode's ranges.
    pub fn accepts(self, token: &str) -> bool {
        match self {
            ScriptMode::Mixed => true,
            ScriptMode::Arabic => token.chars().filter(|&c| is_letter(c)).all(is_arabic_letter),
            ScriptMode::Latin => token.chars().filter(|&c| is_letter(c)).all(is_latin_letter),
        }
    }

    /// Text direction for display: right-to-left for Arabic script.
    pub fn is_rtl(self) -> bool {
        self == ScriptMode::Arabic
    }
}

fn is_letter(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        UppercaseLetter | LowercaseLetter | TitlecaseLetter | ModifierLetter | OtherLetter
    )
}

fn is_arabic_letter(c: char) -> bool {
    matches!(c,
        '\u{0600}'..='\u{06FF}'
        | '\u{0750}'..='\u{077F}'
        | '\u{08A0}'..='\u{08FF}'
        | '\u{FB50}'..='\u{FDFF}'
        | '\u{FE70}'..='\u{FEFF}')
}

fn is_latin_letter(c: char) -> bool {
    matches!(c,
        'A'..='Z'
        | 'a'..='z'
        | '\u{00AA}' | '\u{00BA}'
        | '\u{00C0}'..='\u{024F}'
        | '\u{1E00}'..='\u{1EFF}')
}

impl fmt::Display for ScriptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScriptMode::Arabic => "arabic",
            ScriptMode::Latin => "latin",
            ScriptMode::Mixed => "mixed",
        })
    }
}

impl FromStr for ScriptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arabic" | "arabic-script" => Ok(ScriptMode::Arabic),
            "latin" | "latin-script" => Ok(ScriptMode::Latin),
            "mixed" => Ok(ScriptMode::Mixed),
            other => Err(format!(
                "unknown script mode {other:?} (expected arabic, latin or mixed)"
            )),
        }
    }
}
