//! Declarative codepoint replacement map.

use std::fmt::Write as _;
use std::path::Path;

use super::NormalizeError;

const DEFAULT_MAP: &str = include_str!("../../data/default-codepoint-map.tsv");

/// Ordered list of `source -> replacement` rewrites applied left to right.
///
/// At each position the first entry whose source matches wins. The map is
/// applied repeatedly until the text stops changing; a map whose closure
/// never settles is rejected as cyclic when it is constructed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CodepointMap {
    entries: Vec<(String, String)>,
}

impl CodepointMap {
    pub fn new(entries: Vec<(String, String)>) -> Result<Self, NormalizeError> {
        if let Some((src, _)) = entries.iter().find(|(src, _)| src.is_empty()) {
            return Err(NormalizeError::InvalidMap {
                line: 0,
                reason: format!("empty source sequence (replacement {src:?})"),
            });
        }
        let map = CodepointMap { entries };
        for (src, _) in &map.entries {
            map.apply(src)?;
        }
        Ok(map)
    }

    pub fn empty() -> Self {
        CodepointMap::default()
    }

    /// The bundled Arabic-to-Kurdish letter folding map.
    pub fn default_kurdish() -> Self {
        Self::parse(DEFAULT_MAP).expect("bundled codepoint map is valid")
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parse the `source<TAB>replacement` text format.
    pub fn parse(text: &str) -> Result<Self, NormalizeError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(src), Some(dst), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(NormalizeError::InvalidMap {
                    line: line_no,
                    reason: "expected exactly two tab-separated fields".into(),
                });
            };
            let src = decode_field(src).map_err(|reason| NormalizeError::InvalidMap { line: line_no, reason })?;
            let dst = decode_field(dst).map_err(|reason| NormalizeError::InvalidMap { line: line_no, reason })?;
            if src.is_empty() {
                return Err(NormalizeError::InvalidMap {
                    line: line_no,
                    reason: "empty source sequence".into(),
                });
            }
            entries.push((src, dst));
        }
        Self::new(entries)
    }

    pub fn from_file(path: &Path) -> Result<Self, NormalizeError> {
        let bytes = std::fs::read(path).map_err(|e| NormalizeError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let text = String::from_utf8(bytes).map_err(|e| NormalizeError::InvalidEncoding {
            offset: e.utf8_error().valid_up_to(),
        })?;
        Self::parse(&text)
    }

    /// Render in the file format, every field spelled as `U+XXXX` codepoints.
    pub fn to_file_format(&self) -> String {
        let mut out = String::new();
        for (src, dst) in &self.entries {
            let _ = writeln!(out, "{}\t{}", encode_field(src), encode_field(dst));
        }
        out
    }

    fn apply_once(&self, text: &str) -> String {
        if self.entries.is_empty() {
            return text.to_string();
        }
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        'outer: while let Some(c) = rest.chars().next() {
            for (src, dst) in &self.entries {
                if rest.starts_with(src.as_str()) {
                    out.push_str(dst);
                    rest = &rest[src.len()..];
                    continue 'outer;
                }
            }
            out.push(c);
            rest = &rest[c.len_utf8()..];
        }
        out
    }

    /// Apply the map until a fixpoint is reached.
    pub fn apply(&self, text: &str) -> Result<String, NormalizeError> {
        let mut current = self.apply_once(text);
        let rounds = self.entries.len() + text.chars().count() + 2;
        let max_len = 8 * (text.len() + 16);
        for _ in 0..rounds {
            let next = self.apply_once(&current);
            if next == current {
                return Ok(current);
            }
            if next.len() > max_len {
                break;
            }
            current = next;
        }
        Err(NormalizeError::CyclicMap {
            sample: text.chars().take(32).collect(),
        })
    }
}

fn decode_field(field: &str) -> Result<String, String> {
    let parts: Vec<&str> = field.split(' ').filter(|p| !p.is_empty()).collect();
    let is_codepoints = !parts.is_empty()
        && parts
            .iter()
            .all(|p| p.len() > 2 && (p.starts_with("U+") || p.starts_with("u+")));
    if !is_codepoints {
        return Ok(field.to_string());
    }
    parts
        .iter()
        .map(|p| {
            u32::from_str_radix(&p[2..], 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| format!("invalid codepoint {p}"))
        })
        .collect()
}

fn encode_field(text: &str) -> String {
    text.chars()
        .map(|c| format!("U+{:04X}", c as u32))
        .collect::<Vec<_>>()
        .join(" ")
}
