//! Plain-text model storage.
//!
//! A model directory holds one `<n>-gram.tsv` per order, the codepoint map
//! it was normalized with, and a `manifest` of `key = value` lines. Table
//! files are UTF-8, LF-terminated, without a byte-order mark:
//!
//! ```text
//! ngram<TAB>freq
//! bo bazar<TAB>2
//! bo seyran<TAB>1
//! ```
//!
//! Rows are sorted by count descending, then by key in codepoint order.
//! Counts are stored rather than probabilities so the backoff weight can
//! change without a rebuild. The loader verifies arity, ordering, duplicate
//! keys, row counts, and per-table totals against the manifest.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ngram::{BoundaryMarkers, LanguageModel, ModelError, NGramTable, MAX_SUPPORTED_ORDER};
use crate::normalize::{CodepointMap, NormalizationConfig, NormalizeError, ScriptMode};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest";
pub const MAP_FILE: &str = "codepoint-map.tsv";
pub const TABLE_HEADER: &str = "ngram\tfreq";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}: a model already exists here (pass overwrite to replace it)")]
    WriteCollision(PathBuf),
    #[error("{0}: file not found")]
    MissingFile(PathBuf),
    #[error("{path}:{line}: {reason}")]
    CorruptRow { path: PathBuf, line: usize, reason: String },
    #[error("{path}: manifest line {manifest_line} declares {expected} rows, file has {found}")]
    RowCountMismatch {
        path: PathBuf,
        manifest_line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}: counts sum to {found}, manifest line {manifest_line} declares {expected}")]
    TotalMismatch {
        path: PathBuf,
        manifest_line: usize,
        expected: u64,
        found: u64,
    },
    #[error("{path}: content hash differs from manifest line {manifest_line}")]
    ChecksumMismatch { path: PathBuf, manifest_line: usize },
    #[error("unsupported model format version {found} (this build reads {FORMAT_VERSION})")]
    VersionMismatch { found: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PersistError + '_ {
    move |source| {
        if source.kind() == io::ErrorKind::NotFound {
            PersistError::MissingFile(path.to_path_buf())
        } else {
            PersistError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub order: usize,
    pub file: String,
    pub rows: usize,
    pub total: u64,
    /// SHA-256 of the table file bytes, hex.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelManifest {
    pub format_version: u32,
    pub max_order: usize,
    pub lambda: f64,
    pub corpus_size: u64,
    pub markers: BoundaryMarkers,
    pub normalization_fingerprint: String,
    pub script_mode: ScriptMode,
    pub lowercase_latin: bool,
    pub strip_digits: bool,
    pub strip_punctuation: bool,
    pub sentence_terminators: BTreeSet<char>,
    pub codepoint_map_file: String,
    pub model_id: String,
    pub tables: Vec<TableEntry>,
    pub created_unix: u64,
}

pub fn table_file_name(order: usize) -> String {
    format!("{order}-gram.tsv")
}

/// Serialized bytes of one table, exactly as written to disk.
pub fn render_table(table: &NGramTable) -> String {
    let mut out = String::with_capacity(16 * table.len() + 16);
    out.push_str(TABLE_HEADER);
    out.push('\n');
    for (key, count) in table.sorted_rows() {
        let _ = writeln!(out, "{key}\t{count}");
    }
    out
}

/// Content hash of the tables, markers and normalization settings.
pub fn model_id(model: &LanguageModel) -> String {
    let mut h = Sha256::new();
    h.update(model.normalization_fingerprint());
    h.update(format!("\n{}\n{}\n", model.markers().begin, model.markers().end));
    for t in model.tables() {
        h.update(render_table(t));
    }
    hex::encode(&h.finalize()[..8])
}

fn fmt_terminators(set: &BTreeSet<char>) -> String {
    set.iter()
        .map(|c| format!("U+{:04X}", *c as u32))
        .collect::<Vec<_>>()
        .join(" ")
}

impl ModelManifest {
    pub fn from_model(model: &LanguageModel) -> Self {
        let norm = model.normalization();
        ModelManifest {
            format_version: FORMAT_VERSION,
            max_order: model.max_order(),
            lambda: model.lambda(),
            corpus_size: model.corpus_size(),
            markers: model.markers().clone(),
            normalization_fingerprint: model.normalization_fingerprint().to_string(),
            script_mode: norm.script_mode,
            lowercase_latin: norm.lowercase_latin,
            strip_digits: norm.strip_digits,
            strip_punctuation: norm.strip_punctuation,
            sentence_terminators: norm.sentence_terminators.clone(),
            codepoint_map_file: MAP_FILE.to_string(),
            model_id: model_id(model),
            tables: model
                .tables()
                .iter()
                .map(|t| TableEntry {
                    order: t.order(),
                    file: table_file_name(t.order()),
                    rows: t.len(),
                    total: t.total(),
                    sha256: hex::encode(Sha256::digest(render_table(t))),
                })
                .collect(),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("format_version", &self.format_version);
        kv("max_order", &self.max_order);
        kv("lambda", &self.lambda);
        kv("corpus_size", &self.corpus_size);
        kv("begin_marker", &self.markers.begin);
        kv("end_marker", &self.markers.end);
        kv("normalization_fingerprint", &self.normalization_fingerprint);
        kv("script_mode", &self.script_mode);
        kv("lowercase_latin", &self.lowercase_latin);
        kv("strip_digits", &self.strip_digits);
        kv("strip_punctuation", &self.strip_punctuation);
        kv("sentence_terminators", &fmt_terminators(&self.sentence_terminators));
        kv("codepoint_map", &self.codepoint_map_file);
        kv("model_id", &self.model_id);
        for t in &self.tables {
            kv(&format!("table.{}", t.order), &t.file);
            kv(&format!("rows.{}", t.order), &t.rows);
            kv(&format!("total.{}", t.order), &t.total);
            kv(&format!("sha256.{}", t.order), &t.sha256);
        }
        kv("created_unix", &self.created_unix);
        out
    }

    /// Parse manifest text. Line numbers of every key are returned so that
    /// later consistency errors can point back at the declaring line.
    pub fn parse(text: &str, path: &Path) -> Result<(Self, BTreeMap<String, usize>), PersistError> {
        let corrupt = |line: usize, reason: String| PersistError::CorruptRow {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, line) in text.split('\n').enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once(" = ") else {
                return Err(corrupt(line_no, "expected `key = value`".into()));
            };
            if fields.insert(k.to_string(), (line_no, v.to_string())).is_some() {
                return Err(corrupt(line_no, format!("duplicate key {k:?}")));
            }
        }

        let version = fields.get("format_version").map(|(_, v)| v.clone()).unwrap_or_default();
        if version != FORMAT_VERSION.to_string() {
            return Err(PersistError::VersionMismatch { found: version });
        }

        let get = |key: &str| -> Result<(usize, &str), PersistError> {
            fields
                .get(key)
                .map(|(l, v)| (*l, v.as_str()))
                .ok_or_else(|| corrupt(0, format!("missing key {key:?}")))
        };
        fn parse_val<T: std::str::FromStr>(
            (line, v): (usize, &str),
            corrupt: &dyn Fn(usize, String) -> PersistError,
        ) -> Result<T, PersistError> {
            v.parse()
                .map_err(|_| corrupt(line, format!("cannot parse value {v:?}")))
        }

        let max_order: usize = parse_val(get("max_order")?, &corrupt)?;
        if max_order == 0 || max_order > MAX_SUPPORTED_ORDER {
            return Err(corrupt(
                get("max_order")?.0,
                format!("max_order {max_order} out of range"),
            ));
        }
        let script_field = get("script_mode")?;
        let script_mode = script_field.1.parse().map_err(|e: String| corrupt(script_field.0, e))?;
        let term_field = get("sentence_terminators")?;
        let sentence_terminators = term_field
            .1
            .split(' ')
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.strip_prefix("U+")
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .and_then(char::from_u32)
                    .ok_or_else(|| corrupt(term_field.0, format!("bad codepoint {p:?}")))
            })
            .collect::<Result<BTreeSet<char>, _>>()?;

        let mut tables = Vec::with_capacity(max_order);
        for order in 1..=max_order {
            tables.push(TableEntry {
                order,
                file: get(&format!("table.{order}"))?.1.to_string(),
                rows: parse_val(get(&format!("rows.{order}"))?, &corrupt)?,
                total: parse_val(get(&format!("total.{order}"))?, &corrupt)?,
                sha256: get(&format!("sha256.{order}"))?.1.to_string(),
            });
        }

        let manifest = ModelManifest {
            format_version: FORMAT_VERSION,
            max_order,
            lambda: parse_val(get("lambda")?, &corrupt)?,
            corpus_size: parse_val(get("corpus_size")?, &corrupt)?,
            markers: BoundaryMarkers {
                begin: get("begin_marker")?.1.to_string(),
                end: get("end_marker")?.1.to_string(),
            },
            normalization_fingerprint: get("normalization_fingerprint")?.1.to_string(),
            script_mode,
            lowercase_latin: parse_val(get("lowercase_latin")?, &corrupt)?,
            strip_digits: parse_val(get("strip_digits")?, &corrupt)?,
            strip_punctuation: parse_val(get("strip_punctuation")?, &corrupt)?,
            sentence_terminators,
            codepoint_map_file: get("codepoint_map")?.1.to_string(),
            model_id: get("model_id")?.1.to_string(),
            tables,
            created_unix: parse_val(get("created_unix")?, &corrupt)?,
        };
        let lines = fields.into_iter().map(|(k, (l, _))| (k, l)).collect();
        Ok((manifest, lines))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), PersistError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Write `model` into `dir`. Fails if a manifest is already there unless
/// `overwrite` is set. Table and map files are byte-for-byte deterministic.
pub fn save_model(model: &LanguageModel, dir: &Path, overwrite: bool) -> Result<ModelManifest, PersistError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() && !overwrite {
        return Err(PersistError::WriteCollision(dir.to_path_buf()));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest = ModelManifest::from_model(model);
    for (entry, table) in manifest.tables.iter().zip(model.tables()) {
        write_file(&dir.join(&entry.file), &render_table(table))?;
    }
    write_file(
        &dir.join(MAP_FILE),
        &model.normalization().codepoint_map.to_file_format(),
    )?;
    // Manifest last: its presence marks a complete model.
    write_file(&manifest_path, &manifest.render())?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<ModelManifest, PersistError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(ModelManifest::parse(&text, &path)?.0)
}

/// Parse one table file, verifying every row.
pub fn parse_table(bytes: &[u8], order: usize, path: &Path) -> Result<NGramTable, PersistError> {
    let corrupt = |line: usize, reason: String| PersistError::CorruptRow {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let Some(body) = bytes.strip_suffix(b"\n") else {
        let line = bytes.split(|&b| b == b'\n').count();
        return Err(corrupt(line, "file does not end with a newline".into()));
    };
    let mut table = NGramTable::new(order);
    let mut seen: HashSet<String> = HashSet::new();
    let mut previous: Option<(u64, String)> = None;
    for (idx, raw) in body.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let line = std::str::from_utf8(raw).map_err(|_| corrupt(line_no, "invalid UTF-8".into()))?;
        if line_no == 1 {
            if line != TABLE_HEADER {
                return Err(corrupt(1, format!("expected header {TABLE_HEADER:?}")));
            }
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(key), Some(count), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(corrupt(line_no, "expected exactly two tab-separated fields".into()));
        };
        let tokens: Vec<String> = key.split(' ').map(String::from).collect();
        if tokens.len() != order || tokens.iter().any(String::is_empty) {
            return Err(corrupt(
                line_no,
                format!("key {key:?} is not {order} space-separated tokens"),
            ));
        }
        let count = parse_count(count).ok_or_else(|| corrupt(line_no, format!("invalid count {count:?}")))?;
        if !seen.insert(key.to_string()) {
            return Err(corrupt(line_no, format!("duplicate key {key:?}")));
        }
        if let Some((prev_count, prev_key)) = &previous {
            let in_order = count < *prev_count || (count == *prev_count && key > prev_key.as_str());
            if !in_order {
                return Err(corrupt(
                    line_no,
                    "rows out of order (count descending, then key ascending)".into(),
                ));
            }
        }
        previous = Some((count, key.to_string()));
        table.add(tokens, count);
    }
    if previous.is_none() && body.is_empty() {
        return Err(corrupt(1, "missing header".into()));
    }
    Ok(table)
}

/// Canonical positive decimal: digits only, no sign, no leading zero.
fn parse_count(field: &str) -> Option<u64> {
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) || field.starts_with('0') {
        return None;
    }
    field.parse().ok()
}

pub fn load_model(dir: &Path) -> Result<LanguageModel, PersistError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let (manifest, lines) = ModelManifest::parse(&text, &manifest_path)?;

    let mut tables = Vec::with_capacity(manifest.max_order);
    for entry in &manifest.tables {
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let table = parse_table(&bytes, entry.order, &path)?;
        let line_of = |key: String| lines.get(&key).copied().unwrap_or(0);
        if table.len() != entry.rows {
            return Err(PersistError::RowCountMismatch {
                path,
                manifest_line: line_of(format!("rows.{}", entry.order)),
                expected: entry.rows,
                found: table.len(),
            });
        }
        if table.total() != entry.total {
            return Err(PersistError::TotalMismatch {
                path,
                manifest_line: line_of(format!("total.{}", entry.order)),
                expected: entry.total,
                found: table.total(),
            });
        }
        if hex::encode(Sha256::digest(&bytes)) != entry.sha256 {
            return Err(PersistError::ChecksumMismatch {
                path,
                manifest_line: line_of(format!("sha256.{}", entry.order)),
            });
        }
        tables.push(table);
    }
    if tables[0].total() != manifest.corpus_size {
        return Err(PersistError::TotalMismatch {
            path: dir.join(&manifest.tables[0].file),
            manifest_line: lines.get("corpus_size").copied().unwrap_or(0),
            expected: manifest.corpus_size,
            found: tables[0].total(),
        });
    }

    let map_path = dir.join(&manifest.codepoint_map_file);
    if !map_path.exists() {
        return Err(PersistError::MissingFile(map_path));
    }
    let normalization = NormalizationConfig {
        script_mode: manifest.script_mode,
        codepoint_map: CodepointMap::from_file(&map_path)?,
        lowercase_latin: manifest.lowercase_latin,
        strip_digits: manifest.strip_digits,
        strip_punctuation: manifest.strip_punctuation,
        sentence_terminators: manifest.sentence_terminators.clone(),
    };
    let model = LanguageModel::from_tables(tables, manifest.markers.clone(), manifest.lambda, normalization)?;
    if model.normalization_fingerprint() != manifest.normalization_fingerprint {
        log::warn!(
            "{}: normalization fingerprint {} does not match the stored settings ({})",
            dir.display(),
            manifest.normalization_fingerprint,
            model.normalization_fingerprint()
        );
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::ModelOptions;

    fn s(words: &str) -> Vec<String> {
        words.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn unigram_file_for_a_b() {
        let m = LanguageModel::train(&[s("a b")], &ModelOptions::default()).unwrap();
        assert_eq!(render_table(&m.tables()[0]), "ngram\tfreq\n</s>\t1\na\t1\nb\t1\n");
    }

    #[test]
    fn count_field_is_strict() {
        assert_eq!(parse_count("12"), Some(12));
        for bad in ["", "0", "012", "+1", "1 ", "1\r", "x"] {
            assert_eq!(parse_count(bad), None, "{bad:?}");
        }
    }

    #[test]
    fn duplicate_key_reports_line() {
        let bytes = b"ngram\tfreq\na b\t2\na b\t1\n";
        let err = parse_table(bytes, 2, Path::new("t")).unwrap_err();
        assert!(matches!(err, PersistError::CorruptRow { line: 3, .. }), "{err}");
    }

    #[test]
    fn wrong_arity_and_order_rejected() {
        let arity = parse_table(b"ngram\tfreq\na\t2\n", 2, Path::new("t")).unwrap_err();
        assert!(matches!(arity, PersistError::CorruptRow { line: 2, .. }));
        let order = parse_table(b"ngram\tfreq\na\t1\nb\t2\n", 1, Path::new("t")).unwrap_err();
        assert!(matches!(order, PersistError::CorruptRow { line: 3, .. }));
    }

    #[test]
    fn header_and_newline_required() {
        assert!(parse_table(b"a\t1\n", 1, Path::new("t")).is_err());
        assert!(parse_table(b"ngram\tfreq\na\t1", 1, Path::new("t")).is_err());
        assert!(parse_table(b"", 1, Path::new("t")).is_err());
        assert_eq!(parse_table(b"ngram\tfreq\n", 1, Path::new("t")).unwrap().len(), 0);
    }

    #[test]
    fn manifest_round_trips() {
        let m = LanguageModel::train(&[s("a b c")], &ModelOptions::default()).unwrap();
        let man = ModelManifest::from_model(&m);
        let (back, lines) = ModelManifest::parse(&man.render(), Path::new("manifest")).unwrap();
        assert_eq!(back, man);
        assert_eq!(lines["format_version"], 1);
    }

    #[test]
    fn version_mismatch_detected() {
        let m = LanguageModel::train(&[s("a")], &ModelOptions::default()).unwrap();
        let text = ModelManifest::from_model(&m)
            .render()
            .replace("format_version = 1", "format_version = 9");
        assert!(matches!(
            ModelManifest::parse(&text, Path::new("manifest")),
            Err(PersistError::VersionMismatch { .. })
        ));
    }
}
