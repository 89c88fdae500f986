//! Shared test helpers: fixture paths, random corpora and a brute-force
//! reference scorer that shares no code with the library.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const BEGIN: &str = "<s>";
pub const END: &str = "</s>";

/// Characters that exercise every normalization branch: both scripts,
/// map sources, digits, punctuation, terminators, format and combining
/// characters, other scripts, whitespace and newlines.
pub const ALPHABET: &[char] = &[
    'a', 'b', 'E', 'ê', 'Ş', 'û', 'I', 'e', '\u{301}', '\u{308}', 'ا', 'ب', 'ک', 'ك', 'ي', 'ی', 'ه', 'ە', 'ة', 'ۀ',
    'ھ', 'ـ', 'ئ', 'و', '\u{64E}', '\u{200C}', '\u{200D}', '\u{FEFF}', '1', '٣', '²', '.', '!', '?', '؟', '۔', '،',
    ',', '-', '\'', '"', '«', '(', '@', '%', '☺', ' ', ' ', '\t', '\n', '\r', '\u{A0}', 'Ж', 'Δ', '中', 'ﻻ', 'ﻙ',
];

/// Random text over [`ALPHABET`].
pub fn random_text(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn words(line: &str) -> Vec<String> {
    line.split_whitespace().map(String::from).collect()
}

/// Sentences of 1..=8 words over `w0..w{vocab-1}`, skewed toward low indices
/// so that repeated n-grams are common.
pub fn random_corpus(rng: &mut ChaCha8Rng, max_sentences: usize, vocab: usize) -> Vec<Vec<String>> {
    let n = rng.gen_range(1..=max_sentences);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(1..=8);
            (0..len)
                .map(|_| {
                    let a = rng.gen_range(0..vocab);
                    let b = rng.gen_range(0..vocab);
                    format!("w{}", a.min(b))
                })
                .collect()
        })
        .collect()
}

/// Reference model: every count comes from enumerating padded windows.
pub struct Oracle {
    pub max_order: usize,
    pub lambda: f64,
    /// `tables[n-1]` holds the n-gram window counts.
    pub tables: Vec<HashMap<Vec<String>, u64>>,
}

impl Oracle {
    pub fn new(sentences: &[Vec<String>], max_order: usize, lambda: f64) -> Self {
        let mut tables = Vec::new();
        for n in 1..=max_order {
            let mut table = HashMap::new();
            for s in sentences {
                let mut padded = vec![BEGIN.to_string(); n - 1];
                padded.extend(s.iter().cloned());
                padded.push(END.to_string());
                for i in 0..padded.len() + 1 - n {
                    *table.entry(padded[i..i + n].to_vec()).or_insert(0) += 1;
                }
            }
            tables.push(table);
        }
        Oracle {
            max_order,
            lambda,
            tables,
        }
    }

    pub fn count(&self, ngram: &[String]) -> u64 {
        if ngram.is_empty() || ngram.len() > self.max_order {
            return 0;
        }
        self.tables[ngram.len() - 1].get(ngram).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.tables[0].values().sum()
    }

    /// How often `history` is followed by anything: the sum over the next
    /// order's table of rows that start with it.
    pub fn history_count(&self, history: &[String]) -> u64 {
        if history.is_empty() {
            return self.total();
        }
        self.tables[history.len()]
            .iter()
            .filter(|(k, _)| k.starts_with(history))
            .map(|(_, c)| c)
            .sum()
    }

    pub fn vocabulary(&self) -> Vec<String> {
        let mut v: Vec<String> = self.tables[0].keys().map(|k| k[0].clone()).collect();
        v.sort();
        v
    }

    /// Stupid Backoff score, its matched order and its backoff depth.
    pub fn score(&self, word: &str, context: &[String]) -> (f64, usize, usize) {
        let keep = self.max_order - 1;
        let context = &context[context.len().saturating_sub(keep)..];
        let used = context.len();
        for depth in 0..used {
            let history = &context[depth..];
            let mut full = history.to_vec();
            full.push(word.to_string());
            let (num, den) = (self.count(&full), self.history_count(history));
            if num > 0 && den > 0 {
                return (
                    (num as f64 / den as f64) * self.lambda.powi(depth as i32),
                    used - depth + 1,
                    depth,
                );
            }
        }
        let c = self.count(&[word.to_string()]);
        (
            (c as f64 / self.total() as f64) * self.lambda.powi(used as i32),
            1,
            used,
        )
    }

    /// Score every vocabulary word, keep the ones reached through a
    /// non-empty context suffix (or all of them when none is), sort and cut.
    pub fn suggest(&self, context: &[String], k: usize, include_end: bool) -> Vec<(String, f64, usize)> {
        let scored: Vec<(String, f64, usize, usize)> = self
            .vocabulary()
            .into_iter()
            .filter(|w| w != BEGIN && (include_end || w != END))
            .map(|w| {
                let (s, order, depth) = self.score(&w, context);
                (w, s, order, depth)
            })
            .collect();
        let used = context.len().min(self.max_order - 1);
        let matched: Vec<_> = scored.iter().filter(|x| x.3 < used).cloned().collect();
        let mut pool = if matched.is_empty() { scored } else { matched };
        pool.sort_by(|a, b| self.rank(a, b));
        pool.truncate(k);
        pool.into_iter().map(|(w, s, o, _)| (w, s, o)).collect()
    }

    fn rank(&self, a: &(String, f64, usize, usize), b: &(String, f64, usize, usize)) -> Ordering {
        let ca = self.count(std::slice::from_ref(&a.0));
        let cb = self.count(std::slice::from_ref(&b.0));
        match b.1.partial_cmp(&a.1).unwrap() {
            Ordering::Equal => cb.cmp(&ca).then_with(|| a.0.cmp(&b.0)),
            o => o,
        }
    }
}

/// Sentences whose 4-token windows never repeat, over a small vocabulary
/// so that lower orders stay ambiguous.
pub fn unique_context_corpus() -> Vec<Vec<String>> {
    use rand::SeedableRng;
    use std::collections::HashSet;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    while out.len() < 60 {
        let s: Vec<String> = (0..8).map(|_| format!("t{}", rng.gen_range(0..12))).collect();
        let windows: Vec<Vec<String>> = s.windows(4).map(|w| w.to_vec()).collect();
        let distinct: HashSet<&Vec<String>> = windows.iter().collect();
        if distinct.len() == windows.len() && windows.iter().all(|w| !seen.contains(w)) {
            seen.extend(windows);
            out.push(s);
        }
    }
    out
}

/// Serve `state` on an ephemeral local port from the current tokio runtime.
pub async fn spawn_server(state: nextword::service::AppState) -> std::net::SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, nextword::service::router(state)).await.unwrap();
    });
    addr
}
