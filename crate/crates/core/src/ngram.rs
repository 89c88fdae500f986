//! N-gram counting and maximum-likelihood probabilities for orders 1..=5.
//!
//! Every sentence is padded with `n - 1` begin markers and a single end
//! marker before its order-`n` windows are counted, so each table of a
//! model has the same total: one window per token plus one per sentence.
//!
//! A history made only of begin markers never occurs as a window in the
//! table one order below (that table has one fewer begin marker), so its
//! count is taken to be the number of sentences, which is exactly how many
//! times it precedes something.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::normalize::{NormalizationConfig, Token};

pub const MAX_SUPPORTED_ORDER: usize = 5;
pub const DEFAULT_LAMBDA: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("n-gram order {order} outside supported range 1..={max}")]
    OrderOutOfRange { order: usize, max: usize },
    #[error("token {token:?} collides with a reserved boundary marker")]
    MarkerCollision { token: String },
    #[error("context of {len} tokens exceeds the model's maximum of {max}")]
    ContextTooLong { len: usize, max: usize },
    #[error("context {context:?} never occurs, so its distribution is undefined")]
    UndefinedDistribution { context: Vec<String> },
    #[error("backoff weight {0} outside (0, 1]")]
    InvalidLambda(f64),
    #[error("minimum count must be at least 1")]
    InvalidMinCount,
    #[error("cannot merge tables of order {left} and {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("model tables are inconsistent: {0}")]
    Inconsistent(String),
}

/// Reserved tokens padding each sentence. They cannot survive cleaning.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundaryMarkers {
    pub begin: String,
    pub end: String,
}

impl Default for BoundaryMarkers {
    fn default() -> Self {
        BoundaryMarkers {
            begin: "<s>".into(),
            end: "</s>".into(),
        }
    }
}

impl BoundaryMarkers {
    pub fn is_marker(&self, token: &str) -> bool {
        token == self.begin || token == self.end
    }

    /// `tokens` with `order - 1` begin markers in front and one end marker.
    pub fn pad<'a>(&'a self, tokens: &'a [Token], order: usize) -> Vec<&'a str> {
        let mut padded = Vec::with_capacity(tokens.len() + order);
        padded.extend(std::iter::repeat_n(self.begin.as_str(), order.saturating_sub(1)));
        padded.extend(tokens.iter().map(String::as_str));
        padded.push(self.end.as_str());
        padded
    }
}

/// Counts of every n-token sequence for one fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramTable {
    order: usize,
    counts: HashMap<Vec<Token>, u64>,
    total: u64,
}

impl NGramTable {
    pub fn new(order: usize) -> Self {
        NGramTable {
            order,
            counts: HashMap::new(),
            total: 0,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count<S: AsRef<str>>(&self, key: &[S]) -> u64 {
        if key.len() != self.order {
            return 0;
        }
        let lookup: Vec<Token> = key.iter().map(|s| s.as_ref().to_string()).collect();
        self.counts.get(&lookup).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Token], u64)> {
        self.counts.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    /// Add `count` occurrences of `key`. Zero counts are ignored.
    pub fn add(&mut self, key: Vec<Token>, count: u64) {
        debug_assert_eq!(key.len(), self.order);
        if count == 0 {
            return;
        }
        *self.counts.entry(key).or_insert(0) += count;
        self.total += count;
    }

    /// Pointwise count addition.
    pub fn merge(&mut self, other: NGramTable) -> Result<(), ModelError> {
        if other.order != self.order {
            return Err(ModelError::OrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        for (k, c) in other.counts {
            self.add(k, c);
        }
        Ok(())
    }

    /// Drop entries below `min_count`, recomputing the total.
    pub fn prune(&mut self, min_count: u64) {
        if min_count <= 1 {
            return;
        }
        self.counts.retain(|_, c| *c >= min_count);
        self.total = self.counts.values().sum();
    }

    /// Rows sorted by count descending, then by space-joined key ascending.
    pub fn sorted_rows(&self) -> Vec<(String, u64)> {
        let mut rows: Vec<(String, u64)> = self.counts.iter().map(|(k, &c)| (k.join(" "), c)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        rows
    }
}

fn check_order(order: usize) -> Result<(), ModelError> {
    if order == 0 || order > MAX_SUPPORTED_ORDER {
        return Err(ModelError::OrderOutOfRange {
            order,
            max: MAX_SUPPORTED_ORDER,
        });
    }
    Ok(())
}

/// Count every order-`n` window of the padded sentences.
pub fn count_ngrams<S: AsRef<[Token]>>(
    sentences: &[S],
    n: usize,
    markers: &BoundaryMarkers,
) -> Result<NGramTable, ModelError> {
    check_order(n)?;
    let mut table = NGramTable::new(n);
    for sentence in sentences {
        let tokens = sentence.as_ref();
        if let Some(t) = tokens.iter().find(|t| markers.is_marker(t)) {
            return Err(ModelError::MarkerCollision { token: t.clone() });
        }
        let padded = markers.pad(tokens, n);
        for window in padded.windows(n) {
            table.add(window.iter().map(|s| s.to_string()).collect(), 1);
        }
    }
    Ok(table)
}

/// Same result as [`count_ngrams`], counted over sentence shards in parallel.
pub fn count_ngrams_parallel<S: AsRef<[Token]> + Sync>(
    sentences: &[S],
    n: usize,
    markers: &BoundaryMarkers,
) -> Result<NGramTable, ModelError> {
    check_order(n)?;
    const SHARD: usize = 2048;
    sentences
        .par_chunks(SHARD)
        .map(|shard| count_ngrams(shard, n, markers))
        .try_reduce(
            || NGramTable::new(n),
            |mut a, b| {
                a.merge(b)?;
                Ok(a)
            },
        )
}

#[derive(Debug, Clone)]
pub struct ModelOptions {
    pub max_order: usize,
    pub min_count: u64,
    pub lambda: f64,
    pub markers: BoundaryMarkers,
    pub normalization: NormalizationConfig,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            max_order: MAX_SUPPORTED_ORDER,
            min_count: 1,
            lambda: DEFAULT_LAMBDA,
            markers: BoundaryMarkers::default(),
            normalization: NormalizationConfig::default(),
        }
    }
}

impl ModelOptions {
    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn with_normalization(mut self, normalization: NormalizationConfig) -> Self {
        self.normalization = normalization;
        self
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<(), ModelError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(ModelError::InvalidLambda(lambda));
    }
    Ok(())
}

/// History -> (next token, count) pairs for one order.
type Followers = HashMap<Vec<Token>, Vec<(Token, u64)>>;

/// Tables for orders 1..=max_order plus the settings they were built with.
///
/// Immutable once built; safe to share between threads.
#[derive(Debug, Clone)]
pub struct LanguageModel {
    tables: Vec<NGramTable>,
    markers: BoundaryMarkers,
    lambda: f64,
    normalization: NormalizationConfig,
    fingerprint: String,
    sentence_count: u64,
    // followers[n - 1]: (n-1)-token history -> (next token, count) for order n >= 2
    followers: Vec<Followers>,
    // every order-1 entry, by count descending then token ascending
    unigram_ranking: Vec<(Token, u64)>,
}

impl LanguageModel {
    pub fn train<S: AsRef<[Token]> + Sync>(sentences: &[S], options: &ModelOptions) -> Result<Self, ModelError> {
        check_order(options.max_order)?;
        check_lambda(options.lambda)?;
        if options.min_count == 0 {
            return Err(ModelError::InvalidMinCount);
        }
        let tables = (1..=options.max_order)
            .into_par_iter()
            .map(|n| {
                let mut t = count_ngrams_parallel(sentences, n, &options.markers)?;
                t.prune(options.min_count);
                Ok(t)
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Self::from_tables(
            tables,
            options.markers.clone(),
            options.lambda,
            options.normalization.clone(),
        )
    }

    /// Assemble a model from already-counted tables (index 0 is order 1).
    pub fn from_tables(
        tables: Vec<NGramTable>,
        markers: BoundaryMarkers,
        lambda: f64,
        normalization: NormalizationConfig,
    ) -> Result<Self, ModelError> {
        check_lambda(lambda)?;
        check_order(tables.len())?;
        for (i, t) in tables.iter().enumerate() {
            if t.order != i + 1 {
                return Err(ModelError::Inconsistent(format!(
                    "table at position {} has order {}",
                    i + 1,
                    t.order
                )));
            }
        }
        if tables[0].count(&[markers.begin.as_str()]) > 0 {
            return Err(ModelError::Inconsistent(
                "begin marker present in the order-1 table".into(),
            ));
        }
        let sentence_count = tables[0].count(&[markers.end.as_str()]);

        let mut followers = vec![HashMap::new()];
        for t in &tables[1..] {
            let mut index: Followers = HashMap::new();
            for (key, c) in t.iter() {
                let (last, history) = key.split_last().expect("order >= 2");
                index.entry(history.to_vec()).or_default().push((last.clone(), c));
            }
            followers.push(index);
        }

        let mut unigram_ranking: Vec<(Token, u64)> = tables[0].iter().map(|(k, c)| (k[0].clone(), c)).collect();
        unigram_ranking.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let fingerprint = normalization.fingerprint();
        Ok(LanguageModel {
            tables,
            markers,
            lambda,
            normalization,
            fingerprint,
            sentence_count,
            followers,
            unigram_ranking,
        })
    }

    pub fn max_order(&self) -> usize {
        self.tables.len()
    }

    /// N: the total of the order-1 table, end markers included.
    pub fn corpus_size(&self) -> u64 {
        self.tables[0].total
    }

    pub fn sentence_count(&self) -> u64 {
        self.sentence_count
    }

    pub fn table(&self, order: usize) -> Option<&NGramTable> {
        order.checked_sub(1).and_then(|i| self.tables.get(i))
    }

    pub fn tables(&self) -> &[NGramTable] {
        &self.tables
    }

    pub fn markers(&self) -> &BoundaryMarkers {
        &self.markers
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn normalization(&self) -> &NormalizationConfig {
        &self.normalization
    }

    pub fn normalization_fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Distinct order-1 entries excluding boundary markers.
    pub fn vocab_size(&self) -> usize {
        self.unigram_ranking
            .iter()
            .filter(|(w, _)| !self.markers.is_marker(w))
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus_size() == 0
    }

    /// Raw count of an n-gram of any stored order; 0 when absent.
    pub fn count<S: AsRef<str>>(&self, ngram: &[S]) -> u64 {
        match self.table(ngram.len()) {
            Some(t) => t.count(ngram),
            None => 0,
        }
    }

    pub fn unigram_count(&self, word: &str) -> u64 {
        self.tables[0].count(&[word])
    }

    /// How many times `history` precedes some token.
    ///
    /// The empty history precedes every token (N); an all-begin-marker
    /// history precedes the first token of every sentence.
    pub fn history_count<S: AsRef<str>>(&self, history: &[S]) -> u64 {
        if history.is_empty() {
            return self.corpus_size();
        }
        if history.iter().all(|t| t.as_ref() == self.markers.begin) {
            return if history.len() < self.max_order() {
                self.sentence_count
            } else {
                0
            };
        }
        self.count(history)
    }

    /// Tokens observed right after `history`, with the n-gram counts.
    pub fn followers<S: AsRef<str>>(&self, history: &[S]) -> &[(Token, u64)] {
        if history.is_empty() {
            return &self.unigram_ranking;
        }
        let Some(index) = self.followers.get(history.len()) else {
            return &[];
        };
        let key: Vec<Token> = history.iter().map(|s| s.as_ref().to_string()).collect();
        index.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every order-1 entry (end marker included), count desc then token asc.
    pub fn unigram_ranking(&self) -> &[(Token, u64)] {
        &self.unigram_ranking
    }

    /// c(context ++ word) / c(context); for the empty context c(word) / N.
    pub fn mle_prob<S: AsRef<str>>(&self, word: &str, context: &[S]) -> Result<f64, ModelError> {
        if context.len() + 1 > self.max_order() {
            return Err(ModelError::ContextTooLong {
                len: context.len(),
                max: self.max_order() - 1,
            });
        }
        let denominator = self.history_count(context);
        if denominator == 0 {
            return Err(ModelError::UndefinedDistribution {
                context: context.iter().map(|s| s.as_ref().to_string()).collect(),
            });
        }
        let mut ngram: Vec<&str> = context.iter().map(AsRef::as_ref).collect();
        ngram.push(word);
        Ok(self.count(&ngram) as f64 / denominator as f64)
    }

    /// Chain-rule log probability of a sentence under the order-`order`
    /// Markov approximation, padded like the training data.
    ///
    /// Returns negative infinity as soon as one factor is zero or undefined.
    pub fn sequence_log_prob(&self, tokens: &[Token], order: usize) -> Result<f64, ModelError> {
        if order == 0 || order > self.max_order() {
            return Err(ModelError::OrderOutOfRange {
                order,
                max: self.max_order(),
            });
        }
        let padded = self.markers.pad(tokens, order);
        let mut log_prob = 0.0;
        for window in padded.windows(order) {
            let (word, history) = window.split_last().expect("order >= 1");
            match self.mle_prob(word, history) {
                Ok(p) if p > 0.0 => log_prob += p.ln(),
                Ok(_) | Err(ModelError::UndefinedDistribution { .. }) => return Ok(f64::NEG_INFINITY),
                Err(e) => return Err(e),
            }
        }
        Ok(log_prob)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(words: &str) -> Vec<Token> {
        words.split_whitespace().map(String::from).collect()
    }

    fn table_map(t: &NGramTable) -> Vec<(String, u64)> {
        let mut rows = t.sorted_rows();
        rows.sort();
        rows
    }

    #[test]
    fn bigram_windows_of_abab() {
        let t = count_ngrams(&[s("a b a b")], 2, &BoundaryMarkers::default()).unwrap();
        assert_eq!(
            table_map(&t),
            vec![
                ("<s> a".to_string(), 1),
                ("a b".to_string(), 2),
                ("b </s>".to_string(), 1),
                ("b a".to_string(), 1),
            ]
        );
        assert_eq!(t.total(), 5);
    }

    #[test]
    fn unigram_padding_has_no_begin_marker() {
        let t = count_ngrams(&[s("a")], 1, &BoundaryMarkers::default()).unwrap();
        assert_eq!(table_map(&t), vec![("</s>".to_string(), 1), ("a".to_string(), 1)]);
        assert_eq!(t.total(), 2);
    }

    #[test]
    fn order_and_marker_errors() {
        let m = BoundaryMarkers::default();
        assert!(matches!(
            count_ngrams(&[s("a")], 0, &m),
            Err(ModelError::OrderOutOfRange { .. })
        ));
        assert!(matches!(
            count_ngrams(&[s("a")], 6, &m),
            Err(ModelError::OrderOutOfRange { .. })
        ));
        assert!(matches!(
            count_ngrams(&[s("a </s>")], 2, &m),
            Err(ModelError::MarkerCollision { .. })
        ));
    }

    #[test]
    fn single_sentence_unigram_mle() {
        let m = LanguageModel::train(&[s("a")], &ModelOptions::default()).unwrap();
        assert_eq!(m.mle_prob::<&str>("a", &[]).unwrap(), 0.5);
        assert_eq!(m.corpus_size(), 2);
    }

    #[test]
    fn undefined_and_too_long_contexts() {
        let m = LanguageModel::train(&[s("a b")], &ModelOptions::default().with_max_order(2)).unwrap();
        assert!(matches!(
            m.mle_prob("a", &["zz"]),
            Err(ModelError::UndefinedDistribution { .. })
        ));
        assert!(matches!(
            m.mle_prob("a", &["a", "b"]),
            Err(ModelError::ContextTooLong { .. })
        ));
        assert_eq!(m.mle_prob("zz", &["a"]).unwrap(), 0.0);
    }

    #[test]
    fn begin_history_counts_sentences() {
        let m = LanguageModel::train(&[s("a b"), s("b")], &ModelOptions::default()).unwrap();
        assert_eq!(m.history_count(&["<s>"]), 2);
        assert_eq!(m.history_count(&["<s>", "<s>", "<s>"]), 2);
        assert_eq!(m.mle_prob("a", &["<s>", "<s>"]).unwrap(), 0.5);
    }

    #[test]
    fn sequence_log_prob_matches_bigram_product() {
        let sent = s("a b c a");
        let m = LanguageModel::train(std::slice::from_ref(&sent), &ModelOptions::default()).unwrap();
        // <s> a: 1/1, a b: 1/2, b c: 1/1, c a: 1/1, a </s>: 1/2
        let expected = (1.0f64 * 0.5 * 1.0 * 1.0 * 0.5).ln();
        assert!((m.sequence_log_prob(&sent, 2).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn oov_sentence_is_impossible() {
        let m = LanguageModel::train(&[s("a b")], &ModelOptions::default()).unwrap();
        assert_eq!(m.sequence_log_prob(&s("a q"), 2).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(
            m.sequence_log_prob(&s("a"), 9),
            Err(ModelError::OrderOutOfRange { .. })
        ));
    }

    #[test]
    fn empty_sequence_is_end_given_begin() {
        let m = LanguageModel::train(&[s("a b"), s("c")], &ModelOptions::default()).unwrap();
        // P(</s> | <s>) = c(<s> </s>) / sentences = 0
        assert_eq!(m.sequence_log_prob(&[], 2).unwrap(), f64::NEG_INFINITY);
        // order 1: P(</s>) = 2 / 5
        assert!((m.sequence_log_prob(&[], 1).unwrap() - (2.0f64 / 5.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn reversed_sentence_scores_differently() {
        let sent = s("a b c");
        let m = LanguageModel::train(std::slice::from_ref(&sent), &ModelOptions::default()).unwrap();
        let rev: Vec<Token> = sent.iter().rev().cloned().collect();
        assert_ne!(
            m.sequence_log_prob(&sent, 2).unwrap(),
            m.sequence_log_prob(&rev, 2).unwrap()
        );
    }

    #[test]
    fn min_count_prunes() {
        let opts = ModelOptions {
            min_count: 2,
            ..ModelOptions::default()
        };
        let m = LanguageModel::train(&[s("a b"), s("a c")], &opts).unwrap();
        assert_eq!(m.unigram_count("a"), 2);
        assert_eq!(m.unigram_count("b"), 0);
        assert_eq!(m.corpus_size(), 4);
    }

    #[test]
    fn vocab_excludes_markers() {
        let m = LanguageModel::train(&[s("a b a")], &ModelOptions::default()).unwrap();
        assert_eq!(m.vocab_size(), 2);
    }
}
