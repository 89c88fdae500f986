//! Stupid Backoff scoring and top-k next-word suggestion.
//!
//! `S(w | h) = c(h w) / c(h)` when the longest history `h` has been seen
//! followed by `w`; otherwise `lambda * S(w | h')` with `h'` the history
//! minus its oldest token, bottoming out at `c(w) / N`. Scores are relative
//! and do not sum to one.
//!
//! Ranking is by score descending, then unigram count descending, then
//! token text in codepoint order.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ngram::{check_lambda, LanguageModel, DEFAULT_LAMBDA};
use crate::normalize::{self, NormalizeError, Token};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("model has no counts loaded")]
    EmptyModel,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("backoff weight {0} outside (0, 1]")]
    InvalidLambda(f64),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackoffConfig {
    pub lambda: f64,
    pub k_suggestions: usize,
}

impl Default for BackoffConfig {
    fn default() -> Self {
        BackoffConfig {
            lambda: DEFAULT_LAMBDA,
            k_suggestions: DEFAULT_K,
        }
    }
}

impl BackoffConfig {
    /// Default k with the model's stored backoff weight.
    pub fn for_model(model: &LanguageModel) -> Self {
        BackoffConfig {
            lambda: model.lambda(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), PredictError> {
        check_lambda(self.lambda).map_err(|_| PredictError::InvalidLambda(self.lambda))?;
        if self.k_suggestions == 0 {
            return Err(PredictError::InvalidK);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub word: Token,
    pub score: f64,
    pub matched_order: usize,
    pub backoff_depth: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionRequest {
    pub context_text: String,
    pub k: Option<usize>,
    pub prefix: Option<String>,
}

impl PredictionRequest {
    pub fn new(context_text: impl Into<String>) -> Self {
        PredictionRequest {
            context_text: context_text.into(),
            ..Default::default()
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_prefix(mut self, prefix: impl Into<String>) -> Self {
        self.prefix = Some(prefix.into());
        self
    }
}

/// Knobs for [`rank_candidates`] beyond what public suggestion exposes.
#[derive(Debug, Clone, Copy)]
pub struct RankOptions<'a> {
    pub k: usize,
    pub lambda: f64,
    /// Allow the end-of-sentence marker as a candidate (evaluation only).
    pub include_end_marker: bool,
    /// When false, only continuations of the full history are candidates.
    pub backoff: bool,
    pub prefix: Option<&'a str>,
}

/// The most recent `max_order - 1` tokens of `context`.
pub fn trim_context<'a, S>(model: &LanguageModel, context: &'a [S]) -> &'a [S] {
    let keep = model.max_order() - 1;
    &context[context.len().saturating_sub(keep)..]
}

/// Score `word` after `context` and report where the score came from.
///
/// `None` for words that never occur in the model.
pub fn sbo_detail<S: AsRef<str>>(
    model: &LanguageModel,
    word: &str,
    context: &[S],
    config: &BackoffConfig,
) -> Option<Suggestion> {
    let context = trim_context(model, context);
    let used = context.len();
    let mut ngram: Vec<&str> = context.iter().map(AsRef::as_ref).collect();
    ngram.push(word);
    for depth in 0..used {
        let history = &ngram[depth..used];
        let numerator = model.count(&ngram[depth..]);
        let denominator = model.history_count(history);
        if numerator > 0 && denominator > 0 {
            return Some(Suggestion {
                word: word.to_string(),
                score: backoff_score(numerator, denominator, config.lambda, depth),
                matched_order: used - depth + 1,
                backoff_depth: depth,
            });
        }
    }
    let unigram = model.unigram_count(word);
    (unigram > 0).then(|| Suggestion {
        word: word.to_string(),
        score: backoff_score(unigram, model.corpus_size(), config.lambda, used),
        matched_order: 1,
        backoff_depth: used,
    })
}

pub fn sbo_score<S: AsRef<str>>(model: &LanguageModel, word: &str, context: &[S], config: &BackoffConfig) -> f64 {
    sbo_detail(model, word, context, config).map_or(0.0, |s| s.score)
}

/// `lambda^depth * numerator / denominator`, evaluated in one fixed order
/// so equal inputs always give bit-identical scores.
pub fn backoff_score(numerator: u64, denominator: u64, lambda: f64, depth: usize) -> f64 {
    (numerator as f64 / denominator as f64) * lambda.powi(depth as i32)
}

/// Total order used for every suggestion list.
pub fn compare_ranked(model: &LanguageModel, a: &Suggestion, b: &Suggestion) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| model.unigram_count(&b.word).cmp(&model.unigram_count(&a.word)))
        .then_with(|| a.word.cmp(&b.word))
}

/// Top-k candidates after `context`, each keeping its longest-match score.
///
/// Candidates are the words seen after any non-empty suffix of the context;
/// only when there are none does the list fall back to the top unigrams.
pub fn rank_candidates<S: AsRef<str>>(model: &LanguageModel, context: &[S], opts: &RankOptions<'_>) -> Vec<Suggestion> {
    if opts.k == 0 {
        return Vec::new();
    }
    let context = trim_context(model, context);
    let used = context.len();
    let markers = model.markers();
    let eligible = |w: &str| {
        w != markers.begin
            && (opts.include_end_marker || w != markers.end)
            && opts.prefix.is_none_or(|p| w.starts_with(p))
    };

    let mut best: HashMap<&str, Suggestion> = HashMap::new();
    let levels = if opts.backoff { used } else { used.min(1) };
    for depth in 0..levels {
        let history = &context[depth..];
        let denominator = model.history_count(history);
        if denominator == 0 {
            continue;
        }
        for (word, count) in model.followers(history) {
            if !eligible(word) || best.contains_key(word.as_str()) {
                continue;
            }
            best.insert(
                word.as_str(),
                Suggestion {
                    word: word.clone(),
                    score: backoff_score(*count, denominator, opts.lambda, depth),
                    matched_order: used - depth + 1,
                    backoff_depth: depth,
                },
            );
        }
    }

    let mut fresh = Vec::new();
    if best.is_empty() && (opts.backoff || used == 0) {
        // Unigram-level scores are monotone in the unigram count, so the
        // first k words of the count ranking dominate the rest.
        let n = model.corpus_size();
        fresh.extend(
            model
                .unigram_ranking()
                .iter()
                .filter(|(w, _)| eligible(w))
                .take(opts.k)
                .map(|(w, c)| Suggestion {
                    word: w.clone(),
                    score: backoff_score(*c, n, opts.lambda, used),
                    matched_order: 1,
                    backoff_depth: used,
                }),
        );
    }
    let mut ranked: Vec<Suggestion> = best.into_values().chain(fresh).collect();
    ranked.sort_by(|a, b| compare_ranked(model, a, b));
    ranked.truncate(opts.k);
    ranked
}

/// Suggest the next word after an already-normalized token context.
pub fn suggest_tokens<S: AsRef<str>>(
    model: &LanguageModel,
    context: &[S],
    k: usize,
    prefix: Option<&str>,
    config: &BackoffConfig,
) -> Result<Vec<Suggestion>, PredictError> {
    if model.is_empty() {
        return Err(PredictError::EmptyModel);
    }
    config.validate()?;
    if k == 0 {
        return Err(PredictError::InvalidK);
    }
    let opts = RankOptions {
        k,
        lambda: config.lambda,
        include_end_marker: false,
        backoff: true,
        prefix,
    };
    Ok(rank_candidates(model, context, &opts))
}

/// Tokens of the sentence being typed at the end of `text`, normalized with
/// the model's pipeline. Text ending in a sentence terminator yields the
/// empty context.
pub fn context_tokens(model: &LanguageModel, text: &str) -> Result<Vec<Token>, NormalizeError> {
    let config = model.normalization();
    let canonical = normalize::canonicalize_str(text, config)?;
    let tail_start = canonical
        .char_indices()
        .rfind(|&(_, c)| config.is_terminator(c))
        .map_or(0, |(i, c)| i + c.len_utf8());
    Ok(normalize::clean_and_segment(&canonical[tail_start..], config)
        .into_iter()
        .flat_map(|s| s.tokens)
        .collect())
}

/// Normalize `request.context_text` and suggest the next word.
pub fn suggest(
    model: &LanguageModel,
    request: &PredictionRequest,
    config: &BackoffConfig,
) -> Result<Vec<Suggestion>, PredictError> {
    if model.is_empty() {
        return Err(PredictError::EmptyModel);
    }
    let k = request.k.unwrap_or(config.k_suggestions);
    let context = context_tokens(model, &request.context_text)?;
    let prefix = match &request.prefix {
        Some(p) => Some(normalize::normalize_fragment(p, model.normalization())?),
        None => None,
    };
    suggest_tokens(model, &context, k, prefix.as_deref().filter(|p| !p.is_empty()), config)
}

/// Words starting with `prefix`, by unigram count then codepoint order.
pub fn complete_prefix(model: &LanguageModel, prefix: &str, k: usize) -> Vec<Suggestion> {
    let prefix = normalize::normalize_fragment(prefix, model.normalization()).unwrap_or_default();
    if prefix.is_empty() || model.is_empty() {
        return Vec::new();
    }
    let n = model.corpus_size();
    let markers = model.markers();
    model
        .unigram_ranking()
        .iter()
        .filter(|(w, _)| !markers.is_marker(w) && w.starts_with(&prefix))
        .take(k)
        .map(|(w, c)| Suggestion {
            word: w.clone(),
            score: *c as f64 / n as f64,
            matched_order: 1,
            backoff_depth: 0,
        })
        .collect()
}
