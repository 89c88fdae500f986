//! Top-k next-word accuracy per n-gram order, and corpus-size scaling.
//!
//! For order `n`, every test sentence is padded with `n - 1` begin markers
//! and an end marker; each position after the padding is one prediction,
//! made from the preceding `n - 1` tokens only. A prediction is correct
//! when the true token is among the top `k` candidates. End-of-sentence
//! positions count, and the end marker is a legal candidate here.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ngram::{LanguageModel, ModelError, ModelOptions};
use crate::normalize::Sentence;
use crate::predictor::{rank_candidates, RankOptions};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("test set has no sentences")]
    EmptyTestSet,
    #[error("corpus has {available} training tokens, fewer than the requested {requested}")]
    InsufficientCorpus { requested: usize, available: usize },
    #[error("held-out fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("sizes must be non-empty and strictly ascending")]
    InvalidSizes,
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    HeldOut { fraction: f64 },
    SeparateFile,
    Resubstitution,
}

impl SplitMode {
    pub fn label(&self) -> &'static str {
        match self {
            SplitMode::HeldOut { .. } => "heldout",
            SplitMode::SeparateFile => "file",
            SplitMode::Resubstitution => "resub",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub k: usize,
    /// Highest order evaluated; clamped to the model's own maximum.
    pub max_order: usize,
    pub split_mode: SplitMode,
    pub seed: u64,
    pub backoff: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 5,
            max_order: 5,
            split_mode: SplitMode::HeldOut { fraction: 0.1 },
            seed: 42,
            backoff: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderAccuracy {
    pub order: usize,
    pub total_predictions: u64,
    pub correct_predictions: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<OrderAccuracy>,
    pub k: usize,
    pub split: String,
    pub backoff: bool,
    pub corpus: Vec<String>,
    pub mean_latency_micros: f64,
    pub p95_latency_micros: f64,
}

impl EvalReport {
    /// Tab-separated table: order, accuracy in percent, correct, total.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("ngrams\taccuracy\tcorrect\ttotal\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}-gram\t{:.2}\t{}\t{}",
                r.order,
                100.0 * r.accuracy,
                r.correct_predictions,
                r.total_predictions
            );
        }
        out
    }

    pub fn accuracy(&self, order: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.order == order).map(|r| r.accuracy)
    }
}

/// Deterministically shuffle and split off `fraction` of the sentences as
/// the test set. Returns `(train, test)`.
pub fn split_sentences(
    sentences: &[Sentence],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<Sentence>, Vec<Sentence>), EvalError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(EvalError::InvalidFraction(fraction));
    }
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((sentences.len() as f64) * fraction).round().max(1.0) as usize;
    let n_test = n_test.min(sentences.len());
    let (test_idx, train_idx) = order.split_at(n_test);
    let pick = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| sentences[i].clone()).collect::<Vec<_>>()
    };
    Ok((pick(train_idx), pick(test_idx)))
}

fn percentile(sorted: &[Duration], q: f64) -> Duration {
    if sorted.is_empty() {
        return Duration::ZERO;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn evaluate_topk<S: AsRef<[String]>>(
    model: &LanguageModel,
    test_sentences: &[S],
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    if test_sentences.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    if config.k == 0 {
        return Err(EvalError::InvalidK);
    }
    let top = config.max_order.clamp(1, model.max_order());
    let opts = RankOptions {
        k: config.k,
        lambda: model.lambda(),
        include_end_marker: true,
        backoff: config.backoff,
        prefix: None,
    };
    let mut latencies = Vec::new();
    let mut rows = Vec::with_capacity(top);
    for order in 1..=top {
        let (mut total, mut correct) = (0u64, 0u64);
        for sentence in test_sentences {
            let padded = model.markers().pad(sentence.as_ref(), order);
            for window in padded.windows(order) {
                let (truth, history) = window.split_last().expect("order >= 1");
                let started = Instant::now();
                let ranked = rank_candidates(model, history, &opts);
                latencies.push(started.elapsed());
                total += 1;
                if ranked.iter().any(|s| s.word == *truth) {
                    correct += 1;
                }
            }
        }
        rows.push(OrderAccuracy {
            order,
            total_predictions: total,
            correct_predictions: correct,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        });
    }
    latencies.sort_unstable();
    let mean = if latencies.is_empty() {
        0.0
    } else {
        latencies.iter().map(Duration::as_secs_f64).sum::<f64>() / latencies.len() as f64 * 1e6
    };
    Ok(EvalReport {
        rows,
        k: config.k,
        split: config.split_mode.label().to_string(),
        backoff: config.backoff,
        corpus: Vec::new(),
        mean_latency_micros: mean,
        p95_latency_micros: percentile(&latencies, 0.95).as_secs_f64() * 1e6,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub size: usize,
    pub accuracy: f64,
    pub mean_latency_ms: f64,
}

/// Render scaling rows as a tab-separated table.
pub fn scaling_tsv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("tokens\taccuracy\tmean_latency_ms\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{:.2}\t{:.4}", r.size, 100.0 * r.accuracy, r.mean_latency_ms);
    }
    out
}

/// Fraction of sentences (taken from the end) reserved for testing.
pub const SCALING_TAIL_FRACTION: f64 = 0.1;

/// Train on the first `size` tokens for each size and evaluate top-k at the
/// highest order on a fixed tail of the corpus.
pub fn benchmark_scaling(
    sentences: &[Sentence],
    sizes: &[usize],
    config: &EvalConfig,
    options: &ModelOptions,
) -> Result<Vec<ScalingRow>, EvalError> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] == 0 {
        return Err(EvalError::InvalidSizes);
    }
    let n_tail = ((sentences.len() as f64) * SCALING_TAIL_FRACTION).ceil() as usize;
    if n_tail == 0 || n_tail >= sentences.len() {
        return Err(EvalError::InsufficientCorpus {
            requested: sizes[0],
            available: 0,
        });
    }
    let (pool, tail) = sentences.split_at(sentences.len() - n_tail);
    let available: usize = pool.iter().map(|s| s.tokens.len()).sum();
    let largest = *sizes.last().expect("non-empty");
    if largest > available {
        return Err(EvalError::InsufficientCorpus {
            requested: largest,
            available,
        });
    }

    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let train = take_tokens(pool, size);
        let opts = ModelOptions {
            max_order: config.max_order.min(options.max_order),
            ..options.clone()
        };
        let model = LanguageModel::train(&train, &opts)?;
        let eval_cfg = EvalConfig {
            max_order: model.max_order(),
            ..config.clone()
        };
        let report = evaluate_topk(&model, tail, &eval_cfg)?;
        rows.push(ScalingRow {
            size,
            accuracy: report.accuracy(model.max_order()).unwrap_or(0.0),
            mean_latency_ms: report.mean_latency_micros / 1000.0,
        });
    }
    Ok(rows)
}

/// Leading sentences holding exactly `size` tokens (the last one cut short).
fn take_tokens(pool: &[Sentence], size: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut remaining = size;
    for s in pool {
        if remaining == 0 {
            break;
        }
        let take = s.tokens.len().min(remaining);
        out.push(s.tokens[..take].to_vec());
        remaining -= take;
    }
    out
}
