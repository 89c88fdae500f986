//! Next-word suggestion from n-gram counts.
//!
//! The pipeline is: [`normalize`] raw text into sentences, count them into a
//! [`ngram::LanguageModel`], rank continuations with Stupid Backoff in
//! [`predictor`], store models with [`persistence`], measure top-k accuracy
//! with [`eval`], and serve suggestions over HTTP with [`service`].

pub mod cli;
pub mod eval;
pub mod ngram;
pub mod normalize;
pub mod persistence;
pub mod predictor;
pub mod service;

pub use ngram::{count_ngrams, BoundaryMarkers, LanguageModel, ModelError, ModelOptions, NGramTable};
pub use normalize::{NormalizationConfig, ScriptMode, Sentence, Token};

pub use predictor::{BackoffConfig, PredictionRequest, Suggestion};
