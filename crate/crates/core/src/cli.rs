//! Command-line front end.
//!
//! Standard output carries only data (tab-separated); diagnostics and
//! statistics go to standard error. Exit codes: 0 success, 1 usage error,
//! 2 data error, 3 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::eval::{self, EvalConfig, EvalError, EvalReport, SplitMode};
use crate::ngram::{LanguageModel, ModelError, ModelOptions, MAX_SUPPORTED_ORDER};
use crate::normalize::{self, CleanStats, CodepointMap, NormalizationConfig, NormalizeError, ScriptMode, Sentence};
use crate::persistence::{self, PersistError};
use crate::predictor::{self, BackoffConfig, PredictError, PredictionRequest};
use crate::service;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Io(m) => m,
        }
    }
}

impl From<PersistError> for CliError {
    fn from(e: PersistError) -> Self {
        match e {
            PersistError::Io { .. } | PersistError::MissingFile(_) | PersistError::WriteCollision(_) => {
                CliError::Io(e.to_string())
            }
            PersistError::Normalize(NormalizeError::Io { .. }) => CliError::Io(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<NormalizeError> for CliError {
    fn from(e: NormalizeError) -> Self {
        match e {
            NormalizeError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PredictError> for CliError {
    fn from(e: PredictError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nextword",
    version,
    about = "N-gram next-word suggestion with Stupid Backoff"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScriptArg {
    Arabic,
    Latin,
    Mixed,
}

impl From<ScriptArg> for ScriptMode {
    fn from(s: ScriptArg) -> Self {
        match s {
            ScriptArg::Arabic => ScriptMode::Arabic,
            ScriptArg::Latin => ScriptMode::Latin,
            ScriptArg::Mixed => ScriptMode::Mixed,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum SplitArg {
    Heldout,
    File,
    Resub,
}

#[derive(Debug, Clone, Args)]
pub struct NormArgs {
    /// Writing system to keep; tokens with letters from other scripts are dropped
    #[arg(long, value_enum)]
    pub script_mode: Option<ScriptArg>,
    /// Codepoint map file (source<TAB>replacement per line)
    #[arg(long = "map", value_name = "FILE")]
    pub map: Option<PathBuf>,
    /// Keep digits instead of stripping them
    #[arg(long)]
    pub keep_digits: bool,
    /// Keep punctuation and symbols instead of stripping them
    #[arg(long)]
    pub keep_punctuation: bool,
    /// Do not lowercase tokens
    #[arg(long)]
    pub no_lowercase: bool,
}

impl NormArgs {
    fn is_set(&self) -> bool {
        self.script_mode.is_some()
            || self.map.is_some()
            || self.keep_digits
            || self.keep_punctuation
            || self.no_lowercase
    }

    pub fn config(&self) -> Result<NormalizationConfig, CliError> {
        let mut cfg = NormalizationConfig::default();
        if let Some(mode) = self.script_mode {
            cfg.script_mode = mode.into();
        }
        if let Some(path) = &self.map {
            cfg.codepoint_map = CodepointMap::from_file(path)?;
        }
        cfg.strip_digits = !self.keep_digits;
        cfg.strip_punctuation = !self.keep_punctuation;
        cfg.lowercase_latin = !self.no_lowercase;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Highest n-gram order to build (1..=5)
    #[arg(long, default_value_t = MAX_SUPPORTED_ORDER)]
    pub max_order: usize,
    /// Drop n-grams seen fewer than this many times
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    /// Backoff weight in (0, 1]
    #[arg(long, default_value_t = crate::ngram::DEFAULT_LAMBDA)]
    pub lambda: f64,
}

impl ModelArgs {
    fn options(&self, normalization: NormalizationConfig) -> Result<ModelOptions, CliError> {
        check_order(self.max_order)?;
        check_lambda(self.lambda)?;
        if self.min_count == 0 {
            return Err(CliError::Usage("--min-count must be at least 1".into()));
        }
        Ok(ModelOptions {
            max_order: self.max_order,
            min_count: self.min_count,
            lambda: self.lambda,
            normalization,
            ..ModelOptions::default()
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a raw corpus into one cleaned sentence per line
    Clean {
        input: PathBuf,
        /// Output file (standard output when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        norm: NormArgs,
    },
    /// Count n-grams from a corpus and save the model
    Build {
        corpus: PathBuf,
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        #[command(flatten)]
        model_args: ModelArgs,
        #[command(flatten)]
        norm: NormArgs,
        /// Replace an existing model in DIR
        #[arg(long)]
        force: bool,
        /// How many of the most frequent entries to print per order
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Also write every order's full frequency table to FILE
        #[arg(long, value_name = "FILE")]
        plot_data: Option<PathBuf>,
    },
    /// Suggest the next word after CONTEXT
    Predict {
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        #[arg(long, default_value_t = predictor::DEFAULT_K)]
        k: usize,
        /// Override the model's stored backoff weight
        #[arg(long)]
        lambda: Option<f64>,
        /// Only suggest words starting with this prefix
        #[arg(long)]
        prefix: Option<String>,
        #[command(flatten)]
        norm: NormArgs,
        /// Context text (words are joined with spaces)
        context: Vec<String>,
    },
    /// Complete a word prefix from the unigram table
    Complete {
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        #[arg(long, default_value_t = predictor::DEFAULT_K)]
        k: usize,
        prefix: String,
    },
    /// Measure top-k prediction accuracy per order
    Eval {
        /// Saved model to evaluate (requires --test)
        #[arg(long, value_name = "DIR", conflicts_with = "corpus")]
        model: Option<PathBuf>,
        /// Corpus to train an in-memory model from
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        /// Separate test corpus
        #[arg(long, value_name = "FILE")]
        test: Option<PathBuf>,
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
        /// Held-out fraction for --split heldout
        #[arg(long, default_value_t = 0.1)]
        fraction: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[command(flatten)]
        model_args: ModelArgs,
        #[command(flatten)]
        norm: NormArgs,
        /// Score each order in isolation, without backing off
        #[arg(long)]
        no_backoff: bool,
        /// Write the full report as JSON to FILE
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Accuracy and latency as the training corpus grows
    Bench {
        corpus: PathBuf,
        /// Training sizes in tokens, ascending, comma-separated
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[command(flatten)]
        model_args: ModelArgs,
        #[command(flatten)]
        norm: NormArgs,
    },
    /// Serve predictions over HTTP
    Serve {
        #[arg(long, value_name = "DIR")]
        model: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        lambda: Option<f64>,
    },
}

fn check_order(order: usize) -> Result<(), CliError> {
    if order == 0 || order > MAX_SUPPORTED_ORDER {
        return Err(CliError::Usage(format!(
            "--max-order must be in 1..={MAX_SUPPORTED_ORDER}"
        )));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<(), CliError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(CliError::Usage(format!("--lambda {lambda} outside (0, 1]")));
    }
    Ok(())
}

fn check_k(k: usize) -> Result<(), CliError> {
    if k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Read and normalize a corpus file, attaching file/line context to errors.
pub fn load_corpus(path: &Path, config: &NormalizationConfig) -> Result<(Vec<Sentence>, CleanStats), CliError> {
    let bytes = read_file(path)?;
    normalize::normalize_text(&bytes, config).map_err(|e| match e {
        NormalizeError::InvalidEncoding { offset } => {
            let line = bytes[..offset].iter().filter(|&&b| b == b'\n').count() + 1;
            CliError::Data(format!("{}:{line}: {e}", path.display()))
        }
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

fn report_stats(label: &str, stats: &CleanStats) {
    eprintln!(
        "{label}: {} sentences, {} tokens, {} dropped tokens",
        stats.sentences, stats.tokens, stats.dropped_tokens
    );
}

/// Top-`n` rows of each order as `order<TAB>rank<TAB>ngram<TAB>freq`.
pub fn frequency_report(model: &LanguageModel, n: usize) -> String {
    let mut out = String::from("order\trank\tngram\tfreq\n");
    for t in model.tables() {
        let rows = t.sorted_rows();
        let visible = rows
            .iter()
            .filter(|(k, _)| !k.split(' ').all(|tok| model.markers().is_marker(tok)));
        for (rank, (key, count)) in visible.take(n).enumerate() {
            let _ = writeln!(out, "{}\t{}\t{key}\t{count}", t.order(), rank + 1);
        }
    }
    out
}

fn plot_data(model: &LanguageModel) -> String {
    let mut out = String::from("order\tngram\tfreq\n");
    for t in model.tables() {
        for (key, count) in t.sorted_rows() {
            let _ = writeln!(out, "{}\t{key}\t{count}", t.order());
        }
    }
    out
}

fn warn_on_fingerprint(model: &LanguageModel, norm: &NormArgs) -> Result<(), CliError> {
    if norm.is_set() {
        let requested = norm.config()?.fingerprint();
        if requested != model.normalization_fingerprint() {
            log::warn!(
                "normalization flags (fingerprint {requested}) differ from the model's ({}); using the model's pipeline",
                model.normalization_fingerprint()
            );
        }
    }
    Ok(())
}

/// Render one suggestion per line: rank, word, score, matched order.
pub fn render_suggestions(list: &[predictor::Suggestion]) -> String {
    let mut out = String::new();
    for (i, s) in list.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}\t{:.6}\t{}", i + 1, s.word, s.score, s.matched_order);
    }
    out
}

fn emit(stdout: &mut dyn std::io::Write, text: &str) -> Result<(), CliError> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

pub fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    match cli.command {
        Command::Clean { input, output, norm } => {
            let cfg = norm.config()?;
            let (sentences, stats) = load_corpus(&input, &cfg)?;
            let text = normalize::render_sentences(&sentences);
            match output {
                Some(path) => write_file(&path, &text)?,
                None => emit(stdout, &text)?,
            }
            report_stats(&input.display().to_string(), &stats);
        }
        Command::Build {
            corpus,
            model,
            model_args,
            norm,
            force,
            top,
            plot_data: plot,
        } => {
            let cfg = norm.config()?;
            let opts = model_args.options(cfg.clone())?;
            let (sentences, stats) = load_corpus(&corpus, &cfg)?;
            report_stats(&corpus.display().to_string(), &stats);
            let lm = LanguageModel::train(&sentences, &opts)?;
            let manifest = persistence::save_model(&lm, &model, force)?;
            eprintln!(
                "saved model {} to {} (N = {}, vocabulary {})",
                manifest.model_id,
                model.display(),
                lm.corpus_size(),
                lm.vocab_size()
            );
            emit(stdout, &frequency_report(&lm, top))?;
            if let Some(path) = plot {
                write_file(&path, &plot_data(&lm))?;
            }
        }
        Command::Predict {
            model,
            k,
            lambda,
            prefix,
            norm,
            context,
        } => {
            check_k(k)?;
            if let Some(l) = lambda {
                check_lambda(l)?;
            }
            let lm = persistence::load_model(&model)?;
            warn_on_fingerprint(&lm, &norm)?;
            let backoff = BackoffConfig {
                lambda: lambda.unwrap_or(lm.lambda()),
                k_suggestions: k,
            };
            let mut request = PredictionRequest::new(context.join(" ")).with_k(k);
            request.prefix = prefix;
            let list = predictor::suggest(&lm, &request, &backoff)?;
            emit(stdout, &render_suggestions(&list))?;
        }
        Command::Complete { model, k, prefix } => {
            check_k(k)?;
            let lm = persistence::load_model(&model)?;
            let list = predictor::complete_prefix(&lm, &prefix, k);
            emit(stdout, &render_suggestions(&list))?;
        }
        Command::Eval {
            model,
            corpus,
            test,
            split,
            fraction,
            seed,
            k,
            model_args,
            norm,
            no_backoff,
            report,
        } => {
            check_k(k)?;
            let (lm, test_sentences, split_mode, names) = prepare_eval(
                model.as_deref(),
                corpus.as_deref(),
                test.as_deref(),
                split,
                fraction,
                seed,
                &model_args,
                &norm,
            )?;
            let config = EvalConfig {
                k,
                max_order: model_args.max_order.min(lm.max_order()),
                split_mode,
                seed,
                backoff: !no_backoff,
            };
            let mut rep: EvalReport = eval::evaluate_topk(&lm, &test_sentences, &config)?;
            rep.corpus = names;
            emit(stdout, &rep.to_tsv())?;
            eprintln!(
                "split={} k={} backoff={} mean latency {:.1} us, p95 {:.1} us",
                rep.split, rep.k, rep.backoff, rep.mean_latency_micros, rep.p95_latency_micros
            );
            if let Some(path) = report {
                let json = serde_json::to_string_pretty(&rep).expect("report serializes");
                write_file(&path, &(json + "\n"))?;
            }
        }
        Command::Bench {
            corpus,
            sizes,
            k,
            model_args,
            norm,
        } => {
            check_k(k)?;
            let cfg = norm.config()?;
            let opts = model_args.options(cfg.clone())?;
            let (sentences, _) = load_corpus(&corpus, &cfg)?;
            let config = EvalConfig {
                k,
                max_order: opts.max_order,
                ..EvalConfig::default()
            };
            let rows = eval::benchmark_scaling(&sentences, &sizes, &config, &opts).map_err(|e| match e {
                EvalError::InvalidSizes => CliError::Usage(e.to_string()),
                other => other.into(),
            })?;
            emit(stdout, &eval::scaling_tsv(&rows))?;
        }
        Command::Serve {
            model,
            bind,
            port,
            lambda,
        } => {
            if let Some(l) = lambda {
                check_lambda(l)?;
            }
            let lm = persistence::load_model(&model)?;
            let backoff = BackoffConfig {
                lambda: lambda.unwrap_or(lm.lambda()),
                ..BackoffConfig::default()
            };
            let state = service::AppState::with_backoff(lm, backoff);
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
            runtime
                .block_on(service::serve(state, SocketAddr::new(bind, port)))
                .map_err(|e| CliError::Io(format!("{bind}:{port}: {e}")))?;
        }
    }
    Ok(())
}

type PreparedEval = (LanguageModel, Vec<Sentence>, SplitMode, Vec<String>);

#[allow(clippy::too_many_arguments)]
fn prepare_eval(
    model: Option<&Path>,
    corpus: Option<&Path>,
    test: Option<&Path>,
    split: Option<SplitArg>,
    fraction: f64,
    seed: u64,
    model_args: &ModelArgs,
    norm: &NormArgs,
) -> Result<PreparedEval, CliError> {
    let name = |p: &Path| p.display().to_string();
    if let Some(dir) = model {
        let Some(test) = test else {
            return Err(CliError::Usage("eval --model needs --test FILE".into()));
        };
        if matches!(split, Some(s) if s != SplitArg::File) {
            return Err(CliError::Usage(
                "a saved model can only be evaluated with --split file".into(),
            ));
        }
        let lm = persistence::load_model(dir)?;
        warn_on_fingerprint(&lm, norm)?;
        let (sentences, _) = load_corpus(test, lm.normalization())?;
        return Ok((lm, sentences, SplitMode::SeparateFile, vec![name(dir), name(test)]));
    }
    let Some(corpus) = corpus else {
        return Err(CliError::Usage("eval needs --corpus FILE or --model DIR".into()));
    };
    let cfg = norm.config()?;
    let opts = model_args.options(cfg.clone())?;
    let (sentences, _) = load_corpus(corpus, &cfg)?;
    let split = split.unwrap_or(if test.is_some() {
        SplitArg::File
    } else {
        SplitArg::Heldout
    });
    let (train, test_sentences, mode, names) = match (split, test) {
        (SplitArg::File, Some(t)) => {
            let (ts, _) = load_corpus(t, &cfg)?;
            (sentences, ts, SplitMode::SeparateFile, vec![name(corpus), name(t)])
        }
        (SplitArg::File, None) => return Err(CliError::Usage("--split file needs --test FILE".into())),
        (_, Some(_)) => return Err(CliError::Usage("--test is only used with --split file".into())),
        (SplitArg::Resub, None) => (
            sentences.clone(),
            sentences,
            SplitMode::Resubstitution,
            vec![name(corpus)],
        ),
        (SplitArg::Heldout, None) => {
            let (tr, te) = eval::split_sentences(&sentences, fraction, seed).map_err(|e| match e {
                EvalError::InvalidFraction(_) => CliError::Usage(e.to_string()),
                other => other.into(),
            })?;
            (tr, te, SplitMode::HeldOut { fraction }, vec![name(corpus)])
        }
    };
    let lm = LanguageModel::train(&train, &opts)?;
    Ok((lm, test_sentences, mode, names))
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => {
            let _ = lock.flush();
            0
        }
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
