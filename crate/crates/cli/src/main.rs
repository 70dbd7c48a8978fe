//! `csembed`: code-switched embedding and sentiment pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 numerical failure.

mod output;
mod settings;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use csembed::classifier::{self, io as model_io, BiLstmModel, ClassifierConfig, LabeledExample, Prediction};
use csembed::corpus::{build_keyword_list, filter_code_switched, ingest_jsonl};
use csembed::embeddings::{load_text, train_cbow, write_text, CbowConfig};
use csembed::evaluation::{self, ReportFormat};
use csembed::preprocess::{parse_stopwords, read_documents, ContractionTable, Preprocessor};
use csembed::text::read_word_list;

use output::{write_atomic, write_bytes_atomic};
use settings::{echo, Flags, Global};

#[derive(Parser, Debug)]
#[command(name = "csembed", about = "Code-switched Spanish/English embeddings and sentiment classification")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select code-switched tweets from JSONL tweet files.
    Ingest(IngestArgs),
    /// Tokenize and clean tweets into `{"id", "tokens"}` JSONL.
    Preprocess(PreprocessArgs),
    /// Train CBOW word vectors on preprocessed documents.
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Query nearest neighbors in a vector file.
    Explore(ExploreArgs),
    /// Train the BiLSTM sentiment classifier.
    TrainClassifier(TrainClassifierArgs),
    /// Classify a text or a TSV file of texts.
    Predict(PredictArgs),
    /// Score predictions against gold labels.
    Evaluate(EvaluateArgs),
    /// Print version and build information.
    Version,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Tweet JSONL files (`id`, `text`, `lang` per line).
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Spanish keyword candidates, one per line.
    #[arg(long)]
    keywords: PathBuf,
    /// Spanglish keyword candidates; exempt from the Portuguese filter.
    #[arg(long)]
    spanglish: Option<PathBuf>,
    /// Portuguese words to exclude from the Spanish candidates.
    #[arg(long)]
    portuguese_dict: PathBuf,
    /// Proper nouns to exclude.
    #[arg(long)]
    proper_nouns: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug, Default)]
struct TextArgs {
    /// English stopword list (defaults to the shipped snapshot).
    #[arg(long)]
    en_stopwords: Option<PathBuf>,
    /// Spanish stopword list (defaults to the shipped snapshot).
    #[arg(long)]
    es_stopwords: Option<PathBuf>,
    /// Contraction table, `contraction<TAB>expansion` (defaults to the shipped table).
    #[arg(long)]
    contractions: Option<PathBuf>,
}

impl TextArgs {
    fn preprocessor(&self) -> Result<Preprocessor> {
        let mut pre = Preprocessor::default();
        let read = |p: &Path| std::fs::read(p).with_context(|| format!("cannot read {}", p.display()));
        if let Some(p) = &self.en_stopwords {
            pre.en_stopwords = parse_stopwords(&p.display().to_string(), &read(p)?)?;
        }
        if let Some(p) = &self.es_stopwords {
            pre.es_stopwords = parse_stopwords(&p.display().to_string(), &read(p)?)?;
        }
        if let Some(p) = &self.contractions {
            pre.contractions = ContractionTable::parse(&p.display().to_string(), &read(p)?)?;
        }
        Ok(pre)
    }
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// Tweet JSONL file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    text: TextArgs,
}

#[derive(Args, Debug)]
struct TrainEmbeddingsArgs {
    /// Preprocessed document JSONL.
    #[arg(long)]
    input: PathBuf,
    /// Output vector file (word2vec text format).
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    initial_lr: Option<f64>,
    /// Subsampling threshold, or `off`.
    #[arg(long)]
    sample: Option<String>,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    /// Vector file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    word: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Print the cosine similarity to this word instead of neighbors.
    #[arg(long)]
    with: Option<String>,
}

#[derive(Args, Debug)]
struct TrainClassifierArgs {
    /// Vector file used to seed the embedding layer.
    #[arg(long)]
    embeddings: PathBuf,
    /// Labeled training data: `id<TAB>label<TAB>text` TSV or pre-tokenized `.jsonl`.
    #[arg(long)]
    train: PathBuf,
    /// Labeled validation data, same formats as `--train`.
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lstm_hidden: Option<usize>,
    #[arg(long)]
    freeze_embeddings: bool,
    #[command(flatten)]
    text: TextArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Text to classify.
    #[arg(long, conflicts_with_all = ["input", "output"])]
    text: Option<String>,
    /// TSV of `id<TAB>text` or `id<TAB>label<TAB>text` rows.
    #[arg(long, requires = "output")]
    input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    output: Option<PathBuf>,
    #[command(flatten)]
    text_args: TextArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Gold labels: `id<TAB>label[...]` rows, or `gold<TAB>pred` pairs when `--pred` is absent.
    #[arg(long)]
    gold: PathBuf,
    /// Predictions (`id<TAB>label[...]`), joined with the gold file by id.
    #[arg(long)]
    pred: Option<PathBuf>,
    #[arg(long, default_value = "text", value_parser = ["text", "json"])]
    format: String,
    /// Write the report to a file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Command-line misuse detected after parsing.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn ingest(args: &IngestArgs) -> Result<()> {
    let spanish = read_word_list(&args.keywords)?;
    let spanglish = match &args.spanglish {
        Some(p) => read_word_list(p)?,
        None => Vec::new(),
    };
    let keywords = build_keyword_list(
        &spanish,
        &spanglish,
        &read_word_list(&args.portuguese_dict)?,
        &read_word_list(&args.proper_nouns)?,
    )?;
    eprintln!("[ingest] {} keywords", keywords.len());
    let mut tweets = Vec::new();
    for path in &args.input {
        let ingested = ingest_jsonl(path)?;
        for skip in &ingested.skipped {
            eprintln!("[ingest] {}:{}: skipped: {}", path.display(), skip.line, skip.reason);
        }
        tweets.extend(ingested.tweets);
    }
    let total = tweets.len();
    let kept: Vec<_> = filter_code_switched(tweets, &keywords).collect();
    eprintln!("[ingest] kept {} of {} tweets", kept.len(), total);
    write_atomic(&args.output, |w| {
        for t in &kept {
            serde_json::to_writer(&mut *w, t)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

fn preprocess(args: &PreprocessArgs) -> Result<()> {
    let pre = args.text.preprocessor()?;
    let ingested = ingest_jsonl(&args.input)?;
    for skip in &ingested.skipped {
        eprintln!("[preprocess] {}:{}: skipped: {}", args.input.display(), skip.line, skip.reason);
    }
    let docs: Vec<_> = ingested.tweets.iter().map(|t| pre.document(t)).collect();
    let empty = docs.iter().filter(|d| d.is_empty()).count();
    if empty > 0 {
        eprintln!("[preprocess] {empty} documents have no tokens after preprocessing");
    }
    eprintln!("[preprocess] {} documents", docs.len());
    write_atomic(&args.output, |w| {
        for d in &docs {
            serde_json::to_writer(&mut *w, &d.to_record())?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

fn train_embeddings(global: &Global, args: &TrainEmbeddingsArgs) -> Result<()> {
    let flags = Flags::default()
        .opt("dim", args.dim)
        .opt("window", args.window)
        .opt("epochs", args.epochs)
        .opt("negatives", args.negatives)
        .opt("min_count", args.min_count)
        .opt("initial_lr", args.initial_lr)
        .opt("sample", args.sample.clone())
        .into_inner();
    let config = CbowConfig::from_key_values(&global.resolve(CbowConfig::KEYS, &flags)?)?;
    echo("train-embeddings", &config.to_key_values());
    let corpus: Vec<Vec<String>> = read_documents(&args.input)?.into_iter().map(|d| d.tokens).collect();
    let (model, log) = train_cbow::<f32, _, _>(&corpus, &config)?;
    for (epoch, loss) in log.epoch_losses.iter().enumerate() {
        eprintln!("[train-embeddings] epoch {} mean loss {loss:.6}", epoch + 1);
    }
    eprintln!(
        "[train-embeddings] vocabulary {} words, {} training tokens",
        log.vocab_size, log.corpus_tokens
    );
    if !model.is_finite() {
        return Err(csembed::Error::NonFiniteLoss { batch: 0 }).context("embedding training diverged");
    }
    write_atomic(&args.output, |w| Ok(write_text(&model, w)?))
}

fn explore(args: &ExploreArgs) -> Result<()> {
    let model = load_text::<f32>(&args.model)?;
    let mut out = std::io::stdout().lock();
    if let Some(other) = &args.with {
        let sim = model.similarity(&args.word, other)?;
        writeln!(out, "{sim:.6}")?;
        return Ok(());
    }
    for (word, sim) in model.top_k_neighbors(&args.word, args.k)? {
        writeln!(out, "{word}\t{sim:.6}")?;
    }
    Ok(())
}

fn load_examples(path: &Path, pre: &Preprocessor) -> Result<Vec<LabeledExample>> {
    let examples = if path.extension().is_some_and(|e| e == "jsonl") {
        classifier::load_labeled_jsonl(path)?
    } else {
        classifier::load_labeled_tsv(path, pre)?
    };
    let empty = examples.iter().filter(|e| e.is_empty()).count();
    if empty > 0 {
        eprintln!("[data] {}: {empty} examples have no tokens", path.display());
    }
    Ok(examples)
}

fn train_classifier(global: &Global, args: &TrainClassifierArgs) -> Result<()> {
    let flags = Flags::default()
        .opt("lr", args.lr)
        .opt("max_epochs", args.max_epochs)
        .opt("batch_size", args.batch_size)
        .opt("lstm_hidden", args.lstm_hidden)
        .opt("freeze_embeddings", args.freeze_embeddings.then_some(true))
        .into_inner();
    let config = ClassifierConfig::from_key_values(&global.resolve(ClassifierConfig::KEYS, &flags)?)?;
    echo("train-classifier", &config.to_key_values());
    let pre = args.text.preprocessor()?;
    let train_set = load_examples(&args.train, &pre)?;
    let dev_set = load_examples(&args.dev, &pre)?;
    let embeddings = load_text::<f32>(&args.embeddings)?;
    let model = BiLstmModel::new(config, &embeddings)?;
    eprintln!(
        "[train-classifier] {} train / {} dev examples, {} parameters",
        train_set.len(),
        dev_set.len(),
        model.parameter_count()
    );
    let (model, log) = classifier::train_with(model, &train_set, &dev_set, |r| {
        eprintln!(
            "[train-classifier] epoch {} train loss {:.5} acc {:.4} | dev loss {:.5} acc {:.4}",
            r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy
        );
    })?;
    eprintln!(
        "[train-classifier] best epoch {}{}",
        log.best_epoch,
        if log.stopped_early { " (stopped early)" } else { "" }
    );
    write_bytes_atomic(&args.output, &model_io::encode(&model))
}

fn prediction_row(id: &str, p: &Prediction) -> String {
    let [a, b, c] = p.probabilities;
    format!("{id}\t{}\t{a:.6}\t{b:.6}\t{c:.6}\t{}", p.label, u8::from(p.empty_input))
}

const PREDICTION_HEADER: &str = "id\tlabel\tpositive\tneutral\tnegative\tempty_input";

/// Splits `id<TAB>text` or `id<TAB>label<TAB>text` rows.
fn read_prediction_inputs(path: &Path) -> Result<Vec<(String, String)>> {
    let raw = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows = Vec::new();
    for (n, line) in raw.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || (n == 0 && line.starts_with("id\t")) {
            continue;
        }
        let cols: Vec<&str> = line.splitn(3, '\t').collect();
        let text = match cols.as_slice() {
            [_, label, text] if label.parse::<classifier::SentimentLabel>().is_ok() => text.to_string(),
            [_, rest @ ..] if !rest.is_empty() => rest.join("\t"),
            _ => {
                return Err(csembed::Error::Invalid(format!(
                    "{}:{}: expected id<TAB>text",
                    path.display(),
                    n + 1
                ))
                .into())
            }
        };
        rows.push((cols[0].to_owned(), text));
    }
    Ok(rows)
}

fn predict(args: &PredictArgs) -> Result<()> {
    let text_mode = args.text.is_some() && args.input.is_none() && args.output.is_none();
    let file_mode = args.text.is_none() && args.input.is_some() && args.output.is_some();
    if !text_mode && !file_mode {
        return Err(UsageError("predict needs either --text or both --input and --output".into()).into());
    }
    let model: BiLstmModel<f32> = model_io::load_model(&args.model)?;
    let pre = args.text_args.preprocessor()?;
    match (&args.text, &args.input, &args.output) {
        (Some(text), None, None) => {
            let p = classifier::predict(&model, text, &pre);
            if p.empty_input {
                eprintln!("[predict] text has no tokens after preprocessing; all-padding prediction");
            }
            println!("{PREDICTION_HEADER}");
            println!("{}", prediction_row("-", &p));
            Ok(())
        }
        (None, Some(input), Some(output)) => {
            let rows = read_prediction_inputs(input)?;
            let tokens: Vec<Vec<String>> = rows
                .iter()
                .map(|(_, text)| pre.tokens(text).into_iter().map(|t| t.text).collect())
                .collect();
            let preds = classifier::predict_tokens(&model, &tokens);
            let empty = preds.iter().filter(|p| p.empty_input).count();
            if empty > 0 {
                eprintln!("[predict] {empty} inputs have no tokens after preprocessing");
            }
            write_atomic(output, |w| {
                writeln!(w, "{PREDICTION_HEADER}")?;
                for ((id, _), p) in rows.iter().zip(&preds) {
                    writeln!(w, "{}", prediction_row(id, p))?;
                }
                Ok(())
            })
        }
        _ => unreachable!("checked above"),
    }
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let format: ReportFormat = args.format.parse()?;
    let (golds, preds) = evaluation::load_evaluation_pairs(&args.gold, args.pred.as_deref())?;
    let report = evaluation::metrics(&evaluation::confusion(&golds, &preds)?)?;
    for c in &report.classes {
        if c.precision_undefined || c.recall_undefined {
            eprintln!("[evaluate] warning: undefined metric for class {} set to 0", c.label);
        }
    }
    let rendered = evaluation::render(&report, format);
    match &args.output {
        Some(path) => write_bytes_atomic(path, rendered.as_bytes()),
        None => {
            std::io::stdout().lock().write_all(rendered.as_bytes())?;
            Ok(())
        }
    }
}

fn version() {
    println!("csembed {}", env!("CARGO_PKG_VERSION"));
    println!(
        "model format: {} v{}",
        String::from_utf8_lossy(model_io::MAGIC),
        model_io::VERSION
    );
    println!(
        "build: {} {}-{}",
        if cfg!(debug_assertions) { "debug" } else { "release" },
        std::env::consts::ARCH,
        std::env::consts::OS
    );
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.workers {
        if n == 0 {
            return Err(UsageError("--workers must be at least 1".into()).into());
        }
        // Only the classifier uses the shared pool; its results do not
        // depend on the thread count.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Preprocess(a) => preprocess(a),
        Command::TrainEmbeddings(a) => train_embeddings(&cli.global, a),
        Command::Explore(a) => explore(a),
        Command::TrainClassifier(a) => train_classifier(&cli.global, a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Version => {
            version();
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        return 1;
    }
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<csembed::Error>())
        .any(csembed::Error::is_numerical);
    if numerical {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
