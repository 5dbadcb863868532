//! The `captext` command line.
//!
//! Reports go to standard output (or `--out`) as pretty JSON. Exit codes:
//! 0 on success, 1 when `validate --strict` finds problems, 2 on usage,
//! configuration, parse or I/O errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::augment::{
    self, BackTranslateOptions, CorrectionRules, Thesaurus, TranslationChain, Translator,
};
use crate::bleu;
use crate::confusion::{self, MatchOptions, SceneKeywords};
use crate::corpus::{self, CaptionFormat, Corpus};
use crate::discover::{self, InvertedIndex};
use crate::error::{Error, Result};
use crate::readability;
use crate::tokenize;
use crate::vocabstats;

const CAPTIONS_SCHEMA: &str = "\
Caption inputs:
  *.json   RSICD layout: {\"images\": [{\"filename\": str, \"split\": str,
           \"sentences\": [{\"raw\": str}, ...], \"class\": str?}]}
  *.jsonl  one image per line: {\"image_id\": str, \"split\": str?,
           \"scene\": str?, \"captions\": [str, ...]}";

#[derive(Debug, Parser)]
#[command(
    name = "captext",
    version,
    about = "Caption corpus profiling, augmentation and evaluation"
)]
struct Cli {
    /// Worker threads for parallel statistics and translation requests.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a caption file and re-emit it as normalized JSONL.
    #[command(after_help = CAPTIONS_SCHEMA)]
    Ingest(IngestArgs),
    /// Report duplicate ids, empty captions and (with --strict) records
    /// without exactly five captions.
    #[command(after_help = CAPTIONS_SCHEMA)]
    Validate(ValidateArgs),
    /// Vocabulary profile: frequencies, coverage, hapax and duplicate counts.
    #[command(after_help = CAPTIONS_SCHEMA)]
    Stats(StatsArgs),
    /// Readability panel (words, sentences, syllables, Fog, Flesch, FK).
    #[command(after_help = CAPTIONS_SCHEMA)]
    Readability(ReadabilityArgs),
    /// Corpus BLEU-1..4 of predictions against reference captions.
    #[command(after_help = BLEU_SCHEMA)]
    Bleu(BleuArgs),
    /// Derive a new corpus: correct, synonym or backtranslate.
    #[command(subcommand)]
    Augment(AugmentCommand),
    /// Cross-tabulate scene keywords in predictions against scene labels.
    #[command(after_help = "\
Inputs:
  --predictions  JSONL {\"image_id\": str, \"caption\": str}
  --labels       JSONL {\"image_id\": str, \"scene\": str, \"objects\": [str, ...]}
  --scenes       TSV scene<TAB>trigger1,trigger2,... (default: label scenes)
  --attributes   one attribute token per line")]
    ScoreConfusion(ConfusionArgs),
    /// Build or query an inverted keyword index.
    #[command(subcommand)]
    Index(IndexCommand),
}

const BLEU_SCHEMA: &str = "\
Predictions: JSONL, one {\"image_id\": str, \"caption\": str} per line.
References: a caption file (*.json RSICD layout or *.jsonl captions layout);
every caption of an image is a reference for that image's prediction.";

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    RsicdJson,
    Jsonl,
}

#[derive(Debug, Args)]
struct CaptionInput {
    /// Caption file.
    #[arg(long, value_name = "PATH")]
    captions: PathBuf,
    /// Caption file layout; `auto` picks RSICD JSON for `.json` files.
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
}

impl CaptionInput {
    fn caption_format(&self) -> CaptionFormat {
        resolve_format(self.format, &self.captions)
    }

    fn load(&self) -> Result<Corpus> {
        corpus::ingest_captions(&self.captions, self.caption_format())
    }
}

fn resolve_format(format: FormatArg, path: &Path) -> CaptionFormat {
    match format {
        FormatArg::Auto => CaptionFormat::from_path(path),
        FormatArg::RsicdJson => CaptionFormat::RsicdJson,
        FormatArg::Jsonl => CaptionFormat::Jsonl,
    }
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    input: CaptionInput,
    /// Output JSONL path (default: standard output).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: CaptionInput,
    /// Require exactly five captions per image; findings exit with status 1.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    input: CaptionInput,
    /// Coverage of the k most frequent tokens.
    #[arg(long, default_value_t = 30)]
    top_k: usize,
    /// Also write the rank,token,count,cumulative_fraction table here.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReadabilityArgs {
    #[command(flatten)]
    input: CaptionInput,
    /// Further caption files to report side by side.
    #[arg(long, value_name = "PATH")]
    compare: Vec<PathBuf>,
    /// Print an aligned text table instead of JSON.
    #[arg(long)]
    table: bool,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BleuArgs {
    /// Generated captions.
    #[arg(long, value_name = "PATH")]
    predictions: PathBuf,
    /// Reference captions.
    #[arg(long, value_name = "PATH")]
    references: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// Write per-image sentence-level scores as CSV.
    #[arg(long, value_name = "PATH")]
    per_image: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum AugmentCommand {
    /// Merge split words, apply overrides, fix misspellings, prune duplicates.
    #[command(after_help = "\
Inputs:
  --dictionary  one lower-case word per line
  --rules       TSV bigram<TAB>replacement, e.g. \"c shape\\tc-shaped\"
  --overrides   TSV misspelled<TAB>replacement")]
    Correct(CorrectArgs),
    /// Append one synonym variant per distinct caption.
    #[command(after_help = "Thesaurus: TSV word<TAB>syn1,syn2,...")]
    Synonym(SynonymArgs),
    /// Append back-translated variants via a chain of pivot languages.
    #[command(after_help = "\
Remote endpoint contract: POST {\"q\", \"source\", \"target\", \"api_key\"?}
returning {\"translatedText\"}. The API key is read from CAPTEXT_TRANSLATE_API_KEY.")]
    Backtranslate(BacktranslateArgs),
}

#[derive(Debug, Args)]
struct CorrectArgs {
    #[command(flatten)]
    input: CaptionInput,
    #[arg(long, value_name = "PATH")]
    dictionary: PathBuf,
    /// Bigram merge rules.
    #[arg(long, value_name = "PATH")]
    rules: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    overrides: Option<PathBuf>,
    /// Drop captions whose normalized text already appeared.
    #[arg(long)]
    prune: bool,
    /// Write the correction log as JSON.
    #[arg(long, value_name = "PATH")]
    log: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynonymArgs {
    #[command(flatten)]
    input: CaptionInput,
    #[arg(long, value_name = "PATH")]
    thesaurus: PathBuf,
    /// Random seed (required for reproducibility).
    #[arg(long)]
    seed: u64,
    /// Maximum tokens replaced per variant.
    #[arg(long, default_value_t = 1)]
    replacements: usize,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MockKind {
    Lexicon,
    Identity,
}

#[derive(Debug, Args)]
struct BacktranslateArgs {
    #[command(flatten)]
    input: CaptionInput,
    /// Pivot languages, in order.
    #[arg(long, default_value = "es,de,fr")]
    chain: String,
    /// Use the offline translator instead of a remote endpoint.
    #[arg(long, value_enum, num_args = 0..=1, default_missing_value = "lexicon", conflicts_with = "endpoint")]
    mock: Option<MockKind>,
    /// Translation endpoint URL.
    #[arg(long, value_name = "URL")]
    endpoint: Option<String>,
    #[arg(long, default_value_t = 10_000, value_name = "MS")]
    timeout_ms: u64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    #[arg(long, default_value_t = 200, value_name = "MS")]
    backoff_ms: u64,
    /// Concurrent requests (default: --jobs, else 4).
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConfusionArgs {
    #[arg(long, value_name = "PATH")]
    predictions: PathBuf,
    #[arg(long, value_name = "PATH")]
    labels: PathBuf,
    #[arg(long, value_name = "PATH")]
    scenes: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    attributes: Option<PathBuf>,
    /// Match trigger words exactly, without folding a plural `s`.
    #[arg(long)]
    exact: bool,
    /// Directory for CSV and JSON exports.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum IndexCommand {
    /// Index captions (or predictions) by token.
    #[command(after_help = "\
Index file: {\"version\": 1, \"doc_count\": N, \"postings\": {token: [image_id, ...]}}")]
    Build(IndexBuildArgs),
    /// Print ids whose captions contain every term, one per line.
    Query(IndexQueryArgs),
}

#[derive(Debug, Args)]
struct IndexBuildArgs {
    #[arg(long, value_name = "PATH", required_unless_present = "predictions")]
    captions: Option<PathBuf>,
    #[arg(long, value_name = "PATH", conflicts_with = "captions")]
    predictions: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct IndexQueryArgs {
    #[arg(long, value_name = "PATH")]
    index: PathBuf,
    #[arg(required = true)]
    terms: Vec<String>,
}

/// Runs the CLI with real standard streams and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let rendered = err.render().to_string();
            if err.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                return 2;
            }
            let _ = write!(stdout, "{rendered}");
            return 0;
        }
    };

    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }

    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            2
        }
    }
}

fn emit(bytes: &[u8], out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Error::io(path, e)),
        None => stdout
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(text.as_bytes(), out, stdout)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Ingest(args) => {
            let corpus = args.input.load()?;
            emit(corpus.to_jsonl().as_bytes(), args.out.as_deref(), stdout)?;
        }
        Command::Validate(args) => return validate(args, stdout),
        Command::Stats(args) => stats(args, stdout)?,
        Command::Readability(args) => readability_cmd(args, stdout)?,
        Command::Bleu(args) => bleu_cmd(args, stdout)?,
        Command::Augment(cmd) => augment_cmd(cmd, cli.jobs, stdout)?,
        Command::ScoreConfusion(args) => confusion_cmd(args, stdout)?,
        Command::Index(cmd) => index_cmd(cmd, stdout)?,
    }
    Ok(0)
}

#[derive(Serialize)]
struct ValidationOutput {
    records: usize,
    strict: bool,
    findings: Vec<corpus::Finding>,
}

fn validate(args: &ValidateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let records = corpus::read_records(&args.input.captions, args.input.caption_format())?;
    let findings = corpus::validate_records(&records, args.strict);
    let failed = args.strict && !findings.is_empty();
    emit_json(
        &ValidationOutput {
            records: records.len(),
            strict: args.strict,
            findings,
        },
        args.out.as_deref(),
        stdout,
    )?;
    Ok(if failed { 1 } else { 0 })
}

#[derive(Serialize)]
struct StatsOutput {
    provenance: String,
    records: usize,
    duplicate_rate: f64,
    hapax_ratio: f64,
    top_k: vocabstats::Coverage,
    profile: vocabstats::VocabularyProfile,
}

fn stats(args: &StatsArgs, stdout: &mut dyn Write) -> Result<()> {
    let corpus = args.input.load()?;
    let profile = vocabstats::profile(&corpus)?;
    if let Some(path) = &args.csv {
        profile.export_csv(path)?;
    }
    let output = StatsOutput {
        provenance: corpus.provenance().to_string(),
        records: corpus.len(),
        duplicate_rate: profile.duplicate_rate(),
        hapax_ratio: profile.hapax_ratio(),
        top_k: profile.top_k_coverage(args.top_k)?,
        profile,
    };
    emit_json(&output, args.out.as_deref(), stdout)
}

#[derive(Serialize)]
struct ReadabilityColumn {
    corpus: String,
    report: readability::ReadabilityReport,
}

fn readability_cmd(args: &ReadabilityArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut columns = Vec::new();
    let paths = std::iter::once(&args.input.captions).chain(&args.compare);
    for path in paths {
        let corpus = corpus::ingest_captions(path, resolve_format(args.input.format, path))?;
        columns.push((
            corpus.provenance().to_string(),
            readability::report(&corpus)?,
        ));
    }
    if args.table {
        let table = readability::comparison_table(&columns);
        return emit(table.as_bytes(), args.out.as_deref(), stdout);
    }
    let columns: Vec<ReadabilityColumn> = columns
        .into_iter()
        .map(|(corpus, report)| ReadabilityColumn { corpus, report })
        .collect();
    emit_json(&columns, args.out.as_deref(), stdout)
}

#[derive(Serialize)]
struct BleuOutput {
    #[serde(flatten)]
    summary: bleu::BleuSummary,
    images: usize,
    missing_references: Vec<String>,
}

fn bleu_cmd(args: &BleuArgs, stdout: &mut dyn Write) -> Result<()> {
    let predictions = corpus::ingest_predictions(&args.predictions)?;
    let references = corpus::ingest_captions(
        &args.references,
        resolve_format(args.format, &args.references),
    )?;
    let by_id: BTreeMap<&str, Vec<Vec<String>>> = references
        .records()
        .iter()
        .map(|r| {
            let refs = r
                .captions
                .iter()
                .map(|c| tokenize::tokens(&c.raw))
                .collect();
            (r.image_id.as_str(), refs)
        })
        .collect();

    let mut ids = Vec::new();
    let mut candidates = Vec::new();
    let mut refs = Vec::new();
    let mut missing = Vec::new();
    for (id, caption) in &predictions.entries {
        match by_id.get(id.as_str()) {
            Some(r) => {
                ids.push(id.clone());
                candidates.push(tokenize::tokens(caption));
                refs.push(r.clone());
            }
            None => missing.push(id.clone()),
        }
    }
    if !missing.is_empty() {
        log::warn!("{} predictions have no reference captions", missing.len());
    }

    let result = bleu::bleu_score(&candidates, &refs)?;

    if let Some(path) = &args.per_image {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "image_id",
            "bleu1",
            "bleu2",
            "bleu3",
            "bleu4",
            "bp",
            "vanished_order",
        ])?;
        for ((id, cand), r) in ids.iter().zip(&candidates).zip(&refs) {
            let s = bleu::sentence_bleu(cand, r)?;
            let vanished = s
                .vanished_order()
                .map(|o| o.to_string())
                .unwrap_or_default();
            w.serialize((
                id,
                s.bleu[0],
                s.bleu[1],
                s.bleu[2],
                s.bleu[3],
                s.brevity_penalty,
                vanished,
            ))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }

    emit_json(
        &BleuOutput {
            summary: result.summary(),
            images: ids.len(),
            missing_references: missing,
        },
        args.out.as_deref(),
        stdout,
    )
}

fn augment_cmd(cmd: &AugmentCommand, jobs: Option<usize>, stdout: &mut dyn Write) -> Result<()> {
    match cmd {
        AugmentCommand::Correct(args) => {
            let corpus = args.input.load()?;
            let rules = CorrectionRules::load(
                &args.dictionary,
                args.rules.as_deref(),
                args.overrides.as_deref(),
            )?;
            let corrected = augment::correct(&corpus, &rules, args.prune)?;
            if let Some(path) = &args.log {
                let json = serde_json::to_string_pretty(&corrected.log)? + "\n";
                fs::write(path, json).map_err(|e| Error::io(path, e))?;
            }
            emit(
                corrected.corpus.to_jsonl().as_bytes(),
                args.out.as_deref(),
                stdout,
            )
        }
        AugmentCommand::Synonym(args) => {
            let corpus = args.input.load()?;
            let thesaurus = Thesaurus::load(&args.thesaurus)?;
            let expanded =
                augment::synonym_expand(&corpus, &thesaurus, args.replacements, args.seed)?;
            emit(expanded.to_jsonl().as_bytes(), args.out.as_deref(), stdout)
        }
        AugmentCommand::Backtranslate(args) => {
            let corpus = args.input.load()?;
            let translator: Box<dyn Translator> = match (&args.mock, &args.endpoint) {
                (Some(MockKind::Lexicon), _) => Box::new(augment::MockTranslator::default()),
                (Some(MockKind::Identity), _) => Box::new(augment::IdentityTranslator),
                (None, Some(endpoint)) => Box::new(augment::HttpTranslator::new(
                    augment::HttpTranslatorConfig {
                        endpoint: endpoint.clone(),
                        api_key: std::env::var(augment::API_KEY_ENV)
                            .ok()
                            .filter(|k| !k.is_empty()),
                        timeout: Duration::from_millis(args.timeout_ms),
                    },
                )),
                (None, None) => {
                    return Err(Error::Config(
                        "backtranslate needs --endpoint URL or --mock".into(),
                    ))
                }
            };
            let chain = TranslationChain::parse(&args.chain, translator)?;
            let options = BackTranslateOptions {
                concurrency: args.concurrency.or(jobs).unwrap_or(4).max(1),
                max_retries: args.retries,
                initial_backoff: Duration::from_millis(args.backoff_ms),
            };
            let result = augment::back_translate(&corpus, &chain, &options)?;
            for failure in &result.failures {
                log::warn!(
                    "{} caption {}: {}",
                    failure.image_id,
                    failure.caption_index,
                    failure.error
                );
            }
            emit(
                result.corpus.to_jsonl().as_bytes(),
                args.out.as_deref(),
                stdout,
            )
        }
    }
}

fn confusion_cmd(args: &ConfusionArgs, stdout: &mut dyn Write) -> Result<()> {
    let predictions = corpus::ingest_predictions(&args.predictions)?;
    let labels = corpus::ingest_labels(&args.labels)?;
    let scenes = match &args.scenes {
        Some(path) => SceneKeywords::load(path)?,
        None => SceneKeywords::from_labels(&labels),
    };
    let attributes = match &args.attributes {
        Some(path) => confusion::load_attributes(path)?,
        None => Vec::new(),
    };
    let options = MatchOptions {
        fold_plural: !args.exact,
    };
    let report = confusion::evaluate(&predictions, &labels, &scenes, &attributes, &options)?;
    if let Some(dir) = &args.out {
        report.export(dir)?;
    }
    emit_json(&report, None, stdout)
}

fn index_cmd(cmd: &IndexCommand, stdout: &mut dyn Write) -> Result<()> {
    match cmd {
        IndexCommand::Build(args) => {
            let documents = match (&args.captions, &args.predictions) {
                (Some(path), _) => {
                    let corpus = corpus::ingest_captions(path, resolve_format(args.format, path))?;
                    discover::documents_from_corpus(&corpus)
                }
                (None, Some(path)) => {
                    discover::documents_from_predictions(&corpus::ingest_predictions(path)?)
                }
                (None, None) => {
                    return Err(Error::Config(
                        "index build needs --captions or --predictions".into(),
                    ))
                }
            };
            discover::build_index(&documents).save(&args.out)
        }
        IndexCommand::Query(args) => {
            let index = InvertedIndex::load(&args.index)?;
            let mut out = String::new();
            for id in index.query(&args.terms)? {
                out.push_str(&id);
                out.push('\n');
            }
            emit(out.as_bytes(), None, stdout)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(
            std::iter::once("captext").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = run_capture(&["stats", "--bogus"]);
        assert_eq!(code, 2);
        assert!(err.contains("--bogus"));
    }

    #[test]
    fn help_names_schema() {
        let (code, out, _) = run_capture(&["stats", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"captions\": [str, ...]"));
        let (_, out, _) = run_capture(&["score-confusion", "--help"]);
        assert!(out.contains("\"objects\""));
    }

    #[test]
    fn missing_file_exits_2() {
        let (code, _, err) = run_capture(&["stats", "--captions", "/nonexistent/x.jsonl"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn synonym_requires_seed() {
        let (code, _, _) = run_capture(&[
            "augment",
            "synonym",
            "--captions",
            "a.jsonl",
            "--thesaurus",
            "t.tsv",
        ]);
        assert_eq!(code, 2);
    }
}
