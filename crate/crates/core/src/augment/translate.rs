use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{Caption, CaptionSource, Corpus, ImageRecord};
use crate::error::{Error, Result};
use crate::tokenize;

pub const SOURCE_LANGUAGE: &str = "en";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranslateError {
    /// Worth retrying: timeouts, connection failures, 429 and 5xx responses.
    Transient(String),
    Permanent(String),
}

impl fmt::Display for TranslateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranslateError::Transient(msg) => write!(f, "transient: {msg}"),
            TranslateError::Permanent(msg) => f.write_str(msg),
        }
    }
}

pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, TranslateError>;
}

/// A round trip from English through `hops` and back to English.
pub struct TranslationChain {
    hops: Vec<String>,
    translator: Box<dyn Translator>,
}

impl fmt::Debug for TranslationChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TranslationChain")
            .field("hops", &self.hops)
            .finish_non_exhaustive()
    }
}

/// English → Spanish → German → French → English.
pub const DEFAULT_HOPS: [&str; 3] = ["es", "de", "fr"];

impl TranslationChain {
    pub fn new<S: AsRef<str>>(hops: &[S], translator: Box<dyn Translator>) -> Result<Self> {
        let hops: Vec<String> = hops
            .iter()
            .map(|h| h.as_ref().trim().to_lowercase())
            .collect();
        if hops.is_empty() {
            return Err(Error::Config("translation chain has no hops".into()));
        }
        if hops.iter().any(String::is_empty) {
            return Err(Error::Config("empty language code in chain".into()));
        }
        let full: Vec<&str> = std::iter::once(SOURCE_LANGUAGE)
            .chain(hops.iter().map(String::as_str))
            .chain(std::iter::once(SOURCE_LANGUAGE))
            .collect();
        if let Some(pair) = full.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!(
                "chain repeats {:?} on consecutive hops",
                pair[0]
            )));
        }
        Ok(TranslationChain { hops, translator })
    }

    /// Parses a comma-separated hop list such as `es,de,fr`.
    pub fn parse(list: &str, translator: Box<dyn Translator>) -> Result<Self> {
        let hops: Vec<&str> = list.split(',').collect();
        Self::new(&hops, translator)
    }

    pub fn hops(&self) -> &[String] {
        &self.hops
    }

    fn run(&self, text: &str, options: &BackTranslateOptions) -> Result<String, TranslateError> {
        let mut current = text.to_string();
        let mut source = SOURCE_LANGUAGE;
        for target in self
            .hops
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(SOURCE_LANGUAGE))
        {
            current = with_retry(options, || {
                self.translator.translate(&current, source, target)
            })?;
            source = target;
        }
        Ok(current)
    }
}

fn with_retry<F>(options: &BackTranslateOptions, mut call: F) -> Result<String, TranslateError>
where
    F: FnMut() -> Result<String, TranslateError>,
{
    let mut attempt = 0;
    loop {
        match call() {
            Err(TranslateError::Transient(msg)) if attempt < options.max_retries => {
                let delay = options.initial_backoff.saturating_mul(1 << attempt.min(16));
                log::debug!("retrying after {delay:?}: {msg}");
                std::thread::sleep(delay);
                attempt += 1;
            }
            other => return other,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BackTranslateOptions {
    /// Upper bound on in-flight translation requests.
    pub concurrency: usize,
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further attempt.
    pub initial_backoff: Duration,
}

impl Default for BackTranslateOptions {
    fn default() -> Self {
        BackTranslateOptions {
            concurrency: 4,
            max_retries: 3,
            initial_backoff: Duration::from_millis(200),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaptionFailure {
    pub image_id: String,
    pub caption_index: usize,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct BackTranslated {
    pub corpus: Corpus,
    pub variants_added: usize,
    pub failures: Vec<CaptionFailure>,
}

/// Sends every caption around the chain and appends the result as a new
/// caption of the same image unless it normalizes to the original.
///
/// Identical caption texts are translated once. A caption whose round trip
/// fails keeps its original and is listed in `failures`; the call only fails
/// when every caption failed.
pub fn back_translate(
    corpus: &Corpus,
    chain: &TranslationChain,
    options: &BackTranslateOptions,
) -> Result<BackTranslated> {
    let mut distinct: Vec<&str> = Vec::new();
    let mut slot_of: HashMap<&str, usize> = HashMap::new();
    for caption in corpus.captions() {
        slot_of.entry(caption.raw.as_str()).or_insert_with(|| {
            distinct.push(caption.raw.as_str());
            distinct.len() - 1
        });
    }

    let translated = translate_all(&distinct, chain, options);

    if !translated.is_empty() && translated.iter().all(|r| r.is_err()) {
        let first = translated[0].as_ref().unwrap_err();
        return Err(Error::Translation(format!(
            "all {} distinct captions failed; first error: {first}",
            translated.len()
        )));
    }

    let mut failures = Vec::new();
    let mut variants_added = 0;
    let mut records = Vec::with_capacity(corpus.len());
    for record in corpus.records() {
        let mut variants = Vec::new();
        for (idx, caption) in record.captions.iter().enumerate() {
            match &translated[slot_of[caption.raw.as_str()]] {
                Ok(text) => {
                    if !text.trim().is_empty()
                        && tokenize::normalize(text) != tokenize::normalize(&caption.raw)
                    {
                        variants.push(Caption {
                            image_id: record.image_id.clone(),
                            raw: text.clone(),
                            source: CaptionSource::Augmented,
                        });
                    }
                }
                Err(err) => failures.push(CaptionFailure {
                    image_id: record.image_id.clone(),
                    caption_index: idx,
                    error: err.to_string(),
                }),
            }
        }
        variants_added += variants.len();
        let mut captions = record.captions.clone();
        captions.extend(variants);
        records.push(ImageRecord {
            captions,
            ..record.clone()
        });
    }

    Ok(BackTranslated {
        corpus: Corpus::new(records, format!("{}-backtranslated", corpus.provenance()))?,
        variants_added,
        failures,
    })
}

fn translate_all(
    texts: &[&str],
    chain: &TranslationChain,
    options: &BackTranslateOptions,
) -> Vec<Result<String, TranslateError>> {
    let workers = options.concurrency.clamp(1, texts.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some(text) = texts.get(idx) else { break };
                if tx.send((idx, chain.run(text, options))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);

    let mut results: Vec<Option<Result<String, TranslateError>>> = vec![None; texts.len()];
    for (idx, result) in rx {
        results[idx] = Some(result);
    }
    results
        .into_iter()
        .map(|r| r.expect("every caption is translated"))
        .collect()
}

/// Returns its input unchanged for every language pair.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn translate(&self, text: &str, _: &str, _: &str) -> Result<String, TranslateError> {
        Ok(text.to_string())
    }
}

// English, Spanish, German, French.
const LEXICON: &[[&str; 4]] = &[
    ["aircraft", "aviones", "flugzeuge", "avions"],
    ["airport", "aeropuerto", "flughafen", "aéroport"],
    ["and", "y", "und", "et"],
    ["beach", "playa", "strand", "plage"],
    ["behind", "detrás", "hinter", "derrière"],
    ["bridge", "puente", "brücke", "pont"],
    ["building", "edificio", "haus", "bâtiment"],
    ["buildings", "edificios", "gebäude", "bâtiments"],
    ["bus", "autobús", "bus", "bus"],
    ["desert", "desierto", "wüste", "désert"],
    ["forest", "bosque", "wald", "forêt"],
    ["green", "verdes", "grüne", "verts"],
    ["island", "isla", "insel", "île"],
    ["many", "muchos", "viele", "nombreux"],
    ["near", "cerca", "nahe", "près"],
    ["parked", "estacionados", "geparkt", "garés"],
    ["port", "puerto", "hafen", "port"],
    ["railway", "ferrocarril", "eisenbahn", "ferroviaire"],
    ["river", "río", "fluss", "rivière"],
    ["road", "carretera", "straße", "route"],
    ["school", "escuela", "schule", "école"],
    ["sea", "mar", "meer", "mer"],
    ["several", "varios", "mehrere", "plusieurs"],
    ["some", "algunos", "einige", "quelques"],
    ["stadium", "estadio", "stadion", "stade"],
    ["station", "estación", "bahnhof", "gare"],
    ["tree", "árbol", "baum", "arbre"],
    ["trees", "árboles", "bäume", "arbres"],
    ["waves", "olas", "wellen", "vagues"],
    ["white", "blanca", "weiß", "blanche"],
    ["with", "con", "mit", "avec"],
    ["yellow", "amarilla", "gelb", "jaune"],
];

// English words that share a translation with a LEXICON entry.
const ALIASES: &[(&str, &str)] = &[
    ("planes", "aircraft"),
    ("airplanes", "aircraft"),
    ("plane", "aircraft"),
];

// Applied to English output, longest patterns first.
const SIMPLIFICATIONS: &[(&[&str], &[&str])] = &[
    (
        &["in", "two", "sides", "of"],
        &["on", "both", "sides", "of"],
    ),
    (&["a", "lot", "of"], &["many"]),
    (&["lots", "of"], &["many"]),
    (&["next", "to"], &["near"]),
];

/// Offline stand-in for a translation service.
///
/// Swaps words through a small caption-domain lexicon for `es`, `de` and
/// `fr`, leaves unknown words untouched, and simplifies a few multi-word
/// English phrases on the way back to English. Some English words share a
/// translation (`planes` and `aircraft`), so round trips can be lossy.
#[derive(Debug, Clone)]
pub struct MockTranslator {
    forward: HashMap<&'static str, [&'static str; 4]>,
    reverse: [HashMap<&'static str, &'static str>; 4],
}

impl Default for MockTranslator {
    fn default() -> Self {
        let mut forward = HashMap::new();
        let mut reverse: [HashMap<&str, &str>; 4] = Default::default();
        for row in LEXICON {
            forward.insert(row[0], *row);
            for (lang, word) in row.iter().enumerate() {
                reverse[lang].insert(*word, row[0]);
            }
        }
        for (alias, canonical) in ALIASES {
            let row = forward[canonical];
            forward.insert(alias, row);
        }
        MockTranslator { forward, reverse }
    }
}

fn lang_index(code: &str) -> Option<usize> {
    match code {
        "en" => Some(0),
        "es" => Some(1),
        "de" => Some(2),
        "fr" => Some(3),
        _ => None,
    }
}

fn capitalize_like(template: &str, word: &str) -> String {
    if template.chars().next().is_some_and(char::is_uppercase) {
        let mut chars = word.chars();
        match chars.next() {
            Some(first) => first.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    } else {
        word.to_string()
    }
}

struct Word {
    lead: String,
    core: String,
    trail: String,
}

fn split_word(word: &str) -> Word {
    let core_start = word.find(char::is_alphanumeric).unwrap_or(word.len());
    let core_end = word
        .rfind(char::is_alphanumeric)
        .map(|i| i + word[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(core_start);
    let core_end = core_end.max(core_start);
    Word {
        lead: word[..core_start].to_string(),
        core: word[core_start..core_end].to_string(),
        trail: word[core_end..].to_string(),
    }
}

impl MockTranslator {
    fn to_english(&self, lang: usize, lower: &str) -> Option<&'static str> {
        if lang == 0 {
            self.forward.get(lower).map(|row| row[0])
        } else {
            self.reverse[lang].get(lower).copied()
        }
    }

    fn simplify(words: Vec<Word>) -> Vec<Word> {
        let mut out: Vec<Word> = Vec::with_capacity(words.len());
        let mut i = 0;
        'outer: while i < words.len() {
            for (pattern, replacement) in SIMPLIFICATIONS {
                let end = i + pattern.len();
                if end > words.len() {
                    continue;
                }
                let window = &words[i..end];
                let plain = window.iter().enumerate().all(|(j, w)| {
                    (j == 0 || w.lead.is_empty()) && (j + 1 == window.len() || w.trail.is_empty())
                });
                if plain
                    && window
                        .iter()
                        .zip(pattern.iter())
                        .all(|(w, p)| w.core.to_lowercase() == *p)
                {
                    for (j, rep) in replacement.iter().enumerate() {
                        let core = if j == 0 {
                            capitalize_like(&window[0].core, rep)
                        } else {
                            rep.to_string()
                        };
                        out.push(Word {
                            lead: if j == 0 {
                                window[0].lead.clone()
                            } else {
                                String::new()
                            },
                            core,
                            trail: if j + 1 == replacement.len() {
                                window[window.len() - 1].trail.clone()
                            } else {
                                String::new()
                            },
                        });
                    }
                    i = end;
                    continue 'outer;
                }
            }
            let w = &words[i];
            out.push(Word {
                lead: w.lead.clone(),
                core: w.core.clone(),
                trail: w.trail.clone(),
            });
            i += 1;
        }
        out
    }
}

impl Translator for MockTranslator {
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, TranslateError> {
        let (Some(src), Some(dst)) = (lang_index(source), lang_index(target)) else {
            return Err(TranslateError::Permanent(format!(
                "mock translator does not support {source}->{target}"
            )));
        };
        let mut words: Vec<Word> = text
            .split_whitespace()
            .map(|raw| {
                let mut word = split_word(raw);
                let lower = word.core.to_lowercase();
                if let Some(english) = self.to_english(src, &lower) {
                    let translated = self.forward[english][dst];
                    word.core = capitalize_like(&word.core, translated);
                }
                word
            })
            .collect();
        if dst == 0 {
            words = Self::simplify(words);
        }
        Ok(words
            .iter()
            .map(|w| format!("{}{}{}", w.lead, w.core, w.trail))
            .collect::<Vec<_>>()
            .join(" "))
    }
}

#[derive(Debug, Clone)]
pub struct HttpTranslatorConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

#[derive(Debug, Serialize)]
struct TranslateRequest<'a> {
    q: &'a str,
    source: &'a str,
    target: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    api_key: Option<&'a str>,
}

#[derive(Debug, Deserialize)]
struct TranslateResponse {
    #[serde(rename = "translatedText")]
    translated_text: String,
}

/// Client for a JSON translation endpoint:
/// `POST {"q", "source", "target", "api_key"?}` → `{"translatedText"}`.
pub struct HttpTranslator {
    agent: ureq::Agent,
    config: HttpTranslatorConfig,
}

/// Environment variable holding the translation API key.
pub const API_KEY_ENV: &str = "CAPTEXT_TRANSLATE_API_KEY";

impl HttpTranslator {
    pub fn new(config: HttpTranslatorConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        HttpTranslator { agent, config }
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, TranslateError> {
        let request = TranslateRequest {
            q: text,
            source,
            target,
            api_key: self.config.api_key.as_deref(),
        };
        let response = self
            .agent
            .post(&self.config.endpoint)
            .send_json(&request)
            .map_err(|err| match err {
                ureq::Error::StatusCode(code) if code == 429 || code >= 500 => {
                    TranslateError::Transient(format!("HTTP {code}"))
                }
                ureq::Error::StatusCode(code) => TranslateError::Permanent(format!("HTTP {code}")),
                other => TranslateError::Transient(other.to_string()),
            })?;
        let body: TranslateResponse = response
            .into_body()
            .read_json()
            .map_err(|e| TranslateError::Permanent(format!("bad response body: {e}")))?;
        Ok(body.translated_text)
    }
}
