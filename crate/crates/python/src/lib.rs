//! Python bindings for `captext`.
//!
//! Structured results (profiles, reports, logs) cross the boundary as plain
//! dicts and lists built from their JSON form, so field names match the CLI.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use captext::augment::{
    self, BackTranslateOptions, CorrectionRules, Thesaurus, TranslationChain, Translator,
};
use captext::confusion::{self, MatchOptions, SceneKeywords};
use captext::corpus::{
    self as core_corpus, CaptionFormat, ImageRecord, LabelRecord, PredictionSet,
};
use captext::{bleu, discover, readability, tokenize, vocabstats};

create_exception!(captext_py, CaptextError, PyValueError);

fn err(e: captext::Error) -> PyErr {
    match e {
        captext::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => CaptextError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyfunction]
fn tokens(text: &str) -> Vec<String> {
    tokenize::tokens(text)
}

#[pyfunction]
fn normalize(text: &str) -> String {
    tokenize::normalize(text)
}

#[pyfunction]
fn split_sentences(text: &str) -> Vec<String> {
    tokenize::split_sentences(text)
}

#[pyfunction]
fn count_syllables(word: &str) -> u32 {
    readability::count_syllables(word)
}

/// Fog, Flesch reading ease and Flesch-Kincaid grade from aggregate ratios.
#[pyfunction]
fn readability_from_aggregates(
    words_per_sentence: f64,
    syllables_per_word: f64,
    complex_pct: f64,
) -> (f64, f64, f64) {
    let i =
        readability::report_from_aggregates(words_per_sentence, syllables_per_word, complex_pct);
    (i.fog, i.flesch, i.fk)
}

fn tokenized(texts: &[String]) -> Vec<Vec<String>> {
    texts.iter().map(|t| tokenize::tokens(t)).collect()
}

/// Corpus BLEU-1..4: `candidates[i]` is scored against `references[i]`.
#[pyfunction]
fn corpus_bleu<'py>(
    py: Python<'py>,
    candidates: Vec<String>,
    references: Vec<Vec<String>>,
) -> PyResult<Bound<'py, PyAny>> {
    let refs: Vec<Vec<Vec<String>>> = references.iter().map(|r| tokenized(r)).collect();
    let result = bleu::bleu_score(&tokenized(&candidates), &refs).map_err(err)?;
    to_py(py, &result.summary())
}

#[pyfunction]
fn sentence_bleu<'py>(
    py: Python<'py>,
    candidate: &str,
    references: Vec<String>,
) -> PyResult<Bound<'py, PyAny>> {
    let result =
        bleu::sentence_bleu(&tokenize::tokens(candidate), &tokenized(&references)).map_err(err)?;
    to_py(py, &result.summary())
}

fn parse_format(format: Option<&str>, path: &std::path::Path) -> PyResult<CaptionFormat> {
    match format {
        None | Some("auto") => Ok(CaptionFormat::from_path(path)),
        Some("rsicd-json") => Ok(CaptionFormat::RsicdJson),
        Some("jsonl") => Ok(CaptionFormat::Jsonl),
        Some(other) => Err(PyValueError::new_err(format!(
            "unknown caption format {other:?}"
        ))),
    }
}

/// An immutable caption corpus.
#[pyclass(module = "captext_py", frozen)]
struct Corpus {
    inner: core_corpus::Corpus,
}

#[pymethods]
impl Corpus {
    /// Builds a corpus from `{image_id: [caption, ...]}` in id order.
    #[new]
    #[pyo3(signature = (captions, provenance = "python"))]
    fn new(captions: BTreeMap<String, Vec<String>>, provenance: &str) -> PyResult<Self> {
        let records = captions
            .iter()
            .map(|(id, caps)| ImageRecord::new(id, caps.iter().cloned()))
            .collect();
        let inner = core_corpus::Corpus::new(records, provenance).map_err(err)?;
        Ok(Corpus { inner })
    }

    /// Loads an RSICD-style `.json` file or a captions `.jsonl` file.
    #[staticmethod]
    #[pyo3(signature = (path, format = None))]
    fn load(path: PathBuf, format: Option<&str>) -> PyResult<Self> {
        let format = parse_format(format, &path)?;
        let inner = core_corpus::ingest_captions(&path, format).map_err(err)?;
        Ok(Corpus { inner })
    }

    #[getter]
    fn provenance(&self) -> &str {
        self.inner.provenance()
    }

    #[getter]
    fn caption_count(&self) -> usize {
        self.inner.caption_count()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus(provenance={:?}, images={}, captions={})",
            self.inner.provenance(),
            self.inner.len(),
            self.inner.caption_count()
        )
    }

    /// `{image_id: [caption, ...]}`.
    fn captions(&self) -> BTreeMap<String, Vec<String>> {
        self.inner
            .records()
            .iter()
            .map(|r| {
                (
                    r.image_id.clone(),
                    r.captions.iter().map(|c| c.raw.clone()).collect(),
                )
            })
            .collect()
    }

    fn to_jsonl(&self) -> String {
        self.inner.to_jsonl()
    }

    #[pyo3(signature = (strict = false))]
    fn validate<'py>(&self, py: Python<'py>, strict: bool) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &core_corpus::validate(&self.inner, strict))
    }

    fn profile<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &vocabstats::profile(&self.inner).map_err(err)?)
    }

    fn readability<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &readability::report(&self.inner).map_err(err)?)
    }

    /// Returns the corrected corpus and the correction log.
    #[pyo3(signature = (dictionary, merges = Vec::new(), overrides = BTreeMap::new(), prune = false))]
    fn correct<'py>(
        &self,
        py: Python<'py>,
        dictionary: BTreeSet<String>,
        merges: Vec<(String, String, String)>,
        overrides: BTreeMap<String, String>,
        prune: bool,
    ) -> PyResult<(Corpus, Bound<'py, PyAny>)> {
        let mut rules = CorrectionRules::new(dictionary);
        for (first, second, merged) in &merges {
            rules = rules.with_merge(first, second, merged);
        }
        for (from, to) in &overrides {
            rules = rules.with_override(from, to);
        }
        let out = augment::correct(&self.inner, &rules, prune).map_err(err)?;
        let log = to_py(py, &out.log)?;
        Ok((Corpus { inner: out.corpus }, log))
    }

    #[pyo3(signature = (thesaurus, seed, replacements = 1))]
    fn synonym_expand(
        &self,
        thesaurus: BTreeMap<String, Vec<String>>,
        seed: u64,
        replacements: usize,
    ) -> PyResult<Corpus> {
        let mut t = Thesaurus::new();
        for (word, synonyms) in &thesaurus {
            let synonyms: Vec<&str> = synonyms.iter().map(String::as_str).collect();
            t.insert(word, &synonyms).map_err(err)?;
        }
        let inner = augment::synonym_expand(&self.inner, &t, replacements, seed).map_err(err)?;
        Ok(Corpus { inner })
    }

    /// Back-translation through the offline translator (`"lexicon"` or
    /// `"identity"`), or through `endpoint` when given.
    #[pyo3(signature = (chain = "es,de,fr", translator = "lexicon", endpoint = None))]
    fn back_translate(
        &self,
        py: Python<'_>,
        chain: &str,
        translator: &str,
        endpoint: Option<String>,
    ) -> PyResult<Corpus> {
        let backend: Box<dyn Translator> = match (endpoint, translator) {
            (Some(endpoint), _) => Box::new(augment::HttpTranslator::new(
                augment::HttpTranslatorConfig {
                    endpoint,
                    api_key: std::env::var(augment::API_KEY_ENV).ok(),
                    timeout: std::time::Duration::from_secs(10),
                },
            )),
            (None, "lexicon") => Box::new(augment::MockTranslator::default()),
            (None, "identity") => Box::new(augment::IdentityTranslator),
            (None, other) => {
                return Err(PyValueError::new_err(format!(
                    "unknown translator {other:?}"
                )))
            }
        };
        let chain = TranslationChain::parse(chain, backend).map_err(err)?;
        let out = py
            .detach(|| {
                augment::back_translate(&self.inner, &chain, &BackTranslateOptions::default())
            })
            .map_err(err)?;
        Ok(Corpus { inner: out.corpus })
    }
}

/// Token → image-id postings with conjunctive queries.
#[pyclass(module = "captext_py", frozen)]
struct InvertedIndex {
    inner: discover::InvertedIndex,
}

#[pymethods]
impl InvertedIndex {
    /// Indexes `{image_id: text}`.
    #[new]
    fn new(documents: BTreeMap<String, String>) -> Self {
        InvertedIndex {
            inner: discover::build_index(&documents),
        }
    }

    #[staticmethod]
    fn from_corpus(corpus: &Corpus) -> Self {
        InvertedIndex {
            inner: discover::build_index(&discover::documents_from_corpus(&corpus.inner)),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(InvertedIndex {
            inner: discover::InvertedIndex::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    /// Ids containing every term, ascending.
    fn query(&self, terms: Vec<String>) -> PyResult<Vec<String>> {
        self.inner.query(&terms).map_err(err)
    }

    #[getter]
    fn doc_count(&self) -> usize {
        self.inner.doc_count
    }

    /// Number of distinct indexed tokens.
    fn __len__(&self) -> usize {
        self.inner.postings.len()
    }
}

/// Scene confusion matrix and attribute table.
///
/// `labels` maps image id to its true scene; `scenes` maps each scene to its
/// trigger words and defaults to the label scenes triggered by their names.
#[pyfunction]
#[pyo3(signature = (predictions, labels, scenes = None, attributes = Vec::new(), fold_plural = true))]
fn score_confusion<'py>(
    py: Python<'py>,
    predictions: BTreeMap<String, String>,
    labels: BTreeMap<String, String>,
    scenes: Option<BTreeMap<String, Vec<String>>>,
    attributes: Vec<String>,
    fold_plural: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let predictions: PredictionSet = predictions.into_iter().collect();
    let labels: Vec<LabelRecord> = labels
        .into_iter()
        .map(|(image_id, scene)| LabelRecord {
            image_id: image_id.to_lowercase(),
            scene: scene.to_lowercase(),
            objects: BTreeSet::new(),
        })
        .collect();
    let keywords = match scenes {
        Some(map) => {
            let mut k = SceneKeywords::new();
            for (scene, triggers) in &map {
                let triggers: Vec<&str> = triggers.iter().map(String::as_str).collect();
                k.insert(scene, &triggers).map_err(err)?;
            }
            k
        }
        None => SceneKeywords::from_labels(&labels),
    };
    let report = confusion::evaluate(
        &predictions,
        &labels,
        &keywords,
        &attributes,
        &MatchOptions { fold_plural },
    )
    .map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn captext_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CaptextError", m.py().get_type::<CaptextError>())?;
    m.add_class::<Corpus>()?;
    m.add_class::<InvertedIndex>()?;
    m.add_function(wrap_pyfunction!(tokens, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(split_sentences, m)?)?;
    m.add_function(wrap_pyfunction!(count_syllables, m)?)?;
    m.add_function(wrap_pyfunction!(readability_from_aggregates, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_bleu, m)?)?;
    m.add_function(wrap_pyfunction!(sentence_bleu, m)?)?;
    m.add_function(wrap_pyfunction!(score_confusion, m)?)?;
    Ok(())
}
