//! Caption corpora, detection labels and prediction files.
//!
//! Two caption layouts are read:
//!
//! * RSICD-style JSON: `{"images": [{"filename", "split", "sentences": [{"raw"}], "class"?}]}`
//! * JSONL, one image per line: `{"image_id", "split"?, "scene"?, "captions": [...]}`
//!
//! Image ids, scene names and object names are lower-cased at ingest. Caption
//! text is kept verbatim; normalization happens in [`crate::tokenize`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaptionSource {
    Human,
    Generated,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    pub image_id: String,
    pub raw: String,
    pub source: CaptionSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "restval" => Ok(Split::Train),
            "dev" | "val" | "valid" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            "" | "unassigned" => Ok(Split::Unassigned),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub split: Split,
    pub scene_class: Option<String>,
    pub captions: Vec<Caption>,
}

impl ImageRecord {
    /// Builds a record of human captions.
    pub fn new<I, S>(image_id: &str, captions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let image_id = image_id.trim().to_lowercase();
        let captions = captions
            .into_iter()
            .map(|raw| Caption {
                image_id: image_id.clone(),
                raw: raw.into(),
                source: CaptionSource::Human,
            })
            .collect();
        ImageRecord {
            image_id,
            split: Split::Unassigned,
            scene_class: None,
            captions,
        }
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn with_scene(mut self, scene: &str) -> Self {
        self.scene_class = Some(scene.trim().to_lowercase());
        self
    }
}

/// An immutable, validated collection of image records.
///
/// Ids are unique and every record holds at least one non-empty caption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Corpus {
    records: Vec<ImageRecord>,
    provenance: String,
}

impl Corpus {
    pub fn new(records: Vec<ImageRecord>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for record in &records {
            if record.image_id.trim().is_empty() {
                return Err(Error::Validation("empty image_id".into()));
            }
            if !seen.insert(record.image_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate image_id {:?}",
                    record.image_id
                )));
            }
            if record.captions.is_empty() {
                return Err(Error::Validation(format!(
                    "image {:?} has no captions",
                    record.image_id
                )));
            }
            for (idx, caption) in record.captions.iter().enumerate() {
                if caption.raw.trim().is_empty() {
                    return Err(Error::Validation(format!(
                        "image {:?} caption {} is empty",
                        record.image_id, idx
                    )));
                }
                if caption.image_id != record.image_id {
                    return Err(Error::Validation(format!(
                        "caption {} of image {:?} is attributed to {:?}",
                        idx, record.image_id, caption.image_id
                    )));
                }
            }
        }
        Ok(Corpus {
            records,
            provenance: provenance.into(),
        })
    }

    pub fn records(&self) -> &[ImageRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn caption_count(&self) -> usize {
        self.records.iter().map(|r| r.captions.len()).sum()
    }

    pub fn captions(&self) -> impl Iterator<Item = &Caption> {
        self.records.iter().flat_map(|r| r.captions.iter())
    }

    pub fn get(&self, image_id: &str) -> Option<&ImageRecord> {
        self.records.iter().find(|r| r.image_id == image_id)
    }

    pub fn into_records(self) -> Vec<ImageRecord> {
        self.records
    }

    /// Serializes in the captions JSONL layout, one record per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            let sources = if record
                .captions
                .iter()
                .all(|c| c.source == CaptionSource::Human)
            {
                None
            } else {
                Some(record.captions.iter().map(|c| c.source).collect())
            };
            let line = JsonlCaptionLine {
                image_id: record.image_id.clone(),
                split: Some(record.split.as_str().to_string()),
                scene: record.scene_class.clone(),
                captions: record.captions.iter().map(|c| c.raw.clone()).collect(),
                sources,
            };
            out.push_str(&serde_json::to_string(&line).expect("plain struct serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptionFormat {
    RsicdJson,
    Jsonl,
}

impl CaptionFormat {
    /// `.json` files are RSICD-style, everything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => CaptionFormat::RsicdJson,
            _ => CaptionFormat::Jsonl,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonlCaptionLine {
    image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scene: Option<String>,
    captions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sources: Option<Vec<CaptionSource>>,
}

#[derive(Debug, Deserialize)]
struct RsicdFile {
    images: Vec<RsicdImage>,
}

#[derive(Debug, Deserialize)]
struct RsicdImage {
    filename: String,
    #[serde(default)]
    split: Option<String>,
    sentences: Vec<RsicdSentence>,
    #[serde(default)]
    class: Option<String>,
}

#[derive(Debug, Deserialize)]
struct RsicdSentence {
    raw: String,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn origin(path: &Path) -> String {
    path.display().to_string()
}

fn parse_split(origin: &str, line: usize, value: Option<&str>) -> Result<Split> {
    value
        .unwrap_or("")
        .parse()
        .map_err(|msg: String| Error::format(origin, line, 0, msg))
}

fn json_error(origin: &str, line_offset: usize, err: serde_json::Error) -> Error {
    let line = if line_offset > 0 {
        line_offset
    } else {
        err.line()
    };
    Error::format(origin, line, err.column(), err.to_string())
}

pub fn ingest_captions(path: &Path, format: CaptionFormat) -> Result<Corpus> {
    Corpus::new(read_records(path, format)?, provenance_of(path))
}

/// Parses records without enforcing corpus invariants, for validation reports.
pub fn read_records(path: &Path, format: CaptionFormat) -> Result<Vec<ImageRecord>> {
    let text = read_text(path)?;
    match format {
        CaptionFormat::RsicdJson => parse_rsicd_records(&text, &origin(path)),
        CaptionFormat::Jsonl => parse_jsonl_records(&text, &origin(path)),
    }
}

fn provenance_of(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string()
}

pub fn parse_rsicd(text: &str, origin: &str, provenance: String) -> Result<Corpus> {
    Corpus::new(parse_rsicd_records(text, origin)?, provenance)
}

pub fn parse_captions_jsonl(text: &str, origin: &str, provenance: String) -> Result<Corpus> {
    Corpus::new(parse_jsonl_records(text, origin)?, provenance)
}

fn parse_rsicd_records(text: &str, origin: &str) -> Result<Vec<ImageRecord>> {
    let file: RsicdFile = serde_json::from_str(text).map_err(|e| json_error(origin, 0, e))?;
    let mut records = Vec::with_capacity(file.images.len());
    for image in file.images {
        let split = parse_split(origin, 0, image.split.as_deref())?;
        let mut record =
            ImageRecord::new(&image.filename, image.sentences.into_iter().map(|s| s.raw))
                .with_split(split);
        if let Some(class) = image.class.filter(|c| !c.trim().is_empty()) {
            record = record.with_scene(&class);
        }
        records.push(record);
    }
    Ok(records)
}

fn parse_jsonl_records(text: &str, origin: &str) -> Result<Vec<ImageRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in numbered_lines(text) {
        let parsed: JsonlCaptionLine =
            serde_json::from_str(line).map_err(|e| json_error(origin, lineno, e))?;
        let split = parse_split(origin, lineno, parsed.split.as_deref())?;
        let mut record = ImageRecord::new(&parsed.image_id, parsed.captions).with_split(split);
        if let Some(scene) = parsed.scene.filter(|s| !s.trim().is_empty()) {
            record = record.with_scene(&scene);
        }
        if let Some(sources) = parsed.sources {
            if sources.len() == record.captions.len() {
                for (caption, source) in record.captions.iter_mut().zip(sources) {
                    caption.source = source;
                }
            }
        }
        records.push(record);
    }
    Ok(records)
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(idx, line)| (idx + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty())
}

/// Ground truth for one image: its scene class and detected object names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub image_id: String,
    pub scene: String,
    pub objects: BTreeSet<String>,
}

#[derive(Debug, Deserialize)]
struct LabelLine {
    image_id: String,
    #[serde(default)]
    scene: Option<String>,
    #[serde(default)]
    objects: Vec<String>,
}

pub fn ingest_labels(path: &Path) -> Result<Vec<LabelRecord>> {
    parse_labels(&read_text(path)?, &origin(path))
}

pub fn parse_labels(text: &str, origin: &str) -> Result<Vec<LabelRecord>> {
    let mut labels = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in numbered_lines(text) {
        let parsed: LabelLine =
            serde_json::from_str(line).map_err(|e| json_error(origin, lineno, e))?;
        let image_id = parsed.image_id.trim().to_lowercase();
        if image_id.is_empty() {
            return Err(Error::Validation(format!(
                "{origin}:{lineno}: empty image_id"
            )));
        }
        let scene = match parsed.scene {
            Some(scene) if !scene.trim().is_empty() => scene.trim().to_lowercase(),
            _ => {
                return Err(Error::Validation(format!(
                    "{origin}:{lineno}: label {image_id:?} has no scene"
                )))
            }
        };
        if !seen.insert(image_id.clone()) {
            return Err(Error::Validation(format!(
                "{origin}:{lineno}: duplicate image_id {image_id:?}"
            )));
        }
        let objects = parsed
            .objects
            .iter()
            .map(|o| o.trim().to_lowercase())
            .filter(|o| !o.is_empty())
            .collect();
        labels.push(LabelRecord {
            image_id,
            scene,
            objects,
        });
    }
    Ok(labels)
}

/// Generated captions keyed by image id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub entries: BTreeMap<String, String>,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&str> {
        self.entries.get(image_id).map(String::as_str)
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for PredictionSet {
    fn from_iter<T: IntoIterator<Item = (K, V)>>(iter: T) -> Self {
        PredictionSet {
            entries: iter
                .into_iter()
                .map(|(k, v)| (k.into().trim().to_lowercase(), v.into()))
                .collect(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct PredictionLine {
    image_id: String,
    caption: String,
}

pub fn ingest_predictions(path: &Path) -> Result<PredictionSet> {
    parse_predictions(&read_text(path)?, &origin(path))
}

pub fn parse_predictions(text: &str, origin: &str) -> Result<PredictionSet> {
    let mut entries = BTreeMap::new();
    for (lineno, line) in numbered_lines(text) {
        let parsed: PredictionLine =
            serde_json::from_str(line).map_err(|e| json_error(origin, lineno, e))?;
        let image_id = parsed.image_id.trim().to_lowercase();
        if image_id.is_empty() {
            return Err(Error::Validation(format!(
                "{origin}:{lineno}: empty image_id"
            )));
        }
        if parsed.caption.trim().is_empty() {
            return Err(Error::Validation(format!(
                "{origin}:{lineno}: empty caption for {image_id:?}"
            )));
        }
        if entries.insert(image_id.clone(), parsed.caption).is_some() {
            return Err(Error::Validation(format!(
                "{origin}:{lineno}: duplicate image_id {image_id:?}"
            )));
        }
    }
    Ok(PredictionSet { entries })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    DuplicateId { image_id: String },
    EmptyCaption { image_id: String, index: usize },
    NoCaptions { image_id: String },
    CaptionCount { image_id: String, found: usize },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::DuplicateId { image_id } => write!(f, "duplicate image_id {image_id}"),
            Finding::EmptyCaption { image_id, index } => {
                write!(f, "{image_id}: caption {index} is empty")
            }
            Finding::NoCaptions { image_id } => write!(f, "{image_id}: no captions"),
            Finding::CaptionCount { image_id, found } => {
                write!(f, "{image_id}: expected 5 captions, found {found}")
            }
        }
    }
}

pub const RSICD_CAPTIONS_PER_IMAGE: usize = 5;

/// Reports problems without failing. `strict_rsicd` additionally requires
/// exactly five captions per image.
pub fn validate(corpus: &Corpus, strict_rsicd: bool) -> Vec<Finding> {
    validate_records(corpus.records(), strict_rsicd)
}

pub fn validate_records(records: &[ImageRecord], strict_rsicd: bool) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut seen = HashSet::new();
    for record in records {
        if !seen.insert(record.image_id.as_str()) {
            findings.push(Finding::DuplicateId {
                image_id: record.image_id.clone(),
            });
        }
        if record.captions.is_empty() {
            findings.push(Finding::NoCaptions {
                image_id: record.image_id.clone(),
            });
        }
        for (index, caption) in record.captions.iter().enumerate() {
            if caption.raw.trim().is_empty() {
                findings.push(Finding::EmptyCaption {
                    image_id: record.image_id.clone(),
                    index,
                });
            }
        }
        if strict_rsicd && record.captions.len() != RSICD_CAPTIONS_PER_IMAGE {
            findings.push(Finding::CaptionCount {
                image_id: record.image_id.clone(),
                found: record.captions.len(),
            });
        }
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_of(records: Vec<ImageRecord>) -> Corpus {
        Corpus::new(records, "test").unwrap()
    }

    #[test]
    fn minimal_jsonl() {
        let corpus = parse_captions_jsonl(
            r#"{"image_id":"img1","captions":["a beach"]}"#,
            "mem",
            "mem".into(),
        )
        .unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.caption_count(), 1);
        assert_eq!(corpus.records()[0].split, Split::Unassigned);
    }

    #[test]
    fn rsicd_layout() {
        let text = r#"{"images":[
            {"filename":"Airport_1.jpg","split":"train","class":"Airport",
             "sentences":[{"raw":"many planes ."},{"raw":"a runway .","tokens":["a","runway"]}]},
            {"filename":"beach_2.jpg","split":"val","sentences":[{"raw":"a beach"}]}
        ]}"#;
        let corpus = parse_rsicd(text, "mem", "rsicd".into()).unwrap();
        assert_eq!(corpus.len(), 2);
        let first = &corpus.records()[0];
        assert_eq!(first.image_id, "airport_1.jpg");
        assert_eq!(first.scene_class.as_deref(), Some("airport"));
        assert_eq!(first.split, Split::Train);
        assert_eq!(first.captions[1].raw, "a runway .");
        assert_eq!(corpus.records()[1].split, Split::Dev);
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let text =
            "{\"image_id\":\"A\",\"captions\":[\"x\"]}\n{\"image_id\":\"a\",\"captions\":[\"y\"]}";
        let err = parse_captions_jsonl(text, "mem", "m".into()).unwrap_err();
        assert!(err.to_string().contains("\"a\""), "{err}");
    }

    #[test]
    fn empty_caption_is_rejected() {
        let text = r#"{"image_id":"a","captions":["ok","  "]}"#;
        assert!(matches!(
            parse_captions_jsonl(text, "mem", "m".into()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "{\"image_id\":\"a\",\"captions\":[\"x\"]}\n{\"image_id\": oops}";
        match parse_captions_jsonl(text, "f.jsonl", "m".into()) {
            Err(Error::Format { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let text = r#"{"image_id":"a","captions":["x"],"extra":{"nested":1}}"#;
        assert_eq!(
            parse_captions_jsonl(text, "m", "m".into()).unwrap().len(),
            1
        );
    }

    #[test]
    fn labels() {
        let labels = parse_labels(
            "{\"image_id\":\"a1\",\"scene\":\"airport\",\"objects\":[\"Plane\",\"building\"]}\n\
             {\"image_id\":\"n1\",\"scene\":\"beach\",\"objects\":[]}\n",
            "mem",
        )
        .unwrap();
        assert_eq!(labels[0].scene, "airport");
        assert_eq!(
            labels[0].objects,
            ["building", "plane"]
                .iter()
                .map(|s| s.to_string())
                .collect()
        );
        assert!(labels[1].objects.is_empty());
    }

    #[test]
    fn label_without_scene() {
        assert!(matches!(
            parse_labels(r#"{"image_id":"a1","objects":[]}"#, "mem"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            parse_labels(
                "{\"image_id\":\"a\",\"scene\":\"x\"}\n{\"image_id\":\"a\",\"scene\":\"y\"}",
                "mem"
            ),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn predictions() {
        let set = parse_predictions(
            r#"{"image_id":"x","caption":"many planes are parked in an airport"}"#,
            "mem",
        )
        .unwrap();
        assert_eq!(set.len(), 1);
        assert!(parse_predictions("", "mem").unwrap().is_empty());
        assert!(parse_predictions(
            "{\"image_id\":\"x\",\"caption\":\"a\"}\n{\"image_id\":\"x\",\"caption\":\"b\"}",
            "mem"
        )
        .is_err());
        assert!(parse_predictions(r#"{"image_id":"x","caption":" "}"#, "mem").is_err());
    }

    #[test]
    fn strictness() {
        let five = ImageRecord::new("a", ["1", "2", "3", "4", "5"]);
        let four = ImageRecord::new("b", ["1", "2", "3", "4"]);
        assert!(validate(&corpus_of(vec![five]), true).is_empty());
        let findings = validate(&corpus_of(vec![four.clone()]), true);
        assert_eq!(
            findings,
            vec![Finding::CaptionCount {
                image_id: "b".into(),
                found: 4
            }]
        );
        assert!(validate(&corpus_of(vec![four]), false).is_empty());
    }

    #[test]
    fn validate_records_flags_raw_problems() {
        let mut bad = ImageRecord::new("a", ["x", ""]);
        bad.captions.push(Caption {
            image_id: "a".into(),
            raw: " ".into(),
            source: CaptionSource::Human,
        });
        let findings = validate_records(&[bad.clone(), bad], false);
        assert_eq!(findings.len(), 5);
    }

    #[test]
    fn jsonl_round_trip_keeps_sources() {
        let mut record = ImageRecord::new("a", ["x", "y"]).with_scene("Beach");
        record.captions[1].source = CaptionSource::Augmented;
        let corpus = corpus_of(vec![record, ImageRecord::new("b", ["z"])]);
        let again = parse_captions_jsonl(&corpus.to_jsonl(), "m", "test".into()).unwrap();
        assert_eq!(again, corpus);
    }
}
