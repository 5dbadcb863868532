//! Reference-free caption evaluation.
//!
//! Each labelled image's generated caption is tokenized and checked for
//! scene trigger words. Rows of the scene matrix are the true scene, columns
//! the scene whose trigger the caption mentions; a caption naming two scenes
//! increments two cells. Counts are presence-based: one image contributes at
//! most 1 to any cell. The attribute table counts, per true scene, the
//! images whose caption contains each attribute word.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelRecord, PredictionSet};
use crate::error::{Error, Result};
use crate::lines::{read_lines, split_tab};
use crate::tokenize;

/// Header cell of the matrix CSV, naming both axes.
pub const MATRIX_CORNER: &str = "true_scene\\mentioned";
pub const ATTRIBUTE_CORNER: &str = "attribute\\true_scene";
pub const TOTAL_COLUMN: &str = "total_images";

pub const MATRIX_FILE: &str = "scene_matrix.csv";
pub const ATTRIBUTE_FILE: &str = "attribute_table.csv";
pub const MISSING_FILE: &str = "missing_predictions.txt";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOptions {
    /// Treat a trailing plural `s` as insignificant (`airports` ~ `airport`).
    pub fold_plural: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions { fold_plural: true }
    }
}

impl MatchOptions {
    /// Strips one trailing `s` from words longer than three characters that
    /// do not end in `ss`.
    pub fn fold<'a>(&self, token: &'a str) -> &'a str {
        if self.fold_plural && token.len() > 3 && token.ends_with('s') && !token.ends_with("ss") {
            &token[..token.len() - 1]
        } else {
            token
        }
    }
}

/// Scene names in configuration order, each with its trigger tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SceneKeywords {
    scenes: Vec<(String, BTreeSet<String>)>,
}

impl SceneKeywords {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a scene. With no triggers the scene name itself is the trigger.
    pub fn insert(&mut self, scene: &str, triggers: &[&str]) -> Result<()> {
        let scene = scene.trim().to_lowercase();
        if scene.is_empty() {
            return Err(Error::Config("empty scene name".into()));
        }
        if self.index_of(&scene).is_some() {
            return Err(Error::Config(format!("scene {scene:?} configured twice")));
        }
        let mut set: BTreeSet<String> = triggers.iter().flat_map(|t| tokenize::tokens(t)).collect();
        if set.is_empty() {
            set.insert(scene.clone());
        }
        self.scenes.push((scene, set));
        Ok(())
    }

    pub fn with(mut self, scene: &str, triggers: &[&str]) -> Result<Self> {
        self.insert(scene, triggers)?;
        Ok(self)
    }

    /// One scene per label scene, lexicographic, triggered by its own name.
    pub fn from_labels(labels: &[LabelRecord]) -> Self {
        let names: BTreeSet<&str> = labels.iter().map(|l| l.scene.as_str()).collect();
        let mut keywords = SceneKeywords::new();
        for name in names {
            keywords
                .insert(name, &[])
                .expect("distinct non-empty names");
        }
        keywords
    }

    /// Reads `scene<TAB>trigger1,trigger2,...` lines; a line holding only
    /// the scene name uses the name as its trigger.
    pub fn load(path: &Path) -> Result<Self> {
        let mut keywords = SceneKeywords::new();
        for (lineno, line) in read_lines(path)? {
            let (scene, triggers) = if line.contains('\t') {
                split_tab(path, lineno, &line)?
            } else {
                (line.as_str(), "")
            };
            let triggers: Vec<&str> = triggers
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .collect();
            keywords
                .insert(scene, &triggers)
                .map_err(|e| Error::format(path.display().to_string(), lineno, 0, e.to_string()))?;
        }
        Ok(keywords)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.scenes.iter().map(|(s, _)| s.as_str())
    }

    pub fn triggers(&self, scene: &str) -> Option<&BTreeSet<String>> {
        self.scenes.iter().find(|(s, _)| s == scene).map(|(_, t)| t)
    }

    pub fn index_of(&self, scene: &str) -> Option<usize> {
        self.scenes.iter().position(|(s, _)| s == scene)
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }
}

/// Reads one attribute token per line.
pub fn load_attributes(path: &Path) -> Result<Vec<String>> {
    Ok(read_lines(path)?
        .into_iter()
        .map(|(_, l)| l.trim().to_lowercase())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub scenes: Vec<String>,
    /// `scene_matrix[true][mentioned]`, indexed like `scenes`.
    pub scene_matrix: Vec<Vec<u64>>,
    pub attributes: Vec<String>,
    /// `attribute_table[attribute][true_scene]`.
    pub attribute_table: Vec<Vec<u64>>,
    pub per_scene_totals: Vec<u64>,
    /// Diagonal sum over scored images; 0 when nothing was scored.
    pub diagonal_accuracy: f64,
    /// Labelled images without a prediction, skipped.
    pub missing_predictions: Vec<String>,
}

impl ConfusionReport {
    fn empty(scenes: Vec<String>, attributes: Vec<String>) -> Self {
        let n = scenes.len();
        ConfusionReport {
            scene_matrix: vec![vec![0; n]; n],
            attribute_table: vec![vec![0; n]; attributes.len()],
            per_scene_totals: vec![0; n],
            diagonal_accuracy: 0.0,
            missing_predictions: Vec::new(),
            scenes,
            attributes,
        }
    }

    fn scene_idx(&self, scene: &str) -> Option<usize> {
        self.scenes.iter().position(|s| s == scene)
    }

    pub fn cell(&self, true_scene: &str, mentioned: &str) -> Option<u64> {
        Some(self.scene_matrix[self.scene_idx(true_scene)?][self.scene_idx(mentioned)?])
    }

    pub fn attribute_count(&self, attribute: &str, true_scene: &str) -> Option<u64> {
        let a = self.attributes.iter().position(|x| x == attribute)?;
        Some(self.attribute_table[a][self.scene_idx(true_scene)?])
    }

    pub fn total(&self, scene: &str) -> Option<u64> {
        Some(self.per_scene_totals[self.scene_idx(scene)?])
    }

    fn recompute_accuracy(&mut self) {
        let scored: u64 = self.per_scene_totals.iter().sum();
        let diagonal: u64 = (0..self.scenes.len())
            .map(|i| self.scene_matrix[i][i])
            .sum();
        self.diagonal_accuracy = if scored == 0 {
            0.0
        } else {
            diagonal as f64 / scored as f64
        };
    }

    /// Writes the matrix CSV, attribute CSV, missing-id list and JSON mirror
    /// into `dir`, creating it if needed.
    pub fn export(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let path = dir.join(MATRIX_FILE);
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec![MATRIX_CORNER.to_string()];
        header.extend(self.scenes.iter().cloned());
        header.push(TOTAL_COLUMN.to_string());
        w.write_record(&header)?;
        for (i, scene) in self.scenes.iter().enumerate() {
            let mut row = vec![scene.clone()];
            row.extend(self.scene_matrix[i].iter().map(u64::to_string));
            row.push(self.per_scene_totals[i].to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join(ATTRIBUTE_FILE);
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec![ATTRIBUTE_CORNER.to_string()];
        header.extend(self.scenes.iter().cloned());
        w.write_record(&header)?;
        for (a, attribute) in self.attributes.iter().enumerate() {
            let mut row = vec![attribute.clone()];
            row.extend(self.attribute_table[a].iter().map(u64::to_string));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join(MISSING_FILE);
        let mut missing = self.missing_predictions.join("\n");
        if !missing.is_empty() {
            missing.push('\n');
        }
        fs::write(&path, missing).map_err(|e| Error::io(&path, e))?;

        let path = dir.join(REPORT_FILE);
        let json = serde_json::to_string_pretty(self)? + "\n";
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }

    /// Rebuilds a report from the CSV files written by [`export`](Self::export).
    pub fn import(dir: &Path) -> Result<Self> {
        let bad = |path: &Path, line: usize, msg: String| {
            Error::format(path.display().to_string(), line, 0, msg)
        };
        let parse_count = |path: &Path, line: usize, cell: &str| {
            cell.parse::<u64>()
                .map_err(|e| bad(path, line, format!("{cell:?}: {e}")))
        };

        let path = dir.join(MATRIX_FILE);
        let mut r = csv::Reader::from_path(&path)?;
        let header = r.headers()?.clone();
        if header.len() < 2
            || &header[0] != MATRIX_CORNER
            || &header[header.len() - 1] != TOTAL_COLUMN
        {
            return Err(bad(&path, 1, "unexpected matrix header".into()));
        }
        let scenes: Vec<String> = header
            .iter()
            .skip(1)
            .take(header.len() - 2)
            .map(String::from)
            .collect();
        let mut scene_matrix = Vec::new();
        let mut per_scene_totals = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let line = i + 2;
            if record.len() != header.len()
                || record[0] != scenes.get(i).cloned().unwrap_or_default()
            {
                return Err(bad(&path, line, "row does not match header".into()));
            }
            let row = (1..=scenes.len())
                .map(|j| parse_count(&path, line, &record[j]))
                .collect::<Result<Vec<_>>>()?;
            scene_matrix.push(row);
            per_scene_totals.push(parse_count(&path, line, &record[header.len() - 1])?);
        }
        if scene_matrix.len() != scenes.len() {
            return Err(bad(&path, 0, "matrix is not square".into()));
        }

        let path = dir.join(ATTRIBUTE_FILE);
        let mut r = csv::Reader::from_path(&path)?;
        let header = r.headers()?.clone();
        if header.get(0) != Some(ATTRIBUTE_CORNER)
            || header.iter().skip(1).ne(scenes.iter().map(String::as_str))
        {
            return Err(bad(
                &path,
                1,
                "attribute header does not match scenes".into(),
            ));
        }
        let mut attributes = Vec::new();
        let mut attribute_table = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let line = i + 2;
            attributes.push(record[0].to_string());
            attribute_table.push(
                (1..=scenes.len())
                    .map(|j| parse_count(&path, line, record.get(j).unwrap_or("")))
                    .collect::<Result<Vec<_>>>()?,
            );
        }

        let path = dir.join(MISSING_FILE);
        let missing_predictions = match fs::read_to_string(&path) {
            Ok(text) => text
                .lines()
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(Error::io(&path, e)),
        };

        let mut report = ConfusionReport {
            scenes,
            scene_matrix,
            attributes,
            attribute_table,
            per_scene_totals,
            diagonal_accuracy: 0.0,
            missing_predictions,
        };
        report.recompute_accuracy();
        Ok(report)
    }
}

fn folded_tokens<'a>(tokens: &'a [String], options: &MatchOptions) -> HashSet<&'a str> {
    tokens.iter().map(|t| options.fold(t)).collect()
}

/// True scene index and folded caption tokens of one image.
type Scored = (usize, Vec<String>);

/// Labelled images that have a prediction, plus ids of those that lack one.
fn scored_images(
    predictions: &PredictionSet,
    labels: &[LabelRecord],
    scenes: &SceneKeywords,
) -> Result<(Vec<Scored>, Vec<String>)> {
    let mut scored = Vec::new();
    let mut missing = Vec::new();
    for label in labels {
        let scene = scenes
            .index_of(&label.scene)
            .ok_or_else(|| Error::Config(format!("scene {:?} has no keyword set", label.scene)))?;
        match predictions.get(&label.image_id) {
            Some(caption) => scored.push((scene, tokenize::tokens(caption))),
            None => missing.push(label.image_id.clone()),
        }
    }
    Ok((scored, missing))
}

/// Cross-tabulates true scenes against the scenes mentioned by each image's
/// generated caption. The attribute table is left empty.
pub fn scene_matrix(
    predictions: &PredictionSet,
    labels: &[LabelRecord],
    scenes: &SceneKeywords,
    options: &MatchOptions,
) -> Result<ConfusionReport> {
    evaluate(predictions, labels, scenes, &[], options)
}

/// Per true scene, the number of images whose caption contains each attribute.
pub fn attribute_table(
    predictions: &PredictionSet,
    labels: &[LabelRecord],
    scenes: &SceneKeywords,
    attributes: &[String],
    options: &MatchOptions,
) -> Result<Vec<Vec<u64>>> {
    Ok(evaluate(predictions, labels, scenes, attributes, options)?.attribute_table)
}

/// Scene matrix and attribute table in one pass.
pub fn evaluate(
    predictions: &PredictionSet,
    labels: &[LabelRecord],
    scenes: &SceneKeywords,
    attributes: &[String],
    options: &MatchOptions,
) -> Result<ConfusionReport> {
    let (scored, missing) = scored_images(predictions, labels, scenes)?;
    let mut report = ConfusionReport::empty(
        scenes.names().map(String::from).collect(),
        attributes.to_vec(),
    );
    report.missing_predictions = missing;

    let triggers: Vec<HashSet<&str>> = scenes
        .scenes
        .iter()
        .map(|(_, t)| t.iter().map(|w| options.fold(w)).collect())
        .collect();
    let folded_attributes: Vec<&str> = attributes.iter().map(|a| options.fold(a)).collect();

    for (true_scene, tokens) in &scored {
        let words = folded_tokens(tokens, options);
        report.per_scene_totals[*true_scene] += 1;
        for (mentioned, set) in triggers.iter().enumerate() {
            if !set.is_disjoint(&words) {
                report.scene_matrix[*true_scene][mentioned] += 1;
            }
        }
        for (a, attribute) in folded_attributes.iter().enumerate() {
            if words.contains(attribute) {
                report.attribute_table[a][*true_scene] += 1;
            }
        }
    }
    report.recompute_accuracy();
    Ok(report)
}
