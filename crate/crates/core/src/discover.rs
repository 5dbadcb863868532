//! Inverted index over captions with conjunctive keyword queries.
//!
//! Queries are pure AND: the result is every image whose caption contains
//! all query tokens, in ascending id order, with no ranking.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PredictionSet};
use crate::error::{Error, Result};
use crate::tokenize;

pub const INDEX_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvertedIndex {
    pub version: u64,
    pub doc_count: usize,
    /// Token → strictly ascending image ids.
    pub postings: BTreeMap<String, Vec<String>>,
}

impl Default for InvertedIndex {
    fn default() -> Self {
        InvertedIndex {
            version: INDEX_VERSION,
            doc_count: 0,
            postings: BTreeMap::new(),
        }
    }
}

/// One document per image: all of its captions.
pub fn documents_from_corpus(corpus: &Corpus) -> BTreeMap<String, String> {
    corpus
        .records()
        .iter()
        .map(|r| {
            let text = r
                .captions
                .iter()
                .map(|c| c.raw.as_str())
                .collect::<Vec<_>>()
                .join("\n");
            (r.image_id.clone(), text)
        })
        .collect()
}

pub fn documents_from_predictions(predictions: &PredictionSet) -> BTreeMap<String, String> {
    predictions.entries.clone()
}

pub fn build_index(documents: &BTreeMap<String, String>) -> InvertedIndex {
    let mut postings: BTreeMap<String, Vec<String>> = BTreeMap::new();
    // BTreeMap iteration is id-ordered, so every list is built sorted.
    for (id, text) in documents {
        let distinct: BTreeSet<String> = tokenize::tokens(text).into_iter().collect();
        for token in distinct {
            postings.entry(token).or_default().push(id.clone());
        }
    }
    InvertedIndex {
        version: INDEX_VERSION,
        doc_count: documents.len(),
        postings,
    }
}

fn intersect(a: &[String], b: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out
}

impl InvertedIndex {
    /// Ids whose captions contain every term. Terms go through the caption
    /// tokenizer first, so `"Bridge,"` matches `bridge`.
    pub fn query<S: AsRef<str>>(&self, terms: &[S]) -> Result<Vec<String>> {
        let joined = terms
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(" ");
        let tokens: BTreeSet<String> = tokenize::tokens(&joined).into_iter().collect();
        if tokens.is_empty() {
            return Err(Error::Query("query has no terms after tokenization".into()));
        }
        let mut lists = Vec::with_capacity(tokens.len());
        for token in &tokens {
            match self.postings.get(token) {
                Some(list) => lists.push(list.as_slice()),
                None => return Ok(Vec::new()),
            }
        }
        lists.sort_by_key(|l| l.len());
        let mut result = lists[0].to_vec();
        for list in &lists[1..] {
            if result.is_empty() {
                break;
            }
            result = intersect(&result, list);
        }
        Ok(result)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let corrupt =
            |e: serde_json::Error| Error::format(origin, e.line(), e.column(), e.to_string());
        let value: serde_json::Value = serde_json::from_str(text).map_err(corrupt)?;
        let found = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::format(origin, 0, 0, "missing integer \"version\""))?;
        if found != INDEX_VERSION {
            return Err(Error::IncompatibleIndex {
                found,
                expected: INDEX_VERSION,
            });
        }
        let index: InvertedIndex = serde_json::from_value(value).map_err(corrupt)?;
        index
            .check()
            .map_err(|msg| Error::format(origin, 0, 0, msg))?;
        Ok(index)
    }

    fn check(&self) -> std::result::Result<(), String> {
        let mut ids = BTreeSet::new();
        for (token, list) in &self.postings {
            if list.is_empty() {
                return Err(format!("empty postings for {token:?}"));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("postings for {token:?} are not strictly sorted"));
            }
            ids.extend(list.iter().map(String::as_str));
        }
        if ids.len() > self.doc_count {
            return Err(format!(
                "{} distinct ids but doc_count is {}",
                ids.len(),
                self.doc_count
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn postings() {
        let index = build_index(&docs(&[("i1", "airport near bridge"), ("i2", "beach")]));
        assert_eq!(index.postings["airport"], ["i1"]);
        assert_eq!(index.postings["beach"], ["i2"]);
        assert_eq!(index.doc_count, 2);
    }

    #[test]
    fn repeated_token_posts_once() {
        let index = build_index(&docs(&[("i1", "tree tree Tree")]));
        assert_eq!(index.postings["tree"], ["i1"]);
    }

    #[test]
    fn conjunctive_query() {
        let index = build_index(&docs(&[
            ("a", "an airport near a river bridge"),
            ("b", "an airport near a river"),
            ("c", "a river bridge"),
            ("d", "Airport, river and bridge."),
        ]));
        assert_eq!(
            index.query(&["airport", "river", "bridge"]).unwrap(),
            ["a", "d"]
        );
        assert!(index.query(&["nonexistent"]).unwrap().is_empty());
        assert_eq!(index.query(&["river"]).unwrap(), index.postings["river"]);
        assert!(matches!(index.query(&["..."]), Err(Error::Query(_))));
        assert!(matches!(index.query::<&str>(&[]), Err(Error::Query(_))));
    }

    #[test]
    fn persistence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idx.json");
        let index = build_index(&docs(&[("i1", "airport near bridge"), ("i2", "beach")]));
        index.save(&path).unwrap();
        assert_eq!(InvertedIndex::load(&path).unwrap(), index);

        let empty = build_index(&BTreeMap::new());
        empty.save(&path).unwrap();
        assert_eq!(InvertedIndex::load(&path).unwrap(), empty);
    }

    #[test]
    fn newer_version_is_incompatible() {
        let text = r#"{"version":2,"doc_count":0,"postings":{}}"#;
        assert!(matches!(
            InvertedIndex::from_json(text, "idx"),
            Err(Error::IncompatibleIndex {
                found: 2,
                expected: 1
            })
        ));
    }

    #[test]
    fn corrupt_files() {
        assert!(matches!(
            InvertedIndex::from_json("{not json", "idx"),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            InvertedIndex::from_json(
                r#"{"version":1,"doc_count":2,"postings":{"a":["y","x"]}}"#,
                "idx"
            ),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            InvertedIndex::from_json(
                r#"{"version":1,"doc_count":1,"postings":{"a":["x","y"]}}"#,
                "idx"
            ),
            Err(Error::Format { .. })
        ));
    }
}
