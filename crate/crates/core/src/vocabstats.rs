//! Vocabulary diagnostics: token frequencies, top-k coverage, hapax ratio
//! and duplicate-caption counts.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCount {
    pub token: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyProfile {
    pub total_tokens: u64,
    pub unique_tokens: u64,
    pub hapax_count: u64,
    pub total_captions: u64,
    /// Distinct normalized captions across the whole corpus.
    pub unique_captions: u64,
    pub duplicate_captions: u64,
    /// Captions repeating an earlier caption of the same image.
    pub within_image_duplicates: u64,
    /// Images with at least one within-image duplicate.
    pub images_with_duplicates: u64,
    /// Descending count, ties broken lexicographically.
    pub freq: Vec<TokenCount>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub k: usize,
    pub covered: u64,
    pub fraction: f64,
}

impl VocabularyProfile {
    pub fn count(&self, token: &str) -> u64 {
        self.freq
            .iter()
            .find(|tc| tc.token == token)
            .map_or(0, |tc| tc.count)
    }

    pub fn duplicate_rate(&self) -> f64 {
        if self.total_captions == 0 {
            0.0
        } else {
            self.duplicate_captions as f64 / self.total_captions as f64
        }
    }

    pub fn top_k_coverage(&self, k: usize) -> Result<Coverage> {
        if k == 0 {
            return Err(Error::Config("top-k coverage needs k >= 1".into()));
        }
        let covered: u64 = self.freq.iter().take(k).map(|tc| tc.count).sum();
        Ok(Coverage {
            k,
            covered,
            fraction: covered as f64 / self.total_tokens as f64,
        })
    }

    pub fn hapax_ratio(&self) -> f64 {
        self.hapax_count as f64 / self.unique_tokens as f64
    }

    /// Writes `rank,token,count,cumulative_fraction` rows in rank order.
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["rank", "token", "count", "cumulative_fraction"])?;
        let mut cumulative = 0u64;
        for (idx, tc) in self.freq.iter().enumerate() {
            cumulative += tc.count;
            let fraction = cumulative as f64 / self.total_tokens as f64;
            writer.serialize((idx + 1, &tc.token, tc.count, fraction))?;
        }
        writer.flush().map_err(|e| Error::io("csv", e))?;
        Ok(())
    }
}

/// Ranks a frequency map: count descending, then token ascending.
pub fn rank(counts: HashMap<String, u64>) -> Vec<TokenCount> {
    let mut ranked: Vec<TokenCount> = counts
        .into_iter()
        .map(|(token, count)| TokenCount { token, count })
        .collect();
    ranked.sort_unstable_by(|a, b| b.count.cmp(&a.count).then_with(|| a.token.cmp(&b.token)));
    ranked
}

pub fn profile(corpus: &Corpus) -> Result<VocabularyProfile> {
    if corpus.is_empty() {
        return Err(Error::Degenerate("corpus has no records".into()));
    }

    let counts = corpus
        .records()
        .par_iter()
        .fold(HashMap::<String, u64>::new, |mut acc, record| {
            for caption in &record.captions {
                for token in tokenize::tokens(&caption.raw) {
                    *acc.entry(token).or_default() += 1;
                }
            }
            acc
        })
        .reduce(HashMap::new, merge_counts);

    let total_tokens: u64 = counts.values().sum();
    if total_tokens == 0 {
        return Err(Error::Degenerate("corpus contains no tokens".into()));
    }

    let mut corpus_seen = HashSet::new();
    let mut within_image_duplicates = 0;
    let mut images_with_duplicates = 0;
    for record in corpus.records() {
        let mut image_seen = HashSet::new();
        let mut dupes = 0;
        for caption in &record.captions {
            let normalized = tokenize::normalize(&caption.raw);
            if !image_seen.insert(normalized.clone()) {
                dupes += 1;
            }
            corpus_seen.insert(normalized);
        }
        within_image_duplicates += dupes;
        images_with_duplicates += u64::from(dupes > 0);
    }

    let total_captions = corpus.caption_count() as u64;
    let unique_captions = corpus_seen.len() as u64;
    let hapax_count = counts.values().filter(|&&c| c == 1).count() as u64;
    let unique_tokens = counts.len() as u64;

    Ok(VocabularyProfile {
        total_tokens,
        unique_tokens,
        hapax_count,
        total_captions,
        unique_captions,
        duplicate_captions: total_captions - unique_captions,
        within_image_duplicates,
        images_with_duplicates,
        freq: rank(counts),
    })
}

fn merge_counts(mut a: HashMap<String, u64>, b: HashMap<String, u64>) -> HashMap<String, u64> {
    if a.len() < b.len() {
        return merge_counts(b, a);
    }
    for (token, count) in b {
        *a.entry(token).or_default() += count;
    }
    a
}
