use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::Serialize;

use crate::corpus::{Caption, Corpus, ImageRecord};
use crate::error::{Error, Result};
use crate::tokenize;

use crate::lines::{read_lines, split_tab};

/// Largest edit distance at which a spelling correction is accepted.
pub const MAX_EDIT_DISTANCE: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeRule {
    pub first: String,
    pub second: String,
    pub merged: String,
}

#[derive(Debug, Clone, Default)]
pub struct CorrectionRules {
    pub dictionary: BTreeSet<String>,
    /// Applied in order; the first rule matching at a position wins.
    pub merge_patterns: Vec<MergeRule>,
    pub manual_overrides: BTreeMap<String, String>,
}

fn is_clean_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

impl CorrectionRules {
    pub fn new(dictionary: impl IntoIterator<Item = impl Into<String>>) -> Self {
        CorrectionRules {
            dictionary: dictionary
                .into_iter()
                .map(|w| w.into().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
            ..Default::default()
        }
    }

    pub fn with_merge(mut self, first: &str, second: &str, merged: &str) -> Self {
        self.merge_patterns.push(MergeRule {
            first: first.to_lowercase(),
            second: second.to_lowercase(),
            merged: merged.to_lowercase(),
        });
        self
    }

    pub fn with_override(mut self, from: &str, to: &str) -> Self {
        self.manual_overrides
            .insert(from.to_lowercase(), to.to_lowercase());
        self
    }

    /// Reads a one-word-per-line dictionary, a `bigram<TAB>replacement` merge
    /// file and an optional `misspelled<TAB>replacement` override file.
    pub fn load(
        dictionary: &Path,
        merges: Option<&Path>,
        overrides: Option<&Path>,
    ) -> Result<Self> {
        let mut rules = CorrectionRules::new(read_lines(dictionary)?.into_iter().map(|(_, l)| l));
        if let Some(path) = merges {
            for (lineno, line) in read_lines(path)? {
                let (bigram, merged) = split_tab(path, lineno, &line)?;
                let parts = tokenize::tokens(bigram);
                if parts.len() != 2 {
                    return Err(Error::format(
                        path.display().to_string(),
                        lineno,
                        0,
                        format!("merge pattern {bigram:?} is not a bigram"),
                    ));
                }
                rules = rules.with_merge(&parts[0], &parts[1], merged.trim());
            }
        }
        if let Some(path) = overrides {
            for (lineno, line) in read_lines(path)? {
                let (from, to) = split_tab(path, lineno, &line)?;
                rules = rules.with_override(from.trim(), to.trim());
            }
        }
        rules.check()?;
        Ok(rules)
    }

    pub fn check(&self) -> Result<()> {
        if self.dictionary.is_empty() {
            return Err(Error::Config("correction dictionary is empty".into()));
        }
        for rule in &self.merge_patterns {
            if !is_clean_token(&rule.merged) {
                return Err(Error::Config(format!(
                    "merge replacement {:?} must be a single token",
                    rule.merged
                )));
            }
        }
        for (from, to) in &self.manual_overrides {
            if !is_clean_token(from) || !is_clean_token(to) {
                return Err(Error::Config(format!(
                    "override {from:?} -> {to:?} must map a token to a token"
                )));
            }
            if self.manual_overrides.contains_key(to) {
                return Err(Error::Config(format!(
                    "override chain: {from:?} -> {to:?} -> {:?}",
                    self.manual_overrides[to]
                )));
            }
        }
        Ok(())
    }

    /// Dictionary words plus every merge and override output.
    fn accepted(&self) -> HashSet<&str> {
        self.dictionary
            .iter()
            .map(String::as_str)
            .chain(self.merge_patterns.iter().map(|r| r.merged.as_str()))
            .chain(self.manual_overrides.values().map(String::as_str))
            .collect()
    }

    fn apply_merges(&self, tokens: Vec<String>, log: &mut CorrectionLog) -> Vec<String> {
        if self.merge_patterns.is_empty() {
            return tokens;
        }
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            let rule = tokens.get(i + 1).and_then(|next| {
                self.merge_patterns
                    .iter()
                    .find(|r| r.first == tokens[i] && &r.second == next)
            });
            match rule {
                Some(rule) => {
                    out.push(rule.merged.clone());
                    log.merges += 1;
                    i += 2;
                }
                None => {
                    out.push(tokens[i].clone());
                    i += 1;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorrectionLog {
    pub merges: u64,
    pub overrides: u64,
    /// `(misspelling, correction)` → occurrences.
    pub spelling: BTreeMap<String, BTreeMap<String, u64>>,
    /// Out-of-dictionary tokens with no candidate in range → occurrences.
    pub unresolved: BTreeMap<String, u64>,
    pub pruned_captions: u64,
    /// Images whose every caption was pruned as a duplicate.
    pub dropped_records: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Corrected {
    pub corpus: Corpus,
    pub log: CorrectionLog,
}

struct SpellChecker<'a> {
    accepted: HashSet<&'a str>,
    by_length: BTreeMap<usize, Vec<&'a str>>,
    frequency: HashMap<String, u64>,
    cache: HashMap<String, Option<String>>,
}

impl<'a> SpellChecker<'a> {
    fn new(rules: &'a CorrectionRules, frequency: HashMap<String, u64>) -> Self {
        let mut by_length: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for word in &rules.dictionary {
            by_length
                .entry(word.chars().count())
                .or_default()
                .push(word);
        }
        SpellChecker {
            accepted: rules.accepted(),
            by_length,
            frequency,
            cache: HashMap::new(),
        }
    }

    fn needs_check(&self, token: &str) -> bool {
        !self.accepted.contains(token) && !token.chars().any(|c| c.is_ascii_digit())
    }

    /// Nearest dictionary word within [`MAX_EDIT_DISTANCE`]; ties go to the
    /// more frequent corpus word, then the lexicographically smaller one.
    fn suggest(&mut self, token: &str) -> Option<String> {
        if let Some(hit) = self.cache.get(token) {
            return hit.clone();
        }
        let len = token.chars().count();
        let lo = len.saturating_sub(MAX_EDIT_DISTANCE);
        let hi = len + MAX_EDIT_DISTANCE;
        let mut best: Option<(usize, u64, &str)> = None;
        for words in self.by_length.range(lo..=hi).map(|(_, w)| w) {
            for &word in words {
                let distance = strsim::levenshtein(token, word);
                if distance > MAX_EDIT_DISTANCE {
                    continue;
                }
                let freq = self.frequency.get(word).copied().unwrap_or(0);
                let better = match best {
                    None => true,
                    Some((d, f, w)) => {
                        (distance, std::cmp::Reverse(freq), word) < (d, std::cmp::Reverse(f), w)
                    }
                };
                if better {
                    best = Some((distance, freq, word));
                }
            }
        }
        let result = best.map(|(_, _, w)| w.to_string());
        self.cache.insert(token.to_string(), result.clone());
        result
    }
}

/// Repairs split words, applies manual overrides and fixes misspellings;
/// optionally drops captions whose normalized form already appeared earlier
/// in the corpus.
///
/// Corrected captions are rewritten in normalized form. Captions without any
/// token are kept verbatim. Images left with no caption after pruning are
/// dropped and listed in the log.
pub fn correct(
    corpus: &Corpus,
    rules: &CorrectionRules,
    prune_duplicates: bool,
) -> Result<Corrected> {
    rules.check()?;

    let mut frequency: HashMap<String, u64> = HashMap::new();
    for caption in corpus.captions() {
        for token in tokenize::tokens(&caption.raw) {
            *frequency.entry(token).or_default() += 1;
        }
    }
    let mut checker = SpellChecker::new(rules, frequency);
    let mut log = CorrectionLog::default();
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(corpus.len());

    for record in corpus.records() {
        let mut captions = Vec::with_capacity(record.captions.len());
        for caption in &record.captions {
            let tokens = tokenize::tokens(&caption.raw);
            let raw = if tokens.is_empty() {
                caption.raw.clone()
            } else {
                correct_tokens(tokens, rules, &mut checker, &mut log).join(" ")
            };
            if prune_duplicates && !seen.insert(tokenize::normalize(&raw)) {
                log.pruned_captions += 1;
                continue;
            }
            captions.push(Caption {
                image_id: caption.image_id.clone(),
                raw,
                source: caption.source,
            });
        }
        if captions.is_empty() {
            log::debug!("all captions of {} were duplicates", record.image_id);
            log.dropped_records.push(record.image_id.clone());
            continue;
        }
        records.push(ImageRecord {
            captions,
            ..record.clone()
        });
    }

    for (token, count) in &log.unresolved {
        log::info!("no correction for {token:?} ({count} occurrences)");
    }

    Ok(Corrected {
        corpus: Corpus::new(records, format!("{}-corrected", corpus.provenance()))?,
        log,
    })
}

// Repeats the merge/override/spelling passes until nothing changes, so that
// re-correcting a corrected corpus is a no-op.
fn correct_tokens(
    mut tokens: Vec<String>,
    rules: &CorrectionRules,
    checker: &mut SpellChecker<'_>,
    log: &mut CorrectionLog,
) -> Vec<String> {
    const MAX_PASSES: usize = 8;
    for pass in 0..MAX_PASSES {
        let before = tokens.clone();
        tokens = rules.apply_merges(tokens, log);
        for token in &mut tokens {
            if let Some(replacement) = rules.manual_overrides.get(token.as_str()) {
                *token = replacement.clone();
                log.overrides += 1;
            } else if checker.needs_check(token) {
                match checker.suggest(token) {
                    Some(fix) => {
                        *log.spelling
                            .entry(token.clone())
                            .or_default()
                            .entry(fix.clone())
                            .or_default() += 1;
                        *token = fix;
                    }
                    None if pass == 0 => *log.unresolved.entry(token.clone()).or_default() += 1,
                    None => {}
                }
            }
        }
        if tokens == before {
            break;
        }
    }
    tokens
}
