//! Readability panel over a caption corpus.
//!
//! Counts words `W`, sentences `S`, syllables `Y` and complex words `C`
//! (three or more syllables) over the canonical token stream, then derives:
//!
//! * Gunning Fog: `0.4 * (W/S + 100 * C/W)`
//! * Flesch Reading Ease: `206.835 - 1.015 * (W/S) - 84.6 * (Y/W)`
//! * Flesch-Kincaid grade: `0.39 * (W/S) + 11.8 * (Y/W) - 15.59`
//!
//! Syllables come from a vowel-group heuristic, so every syllable-dependent
//! number is relative to that heuristic.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::tokenize;

/// Words with at least this many syllables count as complex.
pub const COMPLEX_SYLLABLES: u32 = 3;

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel groups (`a e i o u y`), minus one for a silent trailing `e` unless
/// the word ends in consonant + `le`. Never less than 1.
pub fn count_syllables(word: &str) -> u32 {
    let lower: Vec<char> = word.to_lowercase().chars().collect();
    let mut groups = 0u32;
    let mut in_group = false;
    for &c in &lower {
        let vowel = is_vowel(c);
        if vowel && !in_group {
            groups += 1;
        }
        in_group = vowel;
    }

    let n = lower.len();
    if n > 0 && lower[n - 1] == 'e' {
        let consonant_le = n >= 3
            && lower[n - 2] == 'l'
            && lower[n - 3].is_alphabetic()
            && !is_vowel(lower[n - 3]);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

/// The three indices computed from aggregate ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Indices {
    pub fog: f64,
    pub flesch: f64,
    pub fk: f64,
}

pub fn gunning_fog(words_per_sentence: f64, complex_pct: f64) -> f64 {
    0.4 * (words_per_sentence + complex_pct)
}

pub fn flesch_reading_ease(words_per_sentence: f64, syllables_per_word: f64) -> f64 {
    206.835 - 1.015 * words_per_sentence - 84.6 * syllables_per_word
}

pub fn flesch_kincaid(words_per_sentence: f64, syllables_per_word: f64) -> f64 {
    0.39 * words_per_sentence + 11.8 * syllables_per_word - 15.59
}

pub fn report_from_aggregates(
    words_per_sentence: f64,
    syllables_per_word: f64,
    complex_pct: f64,
) -> Indices {
    Indices {
        fog: gunning_fog(words_per_sentence, complex_pct),
        flesch: flesch_reading_ease(words_per_sentence, syllables_per_word),
        fk: flesch_kincaid(words_per_sentence, syllables_per_word),
    }
}

/// The ten-row metric panel, serialized under its table row names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityReport {
    #[serde(rename = "Characters")]
    pub characters: u64,
    #[serde(rename = "Words")]
    pub words: u64,
    #[serde(rename = "Unique Words")]
    pub unique_words: u64,
    #[serde(rename = "Complex Word %")]
    pub complex_pct: f64,
    #[serde(rename = "Avg. Syllables / Word")]
    pub syllables_per_word: f64,
    #[serde(rename = "Sentences")]
    pub sentences: u64,
    #[serde(rename = "Avg. Words/ Sentence")]
    pub words_per_sentence: f64,
    #[serde(rename = "Fog grade level")]
    pub fog: f64,
    #[serde(rename = "Flesch reading ease")]
    pub flesch: f64,
    #[serde(rename = "Flesch-Kincaid level")]
    pub fk: f64,
    #[serde(rename = "Syllables")]
    pub syllables: u64,
    #[serde(rename = "Complex Words")]
    pub complex_words: u64,
}

#[derive(Debug, Default, Clone, Copy)]
struct Sums {
    characters: u64,
    words: u64,
    syllables: u64,
    complex: u64,
    sentences: u64,
}

impl Sums {
    fn merge(self, other: Sums) -> Sums {
        Sums {
            characters: self.characters + other.characters,
            words: self.words + other.words,
            syllables: self.syllables + other.syllables,
            complex: self.complex + other.complex,
            sentences: self.sentences + other.sentences,
        }
    }
}

fn caption_sums(raw: &str) -> Sums {
    let tokenized = tokenize::tokenize(raw);
    let mut sums = Sums {
        characters: tokenized.char_count as u64,
        words: tokenized.tokens.len() as u64,
        sentences: tokenize::split_sentences(raw).len() as u64,
        ..Sums::default()
    };
    for token in &tokenized.tokens {
        let syllables = count_syllables(token);
        sums.syllables += u64::from(syllables);
        sums.complex += u64::from(syllables >= COMPLEX_SYLLABLES);
    }
    sums
}

pub fn report(corpus: &Corpus) -> Result<ReadabilityReport> {
    let sums = corpus
        .records()
        .par_iter()
        .map(|record| {
            record
                .captions
                .iter()
                .map(|c| caption_sums(&c.raw))
                .fold(Sums::default(), Sums::merge)
        })
        .reduce(Sums::default, Sums::merge);

    if sums.words == 0 {
        return Err(Error::Degenerate("corpus has no words".into()));
    }
    if sums.sentences == 0 {
        return Err(Error::Degenerate("corpus has no sentences".into()));
    }

    let unique_words = corpus
        .captions()
        .flat_map(|c| tokenize::tokens(&c.raw))
        .collect::<HashSet<_>>()
        .len() as u64;

    let words = sums.words as f64;
    let words_per_sentence = words / sums.sentences as f64;
    let syllables_per_word = sums.syllables as f64 / words;
    let complex_pct = 100.0 * sums.complex as f64 / words;
    let indices = report_from_aggregates(words_per_sentence, syllables_per_word, complex_pct);

    Ok(ReadabilityReport {
        characters: sums.characters,
        words: sums.words,
        unique_words,
        complex_pct,
        syllables_per_word,
        sentences: sums.sentences,
        words_per_sentence,
        fog: indices.fog,
        flesch: indices.flesch,
        fk: indices.fk,
        syllables: sums.syllables,
        complex_words: sums.complex,
    })
}

/// Renders reports side by side, one column per labelled report.
pub fn comparison_table(columns: &[(String, ReadabilityReport)]) -> String {
    type Row = (&'static str, fn(&ReadabilityReport) -> String);
    let rows: [Row; 10] = [
        ("Characters", |r| r.characters.to_string()),
        ("Words", |r| r.words.to_string()),
        ("Unique Words", |r| r.unique_words.to_string()),
        ("Complex Word %", |r| format!("{:.2}", r.complex_pct)),
        ("Avg. Syllables / Word", |r| {
            format!("{:.2}", r.syllables_per_word)
        }),
        ("Sentences", |r| r.sentences.to_string()),
        ("Avg. Words/ Sentence", |r| {
            format!("{:.2}", r.words_per_sentence)
        }),
        ("Fog grade level", |r| format!("{:.2}", r.fog)),
        ("Flesch reading ease", |r| format!("{:.2}", r.flesch)),
        ("Flesch-Kincaid level", |r| format!("{:.2}", r.fk)),
    ];

    let label_width = rows.iter().map(|(name, _)| name.len()).max().unwrap_or(0);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|(_, get)| columns.iter().map(|(_, r)| get(r)).collect())
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, (name, _))| {
            cells
                .iter()
                .map(|row| row[i].len())
                .chain(std::iter::once(name.len()))
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut out = String::new();
    let _ = write!(out, "{:<label_width$}", "Counts");
    for ((name, _), w) in columns.iter().zip(&widths) {
        let _ = write!(out, "  {name:>w$}");
    }
    out.push('\n');
    for ((label, _), row) in rows.iter().zip(&cells) {
        let _ = write!(out, "{label:<label_width$}");
        for (cell, w) in row.iter().zip(&widths) {
            let _ = write!(out, "  {cell:>w$}");
        }
        out.push('\n');
    }
    out
}
