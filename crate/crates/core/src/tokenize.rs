//! The canonical tokenizer and sentence splitter.
//!
//! Tokens are whitespace-separated words, lower-cased, with leading and
//! trailing punctuation removed. Hyphens and apostrophes inside a word are
//! kept, so `c-shaped` and `it's` are single tokens.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    pub tokens: Vec<String>,
    /// Letters and digits in the source text.
    pub char_count: usize,
}

fn is_edge_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Tokenizes `text` and counts its alphanumeric characters.
pub fn tokenize(text: &str) -> TokenizedSentence {
    TokenizedSentence {
        tokens: tokens(text),
        char_count: text.chars().filter(|c| c.is_alphanumeric()).count(),
    }
}

/// Token stream of `text` without the character count.
pub fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|word| {
            let lower = word.to_lowercase();
            let trimmed = lower.trim_matches(is_edge_punct);
            if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.to_string())
            }
        })
        .collect()
}

/// The normalized form of a caption: its tokens joined by single spaces.
///
/// Two captions differing only in case, spacing or surrounding punctuation
/// share a normalized form.
pub fn normalize(text: &str) -> String {
    tokens(text).join(" ")
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits on `.`, `!` or `?` when followed by whitespace or end of text.
///
/// Terminators are not part of the returned sentences and empty segments are
/// dropped, so a caption without terminators is exactly one sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((idx, c)) = chars.next() {
        if !is_terminator(c) {
            continue;
        }
        let at_boundary = match chars.peek() {
            None => true,
            Some((_, next)) => next.is_whitespace(),
        };
        if at_boundary {
            push_segment(&mut sentences, &text[start..idx]);
            start = idx + c.len_utf8();
        }
    }
    push_segment(&mut sentences, &text[start..]);
    sentences
}

fn push_segment(out: &mut Vec<String>, segment: &str) {
    let segment = segment.trim().trim_end_matches(is_terminator).trim();
    if !segment.is_empty() {
        out.push(segment.to_string());
    }
}
