//! Reference implementations shared by the oracle suites. Each is written
//! for clarity over speed and shares no code with the library.

#![allow(dead_code)]

use std::collections::BTreeMap;

pub const MAX_ORDER: usize = 4;

pub const SCENES: [&str; 8] = [
    "airport", "beach", "desert", "forest", "port", "railway", "river", "stadium",
];

/// Occurrences of `gram` in `tokens`, by scanning every window.
fn occurrences(tokens: &[u8], gram: &[u8]) -> u64 {
    if gram.len() > tokens.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len())
        .filter(|&i| &tokens[i..i + gram.len()] == gram)
        .count() as u64
}

/// Clipped matches and total for one candidate, visiting each distinct
/// n-gram once.
fn clipped(candidate: &[u8], refs: &[Vec<u8>], n: usize) -> (u64, u64) {
    if candidate.len() < n {
        return (0, 0);
    }
    let total = (candidate.len() - n + 1) as u64;
    let mut seen: Vec<&[u8]> = Vec::new();
    let mut matched = 0;
    for i in 0..=candidate.len() - n {
        let gram = &candidate[i..i + n];
        if seen.contains(&gram) {
            continue;
        }
        seen.push(gram);
        let max_ref = refs.iter().map(|r| occurrences(r, gram)).max().unwrap_or(0);
        matched += occurrences(candidate, gram).min(max_ref);
    }
    (matched, total)
}

fn closest_ref_len(c: usize, refs: &[Vec<u8>]) -> u64 {
    let mut best = refs[0].len();
    for r in refs {
        let (d, bd) = (r.len().abs_diff(c), best.abs_diff(c));
        if d < bd || (d == bd && r.len() < best) {
            best = r.len();
        }
    }
    best as u64
}

#[derive(Debug, PartialEq)]
pub struct BleuOracle {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub c: u64,
    pub r: u64,
    pub bleu: [f64; MAX_ORDER],
}

pub fn bleu(cands: &[Vec<u8>], refs: &[Vec<Vec<u8>>]) -> BleuOracle {
    let mut matches = [0; MAX_ORDER];
    let mut totals = [0; MAX_ORDER];
    let (mut c, mut r) = (0, 0);
    for (cand, rs) in cands.iter().zip(refs) {
        for n in 1..=MAX_ORDER {
            let (m, t) = clipped(cand, rs, n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
        c += cand.len() as u64;
        r += closest_ref_len(cand.len(), rs);
    }
    let bp = if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let mut out = [0.0; MAX_ORDER];
    for k in 1..=MAX_ORDER {
        let mut log_sum = 0.0;
        let mut zero = false;
        for n in 0..k {
            if matches[n] == 0 {
                zero = true;
                break;
            }
            log_sum += (matches[n] as f64 / totals[n] as f64).ln();
        }
        if !zero {
            out[k - 1] = bp * (log_sum / k as f64).exp();
        }
    }
    BleuOracle {
        matches,
        totals,
        c,
        r,
        bleu: out,
    }
}

pub fn fold(word: &str, enabled: bool) -> String {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if enabled && n > 3 && chars[n - 1] == 's' && chars[n - 2] != 's' {
        chars[..n - 1].iter().collect()
    } else {
        word.to_string()
    }
}

/// Whether a space-separated lower-case caption contains `word`.
pub fn mentions(caption: &str, word: &str, fold_plural: bool) -> bool {
    let target = fold(word, fold_plural);
    caption.split(' ').any(|t| fold(t, fold_plural) == target)
}

pub struct CrossTab {
    pub matrix: Vec<Vec<u64>>,
    pub attributes: Vec<Vec<u64>>,
    pub totals: Vec<u64>,
}

/// Nested-loop cross-tabulation. `images` holds the true scene index and
/// the caption, if any; scene triggers are the scene names.
pub fn cross_tab(
    scenes: &[&str],
    attributes: &[&str],
    images: &[(usize, Option<String>)],
    fold_plural: bool,
) -> CrossTab {
    let mut out = CrossTab {
        matrix: vec![vec![0; scenes.len()]; scenes.len()],
        attributes: vec![vec![0; scenes.len()]; attributes.len()],
        totals: vec![0; scenes.len()],
    };
    for (truth, caption) in images {
        let Some(caption) = caption else { continue };
        out.totals[*truth] += 1;
        for (j, scene) in scenes.iter().enumerate() {
            if mentions(caption, scene, fold_plural) {
                out.matrix[*truth][j] += 1;
            }
        }
        for (a, attr) in attributes.iter().enumerate() {
            if mentions(caption, attr, fold_plural) {
                out.attributes[a][*truth] += 1;
            }
        }
    }
    out
}

/// Ids of documents whose whitespace-separated words include every term.
pub fn full_scan(docs: &BTreeMap<String, String>, terms: &[&str]) -> Vec<String> {
    docs.iter()
        .filter(|(_, text)| {
            let words: Vec<&str> = text.split_whitespace().collect();
            terms.iter().all(|t| words.contains(t))
        })
        .map(|(id, _)| id.clone())
        .collect()
}
