//! BLEU-1 through BLEU-4 with multiple references per candidate.
//!
//! Corpus mode sums clipped matches and candidate n-gram totals over all
//! candidates before dividing. Sentence mode applies the same definition to a
//! single candidate without smoothing, so a vanished n-gram order yields 0.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

/// Counts every contiguous n-gram of `tokens`.
pub fn ngram_counts<T: Hash + Eq>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

fn clipped_matches<T: Hash + Eq>(candidate: &[T], references: &[Vec<T>], n: usize) -> (u64, u64) {
    let cand = ngram_counts(candidate, n);
    let total: usize = cand.values().sum();
    if cand.is_empty() {
        return (0, 0);
    }
    let mut max_ref: HashMap<&[T], usize> = HashMap::with_capacity(cand.len());
    for reference in references {
        for (gram, count) in ngram_counts(reference, n) {
            if cand.contains_key(gram) {
                let slot = max_ref.entry(gram).or_insert(0);
                *slot = (*slot).max(count);
            }
        }
    }
    let matched: usize = cand
        .iter()
        .map(|(gram, &count)| count.min(max_ref.get(gram).copied().unwrap_or(0)))
        .sum();
    (matched as u64, total as u64)
}

fn check_shapes<T>(candidates: &[Vec<T>], references: &[Vec<Vec<T>>]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::Degenerate("no candidates to score".into()));
    }
    if candidates.len() != references.len() {
        return Err(Error::Config(format!(
            "{} candidates but {} reference sets",
            candidates.len(),
            references.len()
        )));
    }
    if let Some(idx) = references.iter().position(|refs| refs.is_empty()) {
        return Err(Error::Config(format!("candidate {idx} has no references")));
    }
    Ok(())
}

/// Corpus-level clipped matches and candidate n-gram total for order `n`.
pub fn modified_precision<T: Hash + Eq>(
    candidates: &[Vec<T>],
    references: &[Vec<Vec<T>>],
    n: usize,
) -> Result<(u64, u64)> {
    check_shapes(candidates, references)?;
    Ok(candidates
        .iter()
        .zip(references)
        .map(|(c, r)| clipped_matches(c, r, n))
        .fold((0, 0), |(m, t), (dm, dt)| (m + dm, t + dt)))
}

/// The reference length closest to `candidate_len`, ties to the shorter.
pub fn closest_ref_len<T>(candidate_len: usize, references: &[Vec<T>]) -> usize {
    references
        .iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(candidate_len), len))
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuResult {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    /// `matches[n] / totals[n]`, or 0 when there are no candidate n-grams.
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub candidate_len: u64,
    pub effective_ref_len: u64,
    /// `bleu[k - 1]` is BLEU-k.
    pub bleu: [f64; MAX_ORDER],
}

impl BleuResult {
    pub fn from_counts(
        matches: [u64; MAX_ORDER],
        totals: [u64; MAX_ORDER],
        candidate_len: u64,
        effective_ref_len: u64,
    ) -> Self {
        let mut precisions = [0.0; MAX_ORDER];
        for n in 0..MAX_ORDER {
            if totals[n] > 0 {
                precisions[n] = matches[n] as f64 / totals[n] as f64;
            }
        }
        let brevity_penalty = brevity_penalty(candidate_len, effective_ref_len);
        let mut bleu = [0.0; MAX_ORDER];
        let mut log_sum = 0.0;
        for k in 1..=MAX_ORDER {
            let p = precisions[k - 1];
            if p == 0.0 {
                break;
            }
            log_sum += p.ln();
            bleu[k - 1] = brevity_penalty * (log_sum / k as f64).exp();
        }
        BleuResult {
            matches,
            totals,
            precisions,
            brevity_penalty,
            candidate_len,
            effective_ref_len,
            bleu,
        }
    }

    /// Lowest n-gram order whose precision is zero, if any.
    pub fn vanished_order(&self) -> Option<usize> {
        self.precisions
            .iter()
            .position(|&p| p == 0.0)
            .map(|i| i + 1)
    }

    pub fn summary(&self) -> BleuSummary {
        BleuSummary {
            bleu1: self.bleu[0],
            bleu2: self.bleu[1],
            bleu3: self.bleu[2],
            bleu4: self.bleu[3],
            p1: self.precisions[0],
            p2: self.precisions[1],
            p3: self.precisions[2],
            p4: self.precisions[3],
            bp: self.brevity_penalty,
            c: self.candidate_len,
            r: self.effective_ref_len,
        }
    }
}

/// Flat report layout used by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuSummary {
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub bp: f64,
    pub c: u64,
    pub r: u64,
}

/// `1` when `c > r`, else `exp(1 - r/c)`.
pub fn brevity_penalty(candidate_len: u64, ref_len: u64) -> f64 {
    if candidate_len > ref_len {
        1.0
    } else if candidate_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / candidate_len as f64).exp()
    }
}

pub fn bleu_score<T: Hash + Eq>(
    candidates: &[Vec<T>],
    references: &[Vec<Vec<T>>],
) -> Result<BleuResult> {
    check_shapes(candidates, references)?;
    if let Some(idx) = candidates.iter().position(Vec::is_empty) {
        return Err(Error::Degenerate(format!("candidate {idx} has no tokens")));
    }

    let mut matches = [0u64; MAX_ORDER];
    let mut totals = [0u64; MAX_ORDER];
    let mut candidate_len = 0u64;
    let mut ref_len = 0u64;
    for (candidate, refs) in candidates.iter().zip(references) {
        for n in 1..=MAX_ORDER {
            let (m, t) = clipped_matches(candidate, refs, n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
        candidate_len += candidate.len() as u64;
        ref_len += closest_ref_len(candidate.len(), refs) as u64;
    }
    Ok(BleuResult::from_counts(
        matches,
        totals,
        candidate_len,
        ref_len,
    ))
}

/// Unsmoothed BLEU for one candidate.
pub fn sentence_bleu<T: Hash + Eq + Clone>(
    candidate: &[T],
    references: &[Vec<T>],
) -> Result<BleuResult> {
    bleu_score(&[candidate.to_vec()], &[references.to_vec()])
}
