//! Text-side tooling for image-caption corpora.
//!
//! The crate covers the whole caption pipeline that does not touch pixels:
//!
//! * [`corpus`] ingests caption files (RSICD-style JSON or JSONL), detection
//!   labels and model prediction files.
//! * [`tokenize`] is the single tokenizer every statistic is computed over.
//! * [`vocabstats`] and [`readability`] profile a corpus.
//! * [`bleu`] scores generated captions against human references.
//! * [`augment`] rewrites corpora: spelling correction and duplicate pruning,
//!   synonym expansion, and multi-hop back-translation.
//! * [`confusion`] evaluates generated captions without references by
//!   cross-tabulating scene keywords against known scene labels.
//! * [`discover`] builds an inverted index for conjunctive keyword search.
//! * [`cli`] wires everything into the `captext` binary.

pub mod augment;
pub mod bleu;
pub mod cli;
pub mod confusion;
pub mod corpus;
pub mod discover;
mod error;
mod lines;
pub mod readability;
pub mod tokenize;
pub mod vocabstats;

pub use error::{Error, Result};
