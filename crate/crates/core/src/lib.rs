//! Bilingual multi-word-expression (MWE) mining.
//!
//! The crate covers the corpus-side half of an MWE-augmented MT workflow:
//! extracting continuous MWE candidates from POS-tagged corpora, training
//! directional lexical translation tables with IBM-Model-1 EM, pairing and
//! scoring candidates across a parallel corpus, threshold filtering,
//! producing augmented training corpora (optionally BPE-encoded), and
//! corpus-level BLEU reports with the usual component breakdown.

pub mod align;
pub mod augment;
pub mod bleu;
pub mod bpe;
pub mod corpus;
pub mod error;
pub mod filter;
pub mod lexprob;
pub mod pattern;
pub mod pipeline;
pub mod tagset;

pub use error::{Error, Result};
