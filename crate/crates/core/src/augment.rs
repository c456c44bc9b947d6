//! MWE-augmented MT training corpora: appends bilingual MWE pairs to a
//! parallel corpus as extra sentence pairs, optionally BPE-encoding them,
//! and applies a seeded shuffle to both sides in lockstep.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bpe::{BpeEncoder, BpeModel, Vocabulary};
use crate::corpus::{BilingualMwePair, ParallelCorpus};
use crate::error::{Error, Result};

/// How appended MWE pairs are written: verbatim, or segmented with the
/// corpus BPE models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MweMode {
    RawToken,
    BpeEncoded,
}

impl MweMode {
    pub fn parse(name: &str) -> Option<MweMode> {
        match name {
            "raw" => Some(MweMode::RawToken),
            "bpe" => Some(MweMode::BpeEncoded),
            _ => None,
        }
    }
}

/// Augmentation settings. `shuffle_seed: None` keeps corpus order with the
/// appended pairs last.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentConfig {
    pub mwe_mode: MweMode,
    pub shuffle_seed: Option<u64>,
    pub vocab_threshold: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig { mwe_mode: MweMode::RawToken, shuffle_seed: None, vocab_threshold: 0 }
    }
}

/// BPE model plus the training-side vocabulary used for threshold
/// re-splitting of rare subwords.
pub struct BpeContext<'a> {
    pub model: &'a BpeModel,
    pub vocabulary: &'a Vocabulary,
}

/// Appends `pairs` to `train` as aligned sentence pairs.
///
/// The training lines pass through untouched (in BPE mode they are assumed
/// to be encoded already); only the appended MWE lines are segmented. With
/// a seed set, one deterministic permutation is applied identically to both
/// sides, so line i of the source always faces its original target.
pub fn augment_corpus(
    train: &ParallelCorpus,
    pairs: &[BilingualMwePair],
    config: &AugmentConfig,
    bpe_src: Option<&BpeContext<'_>>,
    bpe_tgt: Option<&BpeContext<'_>>,
) -> Result<ParallelCorpus> {
    let mut encoders = match config.mwe_mode {
        MweMode::RawToken => None,
        MweMode::BpeEncoded => {
            let (Some(src_ctx), Some(tgt_ctx)) = (bpe_src, bpe_tgt) else {
                return Err(Error::usage(
                    "BPE-encoded augmentation requires BPE models for both sides",
                ));
            };
            Some((
                BpeEncoder::new(src_ctx.model, src_ctx.vocabulary, config.vocab_threshold),
                BpeEncoder::new(tgt_ctx.model, tgt_ctx.vocabulary, config.vocab_threshold),
            ))
        }
    };
    let mut source_lines = train.source_lines.clone();
    let mut target_lines = train.target_lines.clone();
    for pair in pairs {
        let (src, tgt) = match &mut encoders {
            None => (pair.source_mwe.clone(), pair.target_mwe.clone()),
            Some((src_enc, tgt_enc)) => {
                (src_enc.encode_line(&pair.source_mwe), tgt_enc.encode_line(&pair.target_mwe))
            }
        };
        source_lines.push(src.split_whitespace().map(str::to_string).collect());
        target_lines.push(tgt.split_whitespace().map(str::to_string).collect());
    }

    if let Some(seed) = config.shuffle_seed {
        let mut order: Vec<usize> = (0..source_lines.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        source_lines = order.iter().map(|&i| source_lines[i].clone()).collect();
        target_lines = order.iter().map(|&i| target_lines[i].clone()).collect();
    }

    Ok(ParallelCorpus { source_lines, target_lines })
}
