//! Directional lexical translation probabilities, estimated from a parallel
//! corpus with IBM-Model-1 EM (no NULL source token).
//!
//! Initialization is uniform over the target words co-occurring with each
//! source word; restricting to co-occurring pairs is equivalent to the full
//! cross-product for Model 1 because non-co-occurring pairs never receive
//! expected counts. Entries below `prune_epsilon` are dropped after the
//! final iteration only. The output file layout matches the Moses
//! `lex.e2f`/`lex.f2e` convention: `source target probability`.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::corpus::ParallelCorpus;
use crate::error::{Error, Result};

/// EM settings. Defaults follow common alignment-toolkit conventions:
/// 5 iterations, prune at 1e-6, lowercase both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub iterations: u32,
    pub prune_epsilon: f64,
    pub lowercase: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig { iterations: 5, prune_epsilon: 1e-6, lowercase: true }
    }
}

impl EmConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::usage("EM iterations must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.prune_epsilon) {
            return Err(Error::usage("prune_epsilon must be in [0,1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
struct Vocab {
    ids: HashMap<String, u32>,
    words: Vec<String>,
}

impl Vocab {
    fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.ids.insert(word.to_string(), id);
        self.words.push(word.to_string());
        id
    }

    fn get(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }
}

/// A sparse directional table p(target | source).
#[derive(Debug, Clone)]
pub struct LexProbTable {
    pub direction: String,
    lowercase: bool,
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    // Per source id; BTreeMap keeps iteration (and float summation) order
    // deterministic across runs.
    probs: Vec<BTreeMap<u32, f64>>,
}

impl LexProbTable {
    /// Stored probability for a word pair, 0 for absent pairs. Queries are
    /// lowercased when the table was trained with lowercasing.
    pub fn probability(&self, source_word: &str, target_word: &str) -> f64 {
        let (s, t);
        let (source_word, target_word) = if self.lowercase {
            s = source_word.to_lowercase();
            t = target_word.to_lowercase();
            (s.as_str(), t.as_str())
        } else {
            (source_word, target_word)
        };
        let (Some(si), Some(ti)) = (self.src_vocab.get(source_word), self.tgt_vocab.get(target_word))
        else {
            return 0.0;
        };
        self.probs[si as usize].get(&ti).copied().unwrap_or(0.0)
    }

    /// Iterates all stored entries as (source, target, probability).
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.probs.iter().enumerate().flat_map(move |(si, row)| {
            row.iter().map(move |(&ti, &p)| {
                (self.src_vocab.words[si].as_str(), self.tgt_vocab.words[ti as usize].as_str(), p)
            })
        })
    }

    pub fn len(&self) -> usize {
        self.probs.iter().map(|row| row.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Model-1 log-likelihood of a corpus under this table, with uniform
    /// alignment probability 1/|source sentence| per target token. Intended
    /// for unpruned tables; unseen pairs contribute -inf.
    pub fn log_likelihood(&self, corpus: &ParallelCorpus) -> f64 {
        let mut ll = 0.0;
        for (src, tgt) in corpus.source_lines.iter().zip(&corpus.target_lines) {
            if src.is_empty() || tgt.is_empty() {
                continue;
            }
            for t in tgt {
                let z: f64 = src.iter().map(|s| self.probability(s, t)).sum();
                ll += (z / src.len() as f64).ln();
            }
        }
        ll
    }
}

fn normalize_token(token: &str, lowercase: bool) -> String {
    if lowercase {
        token.to_lowercase()
    } else {
        token.to_string()
    }
}

/// Trains p(target | source) on a parallel corpus.
///
/// E-step posteriors are computed per sentence pair over all token pairs;
/// the M-step renormalizes per source word, so every source row sums to 1
/// (within 1e-9) before the final pruning pass. Training is deterministic:
/// shards are reduced in corpus order regardless of the worker count.
pub fn train_model1(corpus: &ParallelCorpus, config: &EmConfig) -> Result<LexProbTable> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::data("cannot train on an empty corpus"));
    }

    let mut src_vocab = Vocab::default();
    let mut tgt_vocab = Vocab::default();
    let pairs: Vec<(Vec<u32>, Vec<u32>)> = corpus
        .source_lines
        .iter()
        .zip(&corpus.target_lines)
        .filter(|(s, t)| !s.is_empty() && !t.is_empty())
        .map(|(s, t)| {
            (
                s.iter().map(|w| src_vocab.intern(&normalize_token(w, config.lowercase))).collect(),
                t.iter().map(|w| tgt_vocab.intern(&normalize_token(w, config.lowercase))).collect(),
            )
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::data("cannot train on a corpus with no non-empty sentence pairs"));
    }

    // Uniform init over co-occurring targets per source word.
    let mut probs: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); src_vocab.words.len()];
    for (src, tgt) in &pairs {
        for &s in src {
            let row = &mut probs[s as usize];
            for &t in tgt {
                row.insert(t, 0.0);
            }
        }
    }
    for row in &mut probs {
        let uniform = 1.0 / row.len() as f64;
        for value in row.values_mut() {
            *value = uniform;
        }
    }

    for _ in 0..config.iterations {
        // E-step: expected counts, sharded deterministically.
        let shards: Vec<Vec<BTreeMap<u32, f64>>> = pairs
            .par_chunks(512)
            .map(|chunk| {
                let mut counts: Vec<BTreeMap<u32, f64>> =
                    vec![BTreeMap::new(); src_vocab.words.len()];
                for (src, tgt) in chunk {
                    for &t in tgt {
                        let z: f64 =
                            src.iter().map(|&s| probs[s as usize][&t]).sum();
                        for &s in src {
                            *counts[s as usize].entry(t).or_insert(0.0) +=
                                probs[s as usize][&t] / z;
                        }
                    }
                }
                counts
            })
            .collect();
        let mut counts: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); src_vocab.words.len()];
        for shard in shards {
            for (row, shard_row) in counts.iter_mut().zip(shard) {
                for (t, c) in shard_row {
                    *row.entry(t).or_insert(0.0) += c;
                }
            }
        }

        // M-step: renormalize per source word.
        for (row, count_row) in probs.iter_mut().zip(counts) {
            let total: f64 = count_row.values().sum();
            *row = count_row.into_iter().map(|(t, c)| (t, c / total)).collect();
        }
    }

    if config.prune_epsilon > 0.0 {
        for row in &mut probs {
            row.retain(|_, p| *p >= config.prune_epsilon);
        }
    }

    Ok(LexProbTable {
        direction: "src-tgt".to_string(),
        lowercase: config.lowercase,
        src_vocab,
        tgt_vocab,
        probs,
    })
}

/// Writes the table as `source target probability` lines with 6-decimal
/// probabilities, sorted by source then target word.
pub fn write_table<W: Write>(table: &LexProbTable, writer: &mut W) -> Result<()> {
    let mut entries: Vec<(&str, &str, f64)> = table.iter().collect();
    entries.sort_by(|a, b| a.0.cmp(b.0).then_with(|| a.1.cmp(b.1)));
    for (s, t, p) in entries {
        writeln!(writer, "{s} {t} {p:.6}")?;
    }
    Ok(())
}

/// Reads a table written by [`write_table`] (or any Moses-style lex file).
pub fn read_table<R: BufRead>(reader: R, direction: &str) -> Result<LexProbTable> {
    let mut src_vocab = Vocab::default();
    let mut tgt_vocab = Vocab::default();
    let mut probs: Vec<BTreeMap<u32, f64>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::data(format!(
                "line {}: expected `source target probability`, got {:?}",
                idx + 1,
                line
            )));
        }
        let p: f64 = fields[2].parse().map_err(|_| {
            Error::data(format!("line {}: malformed probability {:?}", idx + 1, fields[2]))
        })?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::data(format!(
                "line {}: probability {p} outside [0,1]",
                idx + 1
            )));
        }
        let s = src_vocab.intern(&crate::corpus::nfc(fields[0]));
        let t = tgt_vocab.intern(&crate::corpus::nfc(fields[1]));
        if probs.len() <= s as usize {
            probs.resize(s as usize + 1, BTreeMap::new());
        }
        probs[s as usize].insert(t, p);
    }
    // Lexicon files carry no case information, so lookups are verbatim.
    Ok(LexProbTable { direction: direction.to_string(), lowercase: false, src_vocab, tgt_vocab, probs })
}
