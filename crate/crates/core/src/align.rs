//! Pairing of monolingual MWE candidates across a parallel corpus, scored
//! from bidirectional lexical translation probabilities.
//!
//! Hypotheses are candidate occurrences co-occurring within a parallel
//! sentence pair. The score is the geometric mean of the two directional
//! coverages (mean over one side's content tokens of the best probability
//! into the other side), optionally damped by the content-length ratio
//! min/max. Stop words are excluded from the averaging side; phrases made
//! entirely of stop words fall back to all their tokens.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use rayon::prelude::*;

use crate::corpus::BilingualMwePair;
use crate::corpus::ParallelCorpus;
use crate::error::{Error, Result};
use crate::lexprob::LexProbTable;
use crate::pattern::MweCandidate;

/// A lowercased stop-word set for one language.
#[derive(Debug, Clone, Default)]
pub struct StopwordList {
    pub language: String,
    words: BTreeSet<String>,
}

impl StopwordList {
    pub fn empty(language: &str) -> StopwordList {
        StopwordList { language: language.to_string(), words: BTreeSet::new() }
    }

    pub fn contains(&self, word: &str) -> bool {
        if self.words.contains(word) {
            return true;
        }
        let lower = word.to_lowercase();
        lower != word && self.words.contains(&lower)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in sorted order, for deterministic serialization.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|w| w.as_str())
    }
}

/// Merges several one-word-per-line lists into a lowercased, deduplicated
/// stop-word set. Blank lines are skipped.
pub fn merge_stopwords<R: BufRead>(readers: Vec<R>, language: &str) -> Result<StopwordList> {
    let mut words = BTreeSet::new();
    for reader in readers {
        for line in reader.lines() {
            let line = line?;
            let word = line.trim();
            if !word.is_empty() {
                words.insert(crate::corpus::nfc(&word.to_lowercase()));
            }
        }
    }
    Ok(StopwordList { language: language.to_string(), words })
}

/// Alignment knobs. Defaults: length penalty on, no content-length filter,
/// keep only the best-scoring target per source MWE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentConfig {
    pub length_penalty: bool,
    pub min_content_tokens: usize,
    pub keep_best_per_source: bool,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig { length_penalty: true, min_content_tokens: 1, keep_best_per_source: true }
    }
}

/// A scored pair plus how often the two sides co-occurred in the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub pair: BilingualMwePair,
    pub cooccurrence_count: u64,
}

/// Content tokens of a phrase: tokens not in the stop list, or all tokens
/// when every token is a stop word.
fn content_tokens<'a>(phrase: &'a [String], stops: &StopwordList) -> Vec<&'a str> {
    let content: Vec<&str> =
        phrase.iter().map(|t| t.as_str()).filter(|t| !stops.contains(t)).collect();
    if content.is_empty() {
        phrase.iter().map(|t| t.as_str()).collect()
    } else {
        content
    }
}

/// Mean over the content tokens of `phrase_a` of the best translation
/// probability into any token of `phrase_b`. The table direction is a→b.
pub fn directional_coverage(
    phrase_a: &[String],
    phrase_b: &[String],
    table: &LexProbTable,
    stops_a: &StopwordList,
) -> Result<f64> {
    if phrase_a.is_empty() || phrase_b.is_empty() {
        return Err(Error::data("cannot score an empty phrase"));
    }
    let content = content_tokens(phrase_a, stops_a);
    let sum: f64 = content
        .iter()
        .map(|w| {
            phrase_b
                .iter()
                .map(|v| table.probability(w, v))
                .fold(0.0f64, f64::max)
        })
        .sum();
    Ok(sum / content.len() as f64)
}

/// Symmetric alignment score: geometric mean of both directional coverages,
/// multiplied by the content-length ratio min/max when the penalty is on.
pub fn align_score(
    src_phrase: &[String],
    tgt_phrase: &[String],
    fwd_table: &LexProbTable,
    rev_table: &LexProbTable,
    stops_src: &StopwordList,
    stops_tgt: &StopwordList,
    config: &AlignmentConfig,
) -> Result<f64> {
    let fwd = directional_coverage(src_phrase, tgt_phrase, fwd_table, stops_src)?;
    let rev = directional_coverage(tgt_phrase, src_phrase, rev_table, stops_tgt)?;
    let mut score = (fwd * rev).sqrt();
    if config.length_penalty {
        let a = content_tokens(src_phrase, stops_src).len() as f64;
        let b = content_tokens(tgt_phrase, stops_tgt).len() as f64;
        score *= a.min(b) / a.max(b);
    }
    Ok(score)
}

fn occurrence_key(tokens: &[&str]) -> String {
    tokens.join("\u{1f}")
}

/// Candidate occurrence index for one corpus side: lowercased surface token
/// sequences, deduplicated.
struct CandidateIndex {
    phrases: Vec<Vec<String>>,
    by_key: HashMap<String, usize>,
    max_len: usize,
}

impl CandidateIndex {
    fn new(candidates: &[MweCandidate]) -> CandidateIndex {
        let mut phrases: Vec<Vec<String>> = Vec::new();
        let mut by_key = HashMap::new();
        let mut max_len = 0;
        for c in candidates {
            let tokens: Vec<String> =
                c.surface.split_whitespace().map(|t| t.to_lowercase()).collect();
            if tokens.is_empty() {
                continue;
            }
            let key = occurrence_key(&tokens.iter().map(|t| t.as_str()).collect::<Vec<_>>());
            if by_key.contains_key(&key) {
                continue;
            }
            max_len = max_len.max(tokens.len());
            by_key.insert(key, phrases.len());
            phrases.push(tokens);
        }
        CandidateIndex { phrases, by_key, max_len }
    }

    /// Occurrence counts (with multiplicity) of indexed phrases in one
    /// lowercased sentence.
    fn occurrences(&self, tokens: &[String]) -> HashMap<usize, u64> {
        let mut counts = HashMap::new();
        for start in 0..tokens.len() {
            let longest = self.max_len.min(tokens.len() - start);
            for len in 1..=longest {
                let key = occurrence_key(
                    &tokens[start..start + len].iter().map(|t| t.as_str()).collect::<Vec<_>>(),
                );
                if let Some(&idx) = self.by_key.get(&key) {
                    *counts.entry(idx).or_insert(0) += 1;
                }
            }
        }
        counts
    }
}

/// Aligns candidate MWEs across the parallel corpus they were extracted from.
///
/// Every co-occurrence of a source and a target candidate inside one
/// sentence pair is a hypothesis; identical (source, target) hypotheses are
/// aggregated with their co-occurrence count and scored once via
/// [`align_score`]. Output is sorted by descending score, then source, then
/// target. Occurrences are located by lowercased surface form, so candidate
/// lists and corpus must come from the same text.
#[allow(clippy::too_many_arguments)]
pub fn align_corpus(
    corpus: &ParallelCorpus,
    src_candidates: &[MweCandidate],
    tgt_candidates: &[MweCandidate],
    fwd_table: &LexProbTable,
    rev_table: &LexProbTable,
    stops_src: &StopwordList,
    stops_tgt: &StopwordList,
    config: &AlignmentConfig,
) -> Result<Vec<ScoredPair>> {
    if config.min_content_tokens < 1 {
        return Err(Error::usage("min_content_tokens must be at least 1"));
    }
    let src_index = CandidateIndex::new(src_candidates);
    let tgt_index = CandidateIndex::new(tgt_candidates);

    // Content-length filter applies to hypothesis generation.
    let src_admissible: Vec<bool> = src_index
        .phrases
        .iter()
        .map(|p| content_tokens(p, stops_src).len() >= config.min_content_tokens)
        .collect();
    let tgt_admissible: Vec<bool> = tgt_index
        .phrases
        .iter()
        .map(|p| content_tokens(p, stops_tgt).len() >= config.min_content_tokens)
        .collect();

    let shards: Vec<HashMap<(usize, usize), u64>> = corpus
        .source_lines
        .par_chunks(256)
        .zip(corpus.target_lines.par_chunks(256))
        .map(|(src_chunk, tgt_chunk)| {
            let mut hypotheses: HashMap<(usize, usize), u64> = HashMap::new();
            for (src_line, tgt_line) in src_chunk.iter().zip(tgt_chunk) {
                let src_lc: Vec<String> = src_line.iter().map(|t| t.to_lowercase()).collect();
                let tgt_lc: Vec<String> = tgt_line.iter().map(|t| t.to_lowercase()).collect();
                let src_occ = src_index.occurrences(&src_lc);
                if src_occ.is_empty() {
                    continue;
                }
                let tgt_occ = tgt_index.occurrences(&tgt_lc);
                for (&si, &sc) in &src_occ {
                    if !src_admissible[si] {
                        continue;
                    }
                    for (&ti, &tc) in &tgt_occ {
                        if !tgt_admissible[ti] {
                            continue;
                        }
                        *hypotheses.entry((si, ti)).or_insert(0) += sc * tc;
                    }
                }
            }
            hypotheses
        })
        .collect();
    let mut hypotheses: HashMap<(usize, usize), u64> = HashMap::new();
    for shard in shards {
        for (key, count) in shard {
            *hypotheses.entry(key).or_insert(0) += count;
        }
    }

    let mut scored: Vec<ScoredPair> = Vec::with_capacity(hypotheses.len());
    for ((si, ti), cooccurrence_count) in hypotheses {
        let src_phrase = &src_index.phrases[si];
        let tgt_phrase = &tgt_index.phrases[ti];
        let score =
            align_score(src_phrase, tgt_phrase, fwd_table, rev_table, stops_src, stops_tgt, config)?;
        scored.push(ScoredPair {
            pair: BilingualMwePair {
                source_mwe: src_phrase.join(" "),
                target_mwe: tgt_phrase.join(" "),
                score,
            },
            cooccurrence_count,
        });
    }

    if config.keep_best_per_source {
        let mut best: HashMap<String, ScoredPair> = HashMap::new();
        for sp in scored {
            match best.get(&sp.pair.source_mwe) {
                Some(current)
                    if current.pair.score > sp.pair.score
                        || (current.pair.score == sp.pair.score
                            && current.pair.target_mwe <= sp.pair.target_mwe) => {}
                _ => {
                    best.insert(sp.pair.source_mwe.clone(), sp);
                }
            }
        }
        scored = best.into_values().collect();
    }

    scored.sort_by(|a, b| {
        b.pair
            .score
            .total_cmp(&a.pair.score)
            .then_with(|| a.pair.source_mwe.cmp(&b.pair.source_mwe))
            .then_with(|| a.pair.target_mwe.cmp(&b.pair.target_mwe))
    });
    Ok(scored)
}
