//! Byte-pair encoding: learning merges from a token stream and applying
//! them with the `@@` continuation marker.
//!
//! Words are split into characters with an end-of-word marker on the last
//! symbol; the most frequent adjacent symbol pair is merged repeatedly
//! (ties broken by lexicographic pair order) until the requested number of
//! operations is reached or no pair occurs twice. The merges file is
//! subword-nmt compatible: one merge per line, two space-separated symbols.
//! Joining the encoded output and deleting `"@@ "` restores the input for
//! any line of single-space-separated tokens that do not themselves contain
//! the marker.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Marker appended to non-final subwords of a segmented word.
pub const CONTINUATION_MARKER: &str = "@@";

const END_OF_WORD: &str = "</w>";

/// An ordered list of learned merges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    n_ops: usize,
}

impl BpeModel {
    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn n_ops(&self) -> usize {
        self.n_ops
    }

    /// Reverse lookup: merged symbol back to its two parts.
    fn reverse_map(&self) -> HashMap<String, (String, String)> {
        self.merges
            .iter()
            .map(|(a, b)| (format!("{a}{b}"), (a.clone(), b.clone())))
            .collect()
    }
}

/// Learns `n_ops` merges from a stream of tokens (words).
///
/// Pair counts are maintained incrementally: each merge touches only the
/// words containing the merged pair, and the current best pair comes from
/// a lazily invalidated max-heap, so the cost per operation is bounded by
/// the affected words rather than the corpus.
pub fn learn_bpe<I, S>(tokens: I, n_ops: usize) -> BpeModel
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut word_freqs: HashMap<String, u64> = HashMap::new();
    for token in tokens {
        *word_freqs.entry(token.as_ref().to_string()).or_insert(0) += 1;
    }
    let mut words: Vec<(Vec<String>, u64)> = word_freqs
        .into_iter()
        .map(|(word, freq)| (symbolize(&word), freq))
        .collect();
    // Counts are order-independent sums and the tie-break is lexicographic,
    // but sorting keeps word ids reproducible under hash-map iteration
    // order changes.
    words.sort_by(|a, b| a.0.cmp(&b.0));

    let mut counts: HashMap<(String, String), u64> = HashMap::new();
    let mut containing: HashMap<(String, String), BTreeSet<usize>> = HashMap::new();
    for (id, (symbols, freq)) in words.iter().enumerate() {
        for window in symbols.windows(2) {
            let pair = (window[0].clone(), window[1].clone());
            *counts.entry(pair.clone()).or_insert(0) += freq;
            containing.entry(pair).or_default().insert(id);
        }
    }
    // Max-heap on (count, Reverse(pair)): highest count first, then the
    // lexicographically smallest pair. Entries go stale when a count
    // changes; every change pushes a fresh entry, so stale ones are
    // skipped by comparing against the live count.
    let mut heap: BinaryHeap<(u64, Reverse<(String, String)>)> =
        counts.iter().map(|(pair, &count)| (count, Reverse(pair.clone()))).collect();

    let mut merges = Vec::new();
    while merges.len() < n_ops {
        let best = loop {
            let Some((count, Reverse(pair))) = heap.pop() else { break None };
            if counts.get(&pair) == Some(&count) {
                break Some((pair, count));
            }
        };
        let Some((pair, count)) = best else { break };
        if count < 2 {
            break;
        }

        let affected = containing.remove(&pair).unwrap_or_default();
        for id in affected {
            let (symbols, freq) = &mut words[id];
            let freq = *freq;
            let before = symbols.clone();
            merge_in_place(symbols, &pair.0, &pair.1);
            // Delta-update the counts of every pair this word touches.
            let mut delta: HashMap<(String, String), i64> = HashMap::new();
            for window in before.windows(2) {
                *delta.entry((window[0].clone(), window[1].clone())).or_insert(0) -= freq as i64;
            }
            for window in symbols.windows(2) {
                *delta.entry((window[0].clone(), window[1].clone())).or_insert(0) += freq as i64;
            }
            for (changed, d) in delta {
                if d == 0 {
                    continue;
                }
                let count = counts.entry(changed.clone()).or_insert(0);
                *count = (*count as i64 + d) as u64;
                let count = *count;
                if count == 0 {
                    counts.remove(&changed);
                } else {
                    heap.push((count, Reverse(changed.clone())));
                }
                if d > 0 {
                    containing.entry(changed).or_default().insert(id);
                }
            }
        }
        debug_assert!(!counts.contains_key(&pair), "merged pair must leave no occurrences");
        counts.remove(&pair);
        merges.push(pair);
    }
    BpeModel { merges, n_ops }
}

fn symbolize(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut symbols: Vec<String> = Vec::with_capacity(chars.len());
    for (i, c) in chars.iter().enumerate() {
        if i + 1 == chars.len() {
            symbols.push(format!("{c}{END_OF_WORD}"));
        } else {
            symbols.push(c.to_string());
        }
    }
    symbols
}

/// Merges every non-overlapping (a, b) occurrence, left to right.
fn merge_in_place(symbols: &mut Vec<String>, a: &str, b: &str) {
    let mut i = 0;
    while i + 1 < symbols.len() {
        if symbols[i] == a && symbols[i + 1] == b {
            let merged = format!("{}{}", symbols[i], symbols[i + 1]);
            symbols[i] = merged;
            symbols.remove(i + 1);
        } else {
            i += 1;
        }
    }
}

/// Subword frequencies keyed by display form (markers stripped), suitable
/// as the `vocabulary` argument of [`apply_bpe`].
pub type Vocabulary = HashMap<String, u64>;

/// Builds a vocabulary by counting the subwords this model produces on a
/// corpus, with no threshold re-splitting.
pub fn vocabulary_from_lines<'a, I>(model: &BpeModel, lines: I) -> Vocabulary
where
    I: IntoIterator<Item = &'a str>,
{
    let mut vocab = Vocabulary::new();
    let empty = Vocabulary::new();
    let mut encoder = BpeEncoder::new(model, &empty, 0);
    for line in lines {
        for token in encoder.encode_line(line).split_whitespace() {
            let display = token.strip_suffix(CONTINUATION_MARKER).unwrap_or(token);
            *vocab.entry(display.to_string()).or_insert(0) += 1;
        }
    }
    vocab
}

/// Reads a `subword count` vocabulary file.
pub fn read_vocabulary<R: BufRead>(reader: R) -> Result<Vocabulary> {
    let mut vocab = Vocabulary::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(word), Some(count), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::data(format!("line {}: expected `subword count`", idx + 1)));
        };
        let count: u64 = count
            .parse()
            .map_err(|_| Error::data(format!("line {}: malformed count {count:?}", idx + 1)))?;
        *vocab.entry(word.to_string()).or_insert(0) += count;
    }
    Ok(vocab)
}

/// Writes a vocabulary as `subword count`, most frequent first.
pub fn write_vocabulary<W: Write>(vocab: &Vocabulary, writer: &mut W) -> Result<()> {
    let mut entries: Vec<(&str, u64)> = vocab.iter().map(|(w, &c)| (w.as_str(), c)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    for (word, count) in entries {
        writeln!(writer, "{word} {count}")?;
    }
    Ok(())
}

/// Reusable encoder over one model and vocabulary. Word segmentations are
/// cached, so encoding a corpus costs one merge replay per distinct word
/// rather than per token.
pub struct BpeEncoder<'a> {
    model: &'a BpeModel,
    vocabulary: &'a Vocabulary,
    vocab_threshold: u64,
    reverse: Option<HashMap<String, (String, String)>>,
    cache: HashMap<String, Vec<String>>,
}

impl<'a> BpeEncoder<'a> {
    pub fn new(model: &'a BpeModel, vocabulary: &'a Vocabulary, vocab_threshold: u64) -> Self {
        let reverse = if vocab_threshold > 0 && !vocabulary.is_empty() {
            Some(model.reverse_map())
        } else {
            None
        };
        BpeEncoder { model, vocabulary, vocab_threshold, reverse, cache: HashMap::new() }
    }

    /// Segments one line of whitespace-separated words.
    ///
    /// Merges replay in learning order; non-final subwords carry the `@@`
    /// marker. With a threshold and vocabulary set, a produced subword
    /// whose training frequency is below the threshold is split back into
    /// smaller units by undoing merges, keeping any part that clears the
    /// threshold (characters that cannot be split further are kept
    /// regardless).
    pub fn encode_line(&mut self, line: &str) -> String {
        let mut out: Vec<String> = Vec::new();
        for word in line.split_whitespace() {
            let mut symbols = match self.cache.get(word) {
                Some(symbols) => symbols.clone(),
                None => {
                    let mut symbols = symbolize(word);
                    for (a, b) in &self.model.merges {
                        if symbols.len() < 2 {
                            break;
                        }
                        merge_in_place(&mut symbols, a, b);
                    }
                    self.cache.insert(word.to_string(), symbols.clone());
                    symbols
                }
            };
            if let Some(reverse) = &self.reverse {
                symbols = resplit_rare(symbols, reverse, self.vocabulary, self.vocab_threshold);
            }
            let last = symbols.len() - 1;
            for (i, symbol) in symbols.into_iter().enumerate() {
                let display = symbol.strip_suffix(END_OF_WORD).unwrap_or(&symbol).to_string();
                if i < last {
                    out.push(format!("{display}{CONTINUATION_MARKER}"));
                } else {
                    out.push(display);
                }
            }
        }
        out.join(" ")
    }
}

/// One-shot form of [`BpeEncoder::encode_line`].
pub fn apply_bpe(model: &BpeModel, line: &str, vocabulary: &Vocabulary, vocab_threshold: u64) -> String {
    BpeEncoder::new(model, vocabulary, vocab_threshold).encode_line(line)
}

fn resplit_rare(
    symbols: Vec<String>,
    reverse: &HashMap<String, (String, String)>,
    vocabulary: &Vocabulary,
    threshold: u64,
) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    for symbol in symbols {
        split_symbol(&symbol, reverse, vocabulary, threshold, &mut out);
    }
    out
}

fn split_symbol(
    symbol: &str,
    reverse: &HashMap<String, (String, String)>,
    vocabulary: &Vocabulary,
    threshold: u64,
    out: &mut Vec<String>,
) {
    let display = symbol.strip_suffix(END_OF_WORD).unwrap_or(symbol);
    if vocabulary.get(display).copied().unwrap_or(0) >= threshold {
        out.push(symbol.to_string());
        return;
    }
    match reverse.get(symbol) {
        Some((left, right)) => {
            split_symbol(left, reverse, vocabulary, threshold, out);
            split_symbol(right, reverse, vocabulary, threshold, out);
        }
        None => out.push(symbol.to_string()),
    }
}

/// Writes one merge per line, two space-separated symbols.
pub fn write_merges<W: Write>(model: &BpeModel, writer: &mut W) -> Result<()> {
    for (a, b) in &model.merges {
        writeln!(writer, "{a} {b}")?;
    }
    Ok(())
}

/// Reads a merges file; a leading `#version:` header (as written by
/// subword-nmt) is tolerated.
pub fn read_merges<R: BufRead>(reader: R) -> Result<BpeModel> {
    let mut merges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || (idx == 0 && line.starts_with("#version:")) {
            continue;
        }
        let mut fields = line.split(' ');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::data(format!(
                "line {}: expected two space-separated symbols",
                idx + 1
            )));
        };
        merges.push((a.to_string(), b.to_string()));
    }
    let n_ops = merges.len();
    Ok(BpeModel { merges, n_ops })
}
