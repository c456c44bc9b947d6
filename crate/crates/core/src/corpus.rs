//! Core data types and file I/O for tagged corpora, parallel corpora and
//! bilingual MWE pair files.
//!
//! Formats:
//! - tagged corpus: UTF-8 vertical text, `surface<TAB>pos<TAB>lemma` per
//!   token, blank line between sentences (the lemma column may be omitted,
//!   in which case the surface is used);
//! - parallel corpus: two plain-text files, one sentence per line,
//!   whitespace-tokenized, index-aligned;
//! - pair file: TSV `source<TAB>target<TAB>score`, score at 6 decimals.
//!
//! All text is normalized to NFC on ingest.

use std::io::{BufRead, Write};

use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};

use crate::error::{Error, Result};

/// One token of a morphologically tagged sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub surface: String,
    pub pos: String,
    pub lemma: String,
}

/// A tagged sentence; ids are assigned in reading order starting at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<TaggedToken>,
    pub sentence_id: usize,
}

/// An index-aligned pair of tokenized corpus sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub source_lines: Vec<Vec<String>>,
    pub target_lines: Vec<Vec<String>>,
}

impl ParallelCorpus {
    pub fn len(&self) -> usize {
        self.source_lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_lines.is_empty()
    }

    /// Swaps the two sides, e.g. to train the reverse lexicon direction.
    pub fn swapped(&self) -> ParallelCorpus {
        ParallelCorpus {
            source_lines: self.target_lines.clone(),
            target_lines: self.source_lines.clone(),
        }
    }
}

/// A source MWE, its aligned target MWE and an alignment score in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilingualMwePair {
    pub source_mwe: String,
    pub target_mwe: String,
    pub score: f64,
}

impl BilingualMwePair {
    /// Validates the pair invariants: non-empty sides without tabs and a
    /// score within `[0,1]`.
    pub fn new(source_mwe: impl Into<String>, target_mwe: impl Into<String>, score: f64) -> Result<Self> {
        let source_mwe = source_mwe.into();
        let target_mwe = target_mwe.into();
        if source_mwe.is_empty() || target_mwe.is_empty() {
            return Err(Error::data("MWE pair sides must be non-empty"));
        }
        if source_mwe.contains('\t') || target_mwe.contains('\t') {
            return Err(Error::data("MWE pair sides must not contain tab characters"));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::data(format!("pair score {score} outside [0,1]")));
        }
        Ok(BilingualMwePair { source_mwe, target_mwe, score })
    }
}

/// NFC-normalizes ingested text; a cheap no-op for already-normalized input.
pub(crate) fn nfc(s: &str) -> String {
    match is_nfc_quick(s.chars()) {
        IsNormalized::Yes => s.to_string(),
        _ => s.nfc().collect(),
    }
}

/// Streaming reader over a tagged corpus.
///
/// Yields one [`TaggedSentence`] per blank-line-delimited block; a trailing
/// block without a final blank line is still emitted. Memory use is bounded
/// by the largest sentence, not the corpus.
pub struct TaggedCorpusReader<R: BufRead> {
    reader: R,
    line_no: usize,
    next_id: usize,
    done: bool,
}

impl<R: BufRead> TaggedCorpusReader<R> {
    pub fn new(reader: R) -> Self {
        TaggedCorpusReader { reader, line_no: 0, next_id: 0, done: false }
    }

    fn parse_token(&self, line: &str) -> Result<TaggedToken> {
        let mut fields = line.split('\t');
        let surface = fields.next().unwrap_or("");
        let pos = fields.next();
        let lemma = fields.next();
        match pos {
            Some(pos) if !surface.is_empty() && !pos.is_empty() => Ok(TaggedToken {
                surface: nfc(surface),
                pos: nfc(pos),
                // Missing lemma column: fall back to the surface form.
                lemma: match lemma {
                    Some(l) if !l.is_empty() => nfc(l),
                    _ => nfc(surface),
                },
            }),
            _ => Err(Error::data(format!(
                "line {}: expected at least 2 tab-separated fields, got {:?}",
                self.line_no, line
            ))),
        }
    }
}

impl<R: BufRead> Iterator for TaggedCorpusReader<R> {
    type Item = Result<TaggedSentence>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut tokens = Vec::new();
        let mut buf = String::new();
        loop {
            buf.clear();
            match self.reader.read_line(&mut buf) {
                Ok(0) => {
                    self.done = true;
                    if tokens.is_empty() {
                        return None;
                    }
                    break;
                }
                Ok(_) => {
                    self.line_no += 1;
                    let line = buf.trim_end_matches(['\n', '\r']);
                    if line.is_empty() {
                        if tokens.is_empty() {
                            // Consecutive blank lines do not create empty sentences.
                            continue;
                        }
                        break;
                    }
                    match self.parse_token(line) {
                        Ok(tok) => tokens.push(tok),
                        Err(e) => {
                            self.done = true;
                            return Some(Err(e));
                        }
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
        let sentence = TaggedSentence { tokens, sentence_id: self.next_id };
        self.next_id += 1;
        Some(Ok(sentence))
    }
}

/// Reads a whole tagged corpus into memory. See [`TaggedCorpusReader`] for
/// the streaming variant.
pub fn parse_tagged_corpus<R: BufRead>(reader: R) -> Result<Vec<TaggedSentence>> {
    TaggedCorpusReader::new(reader).collect()
}

/// Serializes sentences in the same vertical format `parse_tagged_corpus` reads.
pub fn write_tagged_corpus<W: Write>(sentences: &[TaggedSentence], writer: &mut W) -> Result<()> {
    for (i, sentence) in sentences.iter().enumerate() {
        if i > 0 {
            writeln!(writer)?;
        }
        for tok in &sentence.tokens {
            writeln!(writer, "{}\t{}\t{}", tok.surface, tok.pos, tok.lemma)?;
        }
    }
    Ok(())
}

/// Reads two line-aligned corpus sides; errors when the line counts differ.
pub fn parse_parallel_corpus<R1: BufRead, R2: BufRead>(src: R1, tgt: R2) -> Result<ParallelCorpus> {
    let source_lines = read_token_lines(src)?;
    let target_lines = read_token_lines(tgt)?;
    if source_lines.len() != target_lines.len() {
        return Err(Error::data(format!(
            "parallel corpus line counts differ: {} vs {}",
            source_lines.len(),
            target_lines.len()
        )));
    }
    Ok(ParallelCorpus { source_lines, target_lines })
}

fn read_token_lines<R: BufRead>(reader: R) -> Result<Vec<Vec<String>>> {
    let mut lines = Vec::new();
    for line in reader.lines() {
        let line = line?;
        lines.push(line.split_whitespace().map(nfc).collect());
    }
    Ok(lines)
}

/// Writes one corpus side, one sentence per line, tokens joined by spaces.
pub fn write_token_lines<W: Write>(lines: &[Vec<String>], writer: &mut W) -> Result<()> {
    for tokens in lines {
        writeln!(writer, "{}", tokens.join(" "))?;
    }
    Ok(())
}

/// Writes pairs as TSV with the score printed at 6 decimals.
pub fn write_pairs<W: Write>(pairs: &[BilingualMwePair], writer: &mut W) -> Result<()> {
    for pair in pairs {
        writeln!(writer, "{}\t{}\t{:.6}", pair.source_mwe, pair.target_mwe, pair.score)?;
    }
    Ok(())
}

/// Reads a pair TSV written by [`write_pairs`].
pub fn read_pairs<R: BufRead>(reader: R) -> Result<Vec<BilingualMwePair>> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::data(format!(
                "line {}: expected 3 tab-separated fields, got {}",
                idx + 1,
                fields.len()
            )));
        }
        let score: f64 = fields[2].parse().map_err(|_| {
            Error::data(format!("line {}: malformed score field {:?}", idx + 1, fields[2]))
        })?;
        pairs.push(BilingualMwePair::new(nfc(fields[0]), nfc(fields[1]), score)
            .map_err(|e| Error::data(format!("line {}: {e}", idx + 1)))?);
    }
    Ok(pairs)
}
