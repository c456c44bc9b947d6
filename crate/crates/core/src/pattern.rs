//! Continuous MWE candidate extraction by POS-class pattern matching.
//!
//! Patterns are sequences of tag-class atoms with bounded repetition, e.g.
//! `ADJ NOUN`, `NOUN+` or `ADJ{1,2} NOUN`. Matching is greedy per start
//! position per pattern: the longest span that matches wins. Candidates are
//! aggregated over the corpus by lowercased lemma sequence and pattern id.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::corpus::TaggedSentence;
use crate::error::{Error, Result};
use crate::tagset::{TagClass, TagsetMapping};

/// Hard cap on atom repetition; spans longer than this are implausible MWEs.
pub const MAX_REPEAT: u8 = 8;

/// One pattern element: a tag class with a repetition range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternAtom {
    pub tag_class: TagClass,
    pub min_repeat: u8,
    pub max_repeat: u8,
}

/// A validated POS pattern. The id is the normalized pattern text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosPattern {
    pub atoms: Vec<PatternAtom>,
    pub pattern_id: String,
}

impl PosPattern {
    /// True when the pattern may legally emit single-token spans (a lone
    /// atom of an MWE-denoting class such as IDIOM or a name type).
    pub fn allows_single_token(&self) -> bool {
        self.atoms.len() == 1 && self.atoms[0].tag_class.is_mwe_unit()
    }
}

/// An aggregated candidate: identity is (lemma_key, pattern_id); the surface
/// form is the first occurrence seen in corpus order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MweCandidate {
    pub lemma_key: String,
    pub surface: String,
    pub pattern_id: String,
    pub frequency: u64,
    pub span_length: usize,
}

/// A matched span: token range `[start, end)` plus the pattern that matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpanMatch<'p> {
    pub start: usize,
    pub end: usize,
    pub pattern_id: &'p str,
}

/// Parses a single pattern line.
///
/// Atoms are space-separated class names; a `+` suffix means repeat 1..=8
/// and `{m,n}` gives explicit bounds. A pattern must be able to match at
/// least two tokens unless it is a single atom of an MWE-denoting class.
pub fn parse_pattern(line: &str) -> Result<PosPattern> {
    let text = line.trim();
    if text.is_empty() {
        return Err(Error::data("empty pattern"));
    }
    let mut atoms = Vec::new();
    for raw in text.split_whitespace() {
        atoms.push(parse_atom(raw)?);
    }
    let max_total: u32 = atoms.iter().map(|a| a.max_repeat as u32).sum();
    let single_mwe = atoms.len() == 1 && atoms[0].tag_class.is_mwe_unit();
    if max_total < 2 && !single_mwe {
        return Err(Error::data(format!(
            "pattern {text:?} can only match single tokens and its class does not denote an MWE"
        )));
    }
    Ok(PosPattern { atoms, pattern_id: text.split_whitespace().collect::<Vec<_>>().join(" ") })
}

fn parse_atom(raw: &str) -> Result<PatternAtom> {
    let (class_name, min_repeat, max_repeat) = if let Some(class_name) = raw.strip_suffix('+') {
        (class_name, 1, MAX_REPEAT)
    } else if let Some(rest) = raw.strip_suffix('}') {
        let (class_name, bounds) = rest
            .split_once('{')
            .ok_or_else(|| Error::data(format!("malformed atom {raw:?}")))?;
        let (min_s, max_s) = bounds
            .split_once(',')
            .ok_or_else(|| Error::data(format!("malformed bounds in {raw:?}")))?;
        let min: u8 = min_s
            .trim()
            .parse()
            .map_err(|_| Error::data(format!("malformed bounds in {raw:?}")))?;
        let max: u8 = max_s
            .trim()
            .parse()
            .map_err(|_| Error::data(format!("malformed bounds in {raw:?}")))?;
        (class_name, min, max)
    } else {
        (raw, 1, 1)
    };
    if min_repeat < 1 || max_repeat < min_repeat || max_repeat > MAX_REPEAT {
        return Err(Error::data(format!(
            "bounds {min_repeat}..{max_repeat} in {raw:?} outside 1..={MAX_REPEAT}"
        )));
    }
    let tag_class = TagClass::parse(class_name)
        .ok_or_else(|| Error::data(format!("unknown class {class_name:?}")))?;
    Ok(PatternAtom { tag_class, min_repeat, max_repeat })
}

/// Parses a pattern file: one pattern per line, `#` comments, duplicate
/// patterns rejected.
pub fn parse_patterns<R: BufRead>(reader: R) -> Result<Vec<PosPattern>> {
    let mut patterns: Vec<PosPattern> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let pattern =
            parse_pattern(line).map_err(|e| Error::data(format!("line {}: {e}", idx + 1)))?;
        if patterns.iter().any(|p| p.pattern_id == pattern.pattern_id) {
            return Err(Error::data(format!(
                "line {}: duplicate pattern {:?}",
                idx + 1,
                pattern.pattern_id
            )));
        }
        patterns.push(pattern);
    }
    Ok(patterns)
}

/// Longest end position (exclusive) of a full pattern match starting at
/// `start`, computed over the set of positions reachable after each atom.
fn longest_match(classes: &[TagClass], start: usize, pattern: &PosPattern) -> Option<usize> {
    let mut reachable = vec![start];
    for atom in &pattern.atoms {
        let mut next = Vec::new();
        for &pos in &reachable {
            let mut q = pos;
            let mut taken = 0u8;
            while taken < atom.min_repeat && q < classes.len() && classes[q] == atom.tag_class {
                q += 1;
                taken += 1;
            }
            if taken < atom.min_repeat {
                continue;
            }
            next.push(q);
            while taken < atom.max_repeat && q < classes.len() && classes[q] == atom.tag_class {
                q += 1;
                taken += 1;
                next.push(q);
            }
        }
        next.sort_unstable();
        next.dedup();
        if next.is_empty() {
            return None;
        }
        reachable = next;
    }
    reachable.last().copied()
}

/// Matches all patterns against one sentence.
///
/// Per pattern and start position the longest match is kept (maximal
/// munch); overlapping spans from different patterns or start positions are
/// all retained. Spans of length 1 are only emitted for single-atom
/// patterns of MWE-denoting classes.
pub fn match_sentence<'p>(
    sentence: &TaggedSentence,
    patterns: &'p [PosPattern],
    mapping: &TagsetMapping,
) -> Vec<SpanMatch<'p>> {
    let classes: Vec<TagClass> =
        sentence.tokens.iter().map(|t| mapping.map_tag(&t.pos)).collect();
    let mut spans = Vec::new();
    for start in 0..classes.len() {
        for pattern in patterns {
            if let Some(end) = longest_match(&classes, start, pattern) {
                if end - start >= 2 || pattern.allows_single_token() {
                    spans.push(SpanMatch { start, end, pattern_id: &pattern.pattern_id });
                }
            }
        }
    }
    spans
}

#[derive(Default)]
struct CandidateAgg {
    // key -> (surface of first occurrence, frequency, span length)
    map: HashMap<(String, String), (String, u64, usize)>,
}

impl CandidateAgg {
    fn add_sentence(&mut self, sentence: &TaggedSentence, spans: &[SpanMatch<'_>]) {
        for span in spans {
            let toks = &sentence.tokens[span.start..span.end];
            let lemma_key = toks
                .iter()
                .map(|t| t.lemma.to_lowercase())
                .collect::<Vec<_>>()
                .join(" ");
            let key = (lemma_key, span.pattern_id.to_string());
            let entry = self.map.entry(key).or_insert_with(|| {
                let surface =
                    toks.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ");
                (surface, 0, span.end - span.start)
            });
            entry.1 += 1;
        }
    }

    // Merge must stay order-dependent only in which surface form survives:
    // `self` is the earlier shard, so its first occurrence wins.
    fn merge(&mut self, later: CandidateAgg) {
        for (key, (surface, freq, len)) in later.map {
            self.map
                .entry(key)
                .and_modify(|e| e.1 += freq)
                .or_insert((surface, freq, len));
        }
    }

    fn finish(self, min_freq: u64) -> Vec<MweCandidate> {
        let mut out: Vec<MweCandidate> = self
            .map
            .into_iter()
            .filter(|(_, (_, freq, _))| *freq >= min_freq)
            .map(|((lemma_key, pattern_id), (surface, frequency, span_length))| MweCandidate {
                lemma_key,
                surface,
                pattern_id,
                frequency,
                span_length,
            })
            .collect();
        out.sort_by(|a, b| {
            b.frequency
                .cmp(&a.frequency)
                .then_with(|| a.lemma_key.cmp(&b.lemma_key))
                .then_with(|| a.pattern_id.cmp(&b.pattern_id))
        });
        out
    }
}

/// Extracts aggregated MWE candidates from a tagged corpus.
///
/// Candidates are keyed by (lowercased lemma sequence, pattern id); spans
/// are counted corpus-wide and everything under `min_freq` is dropped.
/// Output order is frequency-descending, then lemma key, then pattern id.
pub fn extract_candidates(
    corpus: &[TaggedSentence],
    patterns: &[PosPattern],
    mapping: &TagsetMapping,
    min_freq: u64,
) -> Vec<MweCandidate> {
    // Shards are merged in corpus order so surfaces and counts are
    // independent of the worker count.
    let agg = corpus
        .par_chunks(256)
        .map(|chunk| {
            let mut local = CandidateAgg::default();
            for sentence in chunk {
                let spans = match_sentence(sentence, patterns, mapping);
                local.add_sentence(sentence, &spans);
            }
            local
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|mut acc, shard| {
            acc.merge(shard);
            acc
        })
        .unwrap_or_default();
    agg.finish(min_freq)
}

/// Writes candidates as TSV: `lemma_key<TAB>surface<TAB>pattern_id<TAB>frequency`.
pub fn write_candidates<W: Write>(candidates: &[MweCandidate], writer: &mut W) -> Result<()> {
    for c in candidates {
        writeln!(writer, "{}\t{}\t{}\t{}", c.lemma_key, c.surface, c.pattern_id, c.frequency)?;
    }
    Ok(())
}

/// Reads a candidate TSV written by [`write_candidates`].
pub fn read_candidates<R: BufRead>(reader: R) -> Result<Vec<MweCandidate>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::data(format!(
                "line {}: expected 4 tab-separated fields, got {}",
                idx + 1,
                fields.len()
            )));
        }
        let frequency: u64 = fields[3].parse().map_err(|_| {
            Error::data(format!("line {}: malformed frequency {:?}", idx + 1, fields[3]))
        })?;
        out.push(MweCandidate {
            lemma_key: crate::corpus::nfc(fields[0]),
            surface: crate::corpus::nfc(fields[1]),
            pattern_id: fields[2].to_string(),
            frequency,
            span_length: fields[0].split_whitespace().count(),
        });
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Exhaustive reference matcher used by tests: enumerates every repeat
    //! expansion of every pattern and checks each one at each start
    //! position, keeping the longest per (pattern, start).

    use super::*;

    fn expansions(pattern: &PosPattern) -> Vec<Vec<TagClass>> {
        let mut seqs: Vec<Vec<TagClass>> = vec![Vec::new()];
        for atom in &pattern.atoms {
            let mut next = Vec::new();
            for seq in &seqs {
                for repeat in atom.min_repeat..=atom.max_repeat {
                    let mut s = seq.clone();
                    for _ in 0..repeat {
                        s.push(atom.tag_class);
                    }
                    next.push(s);
                }
            }
            seqs = next;
        }
        seqs
    }

    pub fn match_sentence<'p>(
        sentence: &TaggedSentence,
        patterns: &'p [PosPattern],
        mapping: &TagsetMapping,
    ) -> Vec<SpanMatch<'p>> {
        let classes: Vec<TagClass> =
            sentence.tokens.iter().map(|t| mapping.map_tag(&t.pos)).collect();
        let mut spans = Vec::new();
        for start in 0..classes.len() {
            for pattern in patterns {
                let mut best: Option<usize> = None;
                for expansion in expansions(pattern) {
                    let end = start + expansion.len();
                    if end <= classes.len() && classes[start..end] == expansion[..] {
                        best = Some(best.map_or(end, |b: usize| b.max(end)));
                    }
                }
                if let Some(end) = best {
                    if end - start >= 2 || pattern.allows_single_token() {
                        spans.push(SpanMatch { start, end, pattern_id: &pattern.pattern_id });
                    }
                }
            }
        }
        spans
    }

    pub fn extract_candidates(
        corpus: &[TaggedSentence],
        patterns: &[PosPattern],
        mapping: &TagsetMapping,
        min_freq: u64,
    ) -> Vec<MweCandidate> {
        let mut agg = CandidateAgg::default();
        for sentence in corpus {
            let spans = match_sentence(sentence, patterns, mapping);
            agg.add_sentence(sentence, &spans);
        }
        agg.finish(min_freq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TaggedToken;
    use proptest::prelude::*;

    fn tok(surface: &str, pos: &str) -> TaggedToken {
        TaggedToken { surface: surface.to_string(), pos: pos.to_string(), lemma: surface.to_string() }
    }

    fn sentence(id: usize, toks: &[(&str, &str)]) -> TaggedSentence {
        TaggedSentence {
            sentence_id: id,
            tokens: toks.iter().map(|(s, p)| tok(s, p)).collect(),
        }
    }

    fn bnc() -> TagsetMapping {
        TagsetMapping::bnc()
    }

    #[test]
    fn parses_adj_noun() {
        let p = parse_pattern("ADJ NOUN").unwrap();
        assert_eq!(p.atoms.len(), 2);
        assert!(p.atoms.iter().all(|a| a.min_repeat == 1 && a.max_repeat == 1));
        assert_eq!(p.pattern_id, "ADJ NOUN");
    }

    #[test]
    fn parses_plus_repetition() {
        let p = parse_pattern("NOUN+").unwrap();
        assert_eq!(p.atoms.len(), 1);
        assert_eq!(p.atoms[0].min_repeat, 1);
        assert_eq!(p.atoms[0].max_repeat, MAX_REPEAT);
    }

    #[test]
    fn parses_single_idiom_atom() {
        let p = parse_pattern("IDIOM").unwrap();
        assert!(p.allows_single_token());
    }

    #[test]
    fn rejects_unmatchable_single_atom() {
        assert!(parse_pattern("NOUN").is_err());
        assert!(parse_pattern("PREP{1,1}").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_pattern("").is_err());
        assert!(parse_pattern("NOMEN NOUN").is_err());
        assert!(parse_pattern("NOUN{2,1}").is_err());
        assert!(parse_pattern("NOUN{0,3}").is_err());
        assert!(parse_pattern("NOUN{1,9}").is_err());
        assert!(parse_pattern("NOUN{1,").is_err());
    }

    #[test]
    fn explicit_bounds_parse() {
        let p = parse_pattern("ADJ{1,2} NOUN").unwrap();
        assert_eq!(p.atoms[0].min_repeat, 1);
        assert_eq!(p.atoms[0].max_repeat, 2);
    }

    #[test]
    fn duplicate_pattern_rejected() {
        let err = parse_patterns("ADJ NOUN\nADJ  NOUN\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn matches_adj_noun_span() {
        let patterns = vec![parse_pattern("ADJ NOUN").unwrap()];
        let s = sentence(0, &[("european", "AJ0"), ("commission", "NN1")]);
        let spans = match_sentence(&s, &patterns, &bnc());
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].start, spans[0].end), (0, 2));
    }

    #[test]
    fn no_match_without_adjective() {
        let patterns = vec![parse_pattern("ADJ NOUN").unwrap()];
        let s = sentence(0, &[("the", "AT0"), ("house", "NN1")]);
        assert!(match_sentence(&s, &patterns, &bnc()).is_empty());
    }

    #[test]
    fn greedy_longest_match_wins() {
        let patterns = vec![parse_pattern("NOUN+").unwrap()];
        let s = sentence(0, &[("n1", "NN1"), ("n2", "NN1"), ("n3", "NN1")]);
        let spans = match_sentence(&s, &patterns, &bnc());
        // Start 0 takes the whole run; start 1 the remainder; the length-1
        // tail at start 2 is suppressed.
        assert!(spans.contains(&SpanMatch { start: 0, end: 3, pattern_id: "NOUN+" }));
        assert!(!spans.iter().any(|m| m.start == 0 && m.end == 2));
        assert!(!spans.iter().any(|m| m.end - m.start < 2));
    }

    #[test]
    fn backtracking_finds_split_that_greedy_consumption_would_miss() {
        // ADJ{1,2} ADJ NOUN on [ADJ, ADJ, NOUN]: the first atom must settle
        // for one repeat so the second can match.
        let patterns = vec![parse_pattern("ADJ{1,2} ADJ NOUN").unwrap()];
        let s = sentence(0, &[("a", "AJ0"), ("b", "AJ0"), ("c", "NN1")]);
        let spans = match_sentence(&s, &patterns, &bnc());
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].start, spans[0].end), (0, 3));
    }

    #[test]
    fn single_token_idiom_emitted() {
        let patterns = vec![parse_pattern("IDIOM").unwrap()];
        let lcmc = TagsetMapping::lcmc();
        let s = sentence(0, &[("簸箕", "i")]);
        let spans = match_sentence(&s, &patterns, &lcmc);
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].start, spans[0].end), (0, 1));
    }

    #[test]
    fn counts_and_threshold() {
        let patterns = vec![parse_pattern("ADJ NOUN").unwrap()];
        let mut corpus = Vec::new();
        for i in 0..3 {
            corpus.push(sentence(i, &[("european", "AJ0"), ("commission", "NN1"), ("met", "VVD")]));
        }
        let candidates = extract_candidates(&corpus, &patterns, &bnc(), 2);
        assert_eq!(candidates.len(), 1);
        assert_eq!(candidates[0].frequency, 3);
        assert_eq!(candidates[0].lemma_key, "european commission");
        assert_eq!(candidates[0].span_length, 2);
        assert!(extract_candidates(&corpus, &patterns, &bnc(), 4).is_empty());
    }

    #[test]
    fn lowercased_lemma_key_merges_case_variants() {
        let patterns = vec![parse_pattern("ADJ NOUN").unwrap()];
        let corpus = vec![
            sentence(0, &[("European", "AJ0"), ("Commission", "NN1")]),
            sentence(1, &[("european", "AJ0"), ("commission", "NN1")]),
        ];
        let candidates = extract_candidates(&corpus, &patterns, &bnc(), 1);
        assert_eq!(candidates.len(), 1);
        assert_eq!(candidates[0].frequency, 2);
        // Surface keeps the first occurrence.
        assert_eq!(candidates[0].surface, "European Commission");
    }

    #[test]
    fn candidate_tsv_round_trips() {
        let patterns = vec![parse_pattern("ADJ NOUN").unwrap()];
        let corpus = vec![
            sentence(0, &[("old", "AJ0"), ("house", "NN1")]),
            sentence(1, &[("old", "AJ0"), ("house", "NN1"), ("new", "AJ0"), ("car", "NN1")]),
        ];
        let candidates = extract_candidates(&corpus, &patterns, &bnc(), 1);
        let mut buf = Vec::new();
        write_candidates(&candidates, &mut buf).unwrap();
        let read = read_candidates(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(read, candidates);
    }

    // -- randomized equivalence with the exhaustive oracle ------------------

    prop_compose! {
        fn arb_pattern_text()(
            atoms in proptest::collection::vec(
                (
                    proptest::sample::select(vec!["NOUN", "VERB", "ADJ", "PREP", "IDIOM"]),
                    1u8..=3,
                    0u8..=2,
                ),
                1..=3,
            )
        ) -> String {
            atoms
                .iter()
                .map(|(class, min, extra)| format!("{class}{{{},{}}}", min, min + extra))
                .collect::<Vec<_>>()
                .join(" ")
        }
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<TaggedSentence>> {
        let tags = vec!["NN1", "VVD", "AJ0", "PRP", "i", "XX"];
        proptest::collection::vec(
            proptest::collection::vec(
                (proptest::sample::select(vec!["a", "b", "c", "d"]), proptest::sample::select(tags)),
                0..12,
            ),
            0..20,
        )
        .prop_map(|sents| {
            sents
                .into_iter()
                .enumerate()
                .map(|(i, toks)| TaggedSentence {
                    sentence_id: i,
                    tokens: toks
                        .into_iter()
                        .map(|(s, p)| tok(s, p))
                        .collect(),
                })
                .collect()
        })
    }

    fn test_mapping() -> TagsetMapping {
        TagsetMapping::load(
            "test",
            "NN1\tNOUN\nVVD\tVERB\nAJ0\tADJ\nPRP\tPREP\ni\tIDIOM\n".as_bytes(),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn matches_agree_with_exhaustive_oracle(
            corpus in arb_corpus(),
            pattern_texts in proptest::collection::vec(arb_pattern_text(), 1..=3),
        ) {
            let mapping = test_mapping();
            let patterns: Vec<PosPattern> = pattern_texts
                .iter()
                .filter_map(|t| parse_pattern(t).ok())
                .collect();
            prop_assume!(!patterns.is_empty());
            let got = extract_candidates(&corpus, &patterns, &mapping, 1);
            let expected = oracle::extract_candidates(&corpus, &patterns, &mapping, 1);
            prop_assert_eq!(got, expected);
        }

        // Sum of candidate frequencies per pattern equals the number of
        // matched spans for that pattern before any min_freq cut.
        #[test]
        fn aggregation_is_sound(
            corpus in arb_corpus(),
            pattern_text in arb_pattern_text(),
        ) {
            let mapping = test_mapping();
            prop_assume!(parse_pattern(&pattern_text).is_ok());
            let patterns = vec![parse_pattern(&pattern_text).unwrap()];
            let candidates = extract_candidates(&corpus, &patterns, &mapping, 1);
            let total: u64 = candidates.iter().map(|c| c.frequency).sum();
            let spans: usize = corpus
                .iter()
                .map(|s| match_sentence(s, &patterns, &mapping).len())
                .sum();
            prop_assert_eq!(total, spans as u64);
        }
    }
}
