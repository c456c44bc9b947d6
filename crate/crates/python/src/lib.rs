//! Python bindings for the MWE mining pipeline.
//!
//! The module mirrors the core surface: candidate extraction from tagged
//! text, Model-1 lexicon training, alignment scoring, pair filtering, BPE
//! and corpus-level BLEU. See python/smoke_test.py at the repository root
//! for a worked example.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use mwemine_core::align as core_align;
use mwemine_core::augment as core_augment;
use mwemine_core::bleu as core_bleu;
use mwemine_core::bpe as core_bpe;
use mwemine_core::corpus as core_corpus;
use mwemine_core::filter as core_filter;
use mwemine_core::lexprob as core_lexprob;
use mwemine_core::pattern as core_pattern;
use mwemine_core::tagset as core_tagset;
use mwemine_core::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Usage(m) | Error::Data(m) => PyValueError::new_err(m),
        Error::Io(e) => PyIOError::new_err(e.to_string()),
    }
}

type PairTuple = (String, String, f64);

fn split_lines(lines: Vec<String>) -> Vec<Vec<String>> {
    lines
        .into_iter()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect()
}

fn join_lines(lines: &[Vec<String>]) -> Vec<String> {
    lines.iter().map(|l| l.join(" ")).collect()
}

fn stoplist(words: Vec<String>, language: &str) -> PyResult<core_align::StopwordList> {
    core_align::merge_stopwords(vec![Cursor::new(words.join("\n"))], language).map_err(to_py_err)
}

fn pairs_from_py(pairs: Vec<(String, String, f64)>) -> PyResult<Vec<core_corpus::BilingualMwePair>> {
    pairs
        .into_iter()
        .map(|(s, t, score)| core_corpus::BilingualMwePair::new(s, t, score).map_err(to_py_err))
        .collect()
}

/// POS-tag to pattern-class mapping.
#[pyclass]
struct TagsetMapping {
    inner: core_tagset::TagsetMapping,
}

#[pymethods]
impl TagsetMapping {
    /// One of the bundled mappings: "bnc", "stts" or "lcmc".
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        core_tagset::TagsetMapping::builtin(name)
            .map(|inner| TagsetMapping { inner })
            .ok_or_else(|| PyValueError::new_err(format!("unknown builtin tagset {name:?}")))
    }

    /// Loads a `tag<TAB>class` mapping file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        core_tagset::TagsetMapping::load(path, BufReader::new(file))
            .map(|inner| TagsetMapping { inner })
            .map_err(to_py_err)
    }

    fn map_tag(&self, tag: &str) -> String {
        self.inner.map_tag(tag).name().to_string()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }
}

/// Directional lexical translation probabilities p(target | source).
#[pyclass]
struct LexProbTable {
    inner: core_lexprob::LexProbTable,
}

#[pymethods]
impl LexProbTable {
    /// Trains Model-1 EM on aligned, whitespace-tokenized lines.
    #[staticmethod]
    #[pyo3(signature = (source_lines, target_lines, iterations=5, prune_epsilon=1e-6, lowercase=true))]
    fn train(
        source_lines: Vec<String>,
        target_lines: Vec<String>,
        iterations: u32,
        prune_epsilon: f64,
        lowercase: bool,
    ) -> PyResult<Self> {
        let source_lines = split_lines(source_lines);
        let target_lines = split_lines(target_lines);
        if source_lines.len() != target_lines.len() {
            return Err(PyValueError::new_err(format!(
                "parallel corpus line counts differ: {} vs {}",
                source_lines.len(),
                target_lines.len()
            )));
        }
        let corpus = core_corpus::ParallelCorpus { source_lines, target_lines };
        let config = core_lexprob::EmConfig { iterations, prune_epsilon, lowercase };
        core_lexprob::train_model1(&corpus, &config)
            .map(|inner| LexProbTable { inner })
            .map_err(to_py_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        core_lexprob::read_table(BufReader::new(file), "loaded")
            .map(|inner| LexProbTable { inner })
            .map_err(to_py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let mut writer = BufWriter::new(file);
        core_lexprob::write_table(&self.inner, &mut writer).map_err(to_py_err)
    }

    fn probability(&self, source_word: &str, target_word: &str) -> f64 {
        self.inner.probability(source_word, target_word)
    }

    fn entries(&self) -> Vec<(String, String, f64)> {
        self.inner.iter().map(|(s, t, p)| (s.to_string(), t.to_string(), p)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Learned BPE merge operations.
#[pyclass]
struct BpeModel {
    inner: core_bpe::BpeModel,
}

#[pymethods]
impl BpeModel {
    /// Learns merges from a list of tokens (words).
    #[staticmethod]
    fn learn(tokens: Vec<String>, n_ops: usize) -> Self {
        BpeModel { inner: core_bpe::learn_bpe(tokens, n_ops) }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        core_bpe::read_merges(BufReader::new(file))
            .map(|inner| BpeModel { inner })
            .map_err(to_py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let mut writer = BufWriter::new(file);
        core_bpe::write_merges(&self.inner, &mut writer).map_err(to_py_err)
    }

    /// Segments a line; `vocabulary` maps subwords to training frequencies
    /// for threshold re-splitting.
    #[pyo3(signature = (line, vocabulary=None, vocab_threshold=0))]
    fn apply(&self, line: &str, vocabulary: Option<HashMap<String, u64>>, vocab_threshold: u64) -> String {
        let vocabulary = vocabulary.unwrap_or_default();
        core_bpe::apply_bpe(&self.inner, line, &vocabulary, vocab_threshold)
    }

    fn merges(&self) -> Vec<(String, String)> {
        self.inner.merges().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.merges().len()
    }
}

/// BLEU components: per-order precisions, brevity penalty, ratio, overall.
#[pyclass]
struct BleuReport {
    inner: core_bleu::BleuReport,
}

#[pymethods]
impl BleuReport {
    #[getter]
    fn precisions(&self) -> [f64; 4] {
        self.inner.precisions
    }

    #[getter]
    fn brevity_penalty(&self) -> f64 {
        self.inner.brevity_penalty
    }

    #[getter]
    fn length_ratio(&self) -> f64 {
        self.inner.length_ratio
    }

    #[getter]
    fn overall(&self) -> f64 {
        self.inner.overall
    }

    fn __repr__(&self) -> String {
        let p = &self.inner.precisions;
        format!(
            "BleuReport(precisions=({:.1}, {:.1}, {:.1}, {:.1}), bp={:.3}, ratio={:.3}, overall={:.2})",
            p[0], p[1], p[2], p[3],
            self.inner.brevity_penalty, self.inner.length_ratio, self.inner.overall
        )
    }
}

/// Extracts MWE candidates from TreeTagger-style vertical text
/// (`surface<TAB>pos<TAB>lemma`, blank line between sentences). Returns
/// (lemma_key, surface, pattern_id, frequency) tuples.
#[pyfunction]
#[pyo3(signature = (tagged_text, patterns, tagset, min_freq=2))]
fn extract_candidates(
    tagged_text: &str,
    patterns: Vec<String>,
    tagset: &TagsetMapping,
    min_freq: u64,
) -> PyResult<Vec<(String, String, String, u64)>> {
    let corpus = core_corpus::parse_tagged_corpus(Cursor::new(tagged_text)).map_err(to_py_err)?;
    let patterns: Vec<core_pattern::PosPattern> = patterns
        .iter()
        .map(|p| core_pattern::parse_pattern(p).map_err(to_py_err))
        .collect::<PyResult<_>>()?;
    let candidates = core_pattern::extract_candidates(&corpus, &patterns, &tagset.inner, min_freq);
    Ok(candidates
        .into_iter()
        .map(|c| (c.lemma_key, c.surface, c.pattern_id, c.frequency))
        .collect())
}

/// Symmetric alignment score of two whitespace-tokenized phrases.
#[pyfunction]
#[pyo3(signature = (src_phrase, tgt_phrase, fwd_table, rev_table, stops_src=vec![], stops_tgt=vec![], length_penalty=true))]
#[allow(clippy::too_many_arguments)]
fn align_score(
    src_phrase: &str,
    tgt_phrase: &str,
    fwd_table: &LexProbTable,
    rev_table: &LexProbTable,
    stops_src: Vec<String>,
    stops_tgt: Vec<String>,
    length_penalty: bool,
) -> PyResult<f64> {
    let src: Vec<String> = src_phrase.split_whitespace().map(str::to_string).collect();
    let tgt: Vec<String> = tgt_phrase.split_whitespace().map(str::to_string).collect();
    let config = core_align::AlignmentConfig {
        length_penalty,
        ..core_align::AlignmentConfig::default()
    };
    core_align::align_score(
        &src,
        &tgt,
        &fwd_table.inner,
        &rev_table.inner,
        &stoplist(stops_src, "source")?,
        &stoplist(stops_tgt, "target")?,
        &config,
    )
    .map_err(to_py_err)
}

/// Pairs source and target MWEs co-occurring in aligned sentences. Returns
/// (source, target, score, cooccurrence_count), best score first.
#[pyfunction]
#[pyo3(signature = (source_lines, target_lines, src_mwes, tgt_mwes, fwd_table, rev_table,
                    stops_src=vec![], stops_tgt=vec![], length_penalty=true, keep_best_per_source=true))]
#[allow(clippy::too_many_arguments)]
fn align_corpus(
    source_lines: Vec<String>,
    target_lines: Vec<String>,
    src_mwes: Vec<String>,
    tgt_mwes: Vec<String>,
    fwd_table: &LexProbTable,
    rev_table: &LexProbTable,
    stops_src: Vec<String>,
    stops_tgt: Vec<String>,
    length_penalty: bool,
    keep_best_per_source: bool,
) -> PyResult<Vec<(String, String, f64, u64)>> {
    let source_lines = split_lines(source_lines);
    let target_lines = split_lines(target_lines);
    if source_lines.len() != target_lines.len() {
        return Err(PyValueError::new_err(format!(
            "parallel corpus line counts differ: {} vs {}",
            source_lines.len(),
            target_lines.len()
        )));
    }
    let corpus = core_corpus::ParallelCorpus { source_lines, target_lines };
    let as_candidates = |mwes: Vec<String>| -> Vec<core_pattern::MweCandidate> {
        mwes.into_iter()
            .map(|surface| core_pattern::MweCandidate {
                lemma_key: surface.to_lowercase(),
                span_length: surface.split_whitespace().count(),
                surface,
                pattern_id: "python".to_string(),
                frequency: 1,
            })
            .collect()
    };
    let config = core_align::AlignmentConfig {
        length_penalty,
        keep_best_per_source,
        ..core_align::AlignmentConfig::default()
    };
    let scored = core_align::align_corpus(
        &corpus,
        &as_candidates(src_mwes),
        &as_candidates(tgt_mwes),
        &fwd_table.inner,
        &rev_table.inner,
        &stoplist(stops_src, "source")?,
        &stoplist(stops_tgt, "target")?,
        &config,
    )
    .map_err(to_py_err)?;
    Ok(scored
        .into_iter()
        .map(|s| (s.pair.source_mwe, s.pair.target_mwe, s.pair.score, s.cooccurrence_count))
        .collect())
}

/// Keeps (source, target, score) pairs with score ≥ threshold. Returns the
/// kept pairs and a report dict.
#[pyfunction]
fn filter_pairs(
    py: Python<'_>,
    pairs: Vec<(String, String, f64)>,
    threshold: f64,
) -> PyResult<(Vec<PairTuple>, Py<PyAny>)> {
    let pairs = pairs_from_py(pairs)?;
    let (kept, report) = core_filter::filter_pairs(&pairs, threshold).map_err(to_py_err)?;
    let kept: Vec<(String, String, f64)> =
        kept.into_iter().map(|p| (p.source_mwe, p.target_mwe, p.score)).collect();
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("threshold", report.threshold)?;
    dict.set_item("input_count", report.input_count)?;
    dict.set_item("kept_count", report.kept_count)?;
    dict.set_item("retention_percent", report.retention_percent)?;
    Ok((kept, dict.into()))
}

/// 100·kept/input rounded half-up to one decimal.
#[pyfunction]
fn retention_percent(input_count: u64, kept_count: u64) -> PyResult<f64> {
    core_filter::retention_percent(input_count, kept_count).map_err(to_py_err)
}

/// Drops repeated (source, target) pairs, keeping the first occurrence.
#[pyfunction]
fn dedupe_pairs(pairs: Vec<(String, String, f64)>) -> PyResult<Vec<(String, String, f64)>> {
    let pairs = pairs_from_py(pairs)?;
    Ok(core_filter::dedupe_pairs(&pairs)
        .into_iter()
        .map(|p| (p.source_mwe, p.target_mwe, p.score))
        .collect())
}

/// Lowercased, deduplicated, sorted union of stop-word lists.
#[pyfunction]
fn merge_stopwords(lists: Vec<Vec<String>>) -> PyResult<Vec<String>> {
    let readers: Vec<Cursor<String>> =
        lists.into_iter().map(|words| Cursor::new(words.join("\n"))).collect();
    let merged = core_align::merge_stopwords(readers, "merged").map_err(to_py_err)?;
    Ok(merged.iter().map(str::to_string).collect())
}

/// Appends MWE pairs to a parallel corpus as extra lines; `mwe_mode` is
/// "raw" or "bpe", the seed applies one permutation to both sides.
#[pyfunction]
#[pyo3(signature = (source_lines, target_lines, pairs, mwe_mode="raw", shuffle_seed=None,
                    bpe_src=None, bpe_tgt=None, vocab_src=None, vocab_tgt=None, vocab_threshold=0))]
#[allow(clippy::too_many_arguments)]
fn augment_corpus(
    source_lines: Vec<String>,
    target_lines: Vec<String>,
    pairs: Vec<(String, String, f64)>,
    mwe_mode: &str,
    shuffle_seed: Option<u64>,
    bpe_src: Option<&BpeModel>,
    bpe_tgt: Option<&BpeModel>,
    vocab_src: Option<HashMap<String, u64>>,
    vocab_tgt: Option<HashMap<String, u64>>,
    vocab_threshold: u64,
) -> PyResult<(Vec<String>, Vec<String>)> {
    let train = core_corpus::ParallelCorpus {
        source_lines: split_lines(source_lines),
        target_lines: split_lines(target_lines),
    };
    let pairs = pairs_from_py(pairs)?;
    let mode = core_augment::MweMode::parse(mwe_mode)
        .ok_or_else(|| PyValueError::new_err(format!("mwe_mode must be raw or bpe, got {mwe_mode:?}")))?;
    let config = core_augment::AugmentConfig { mwe_mode: mode, shuffle_seed, vocab_threshold };
    let vocab_src = vocab_src.unwrap_or_default();
    let vocab_tgt = vocab_tgt.unwrap_or_default();
    let src_ctx = bpe_src
        .map(|m| core_augment::BpeContext { model: &m.inner, vocabulary: &vocab_src });
    let tgt_ctx = bpe_tgt
        .map(|m| core_augment::BpeContext { model: &m.inner, vocabulary: &vocab_tgt });
    let augmented =
        core_augment::augment_corpus(&train, &pairs, &config, src_ctx.as_ref(), tgt_ctx.as_ref())
            .map_err(to_py_err)?;
    Ok((join_lines(&augmented.source_lines), join_lines(&augmented.target_lines)))
}

/// Scores whitespace-tokenized candidate lines against reference lines.
#[pyfunction]
fn corpus_bleu(candidates: Vec<String>, references: Vec<String>) -> PyResult<BleuReport> {
    core_bleu::corpus_bleu(&split_lines(candidates), &split_lines(references))
        .map(|inner| BleuReport { inner })
        .map_err(to_py_err)
}

#[pymodule]
fn mwemine(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TagsetMapping>()?;
    m.add_class::<LexProbTable>()?;
    m.add_class::<BpeModel>()?;
    m.add_class::<BleuReport>()?;
    m.add_function(wrap_pyfunction!(extract_candidates, m)?)?;
    m.add_function(wrap_pyfunction!(align_score, m)?)?;
    m.add_function(wrap_pyfunction!(align_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(filter_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(retention_percent, m)?)?;
    m.add_function(wrap_pyfunction!(dedupe_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(merge_stopwords, m)?)?;
    m.add_function(wrap_pyfunction!(augment_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_bleu, m)?)?;
    m.add("CONTINUATION_MARKER", core_bpe::CONTINUATION_MARKER)?;
    Ok(())
}
