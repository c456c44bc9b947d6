//! End-to-end pipeline: extract (both languages) → train-lex (both
//! directions) → align → filter (each threshold) → stats → optional
//! augment, driven by one TOML config.
//!
//! Every stage reads its inputs from disk, writes its artifact into the
//! output directory and appends a manifest line (stage, input hash, output
//! paths and hashes, counts). A stage whose recorded input hash matches and
//! whose outputs are intact is skipped, so reruns are cheap and deleting an
//! artifact regenerates only what depends on it.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::{align_corpus, merge_stopwords, AlignmentConfig, StopwordList};
use crate::augment::{augment_corpus, AugmentConfig, BpeContext, MweMode};
use crate::bpe::{read_merges, read_vocabulary, Vocabulary};
use crate::corpus::{
    parse_parallel_corpus, parse_tagged_corpus, read_pairs, write_pairs, write_token_lines,
    ParallelCorpus,
};
use crate::error::{Error, Result};
use crate::filter::{filter_pairs, FilterReport};
use crate::lexprob::{read_table, train_model1, write_table, EmConfig};
use crate::pattern::{extract_candidates, parse_patterns, read_candidates, write_candidates};
use crate::tagset::TagsetMapping;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub tagged_source: PathBuf,
    pub tagged_target: PathBuf,
    pub parallel_source: PathBuf,
    pub parallel_target: PathBuf,
    pub patterns_source: PathBuf,
    pub patterns_target: PathBuf,
    /// Builtin tagset name (`bnc`, `stts`, `lcmc`) or a mapping file path.
    pub tagset_source: String,
    pub tagset_target: String,
    pub stopwords_source: Vec<PathBuf>,
    pub stopwords_target: Vec<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractSettings {
    pub min_freq: u64,
}

impl Default for ExtractSettings {
    fn default() -> Self {
        ExtractSettings { min_freq: 2 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LexprobSettings {
    pub iterations: u32,
    pub prune_epsilon: f64,
    pub lowercase: bool,
}

impl Default for LexprobSettings {
    fn default() -> Self {
        let d = EmConfig::default();
        LexprobSettings {
            iterations: d.iterations,
            prune_epsilon: d.prune_epsilon,
            lowercase: d.lowercase,
        }
    }
}

impl LexprobSettings {
    pub fn em_config(&self) -> EmConfig {
        EmConfig {
            iterations: self.iterations,
            prune_epsilon: self.prune_epsilon,
            lowercase: self.lowercase,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignSettings {
    pub length_penalty: bool,
    pub min_content_tokens: usize,
    pub keep_best_per_source: bool,
}

impl Default for AlignSettings {
    fn default() -> Self {
        let d = AlignmentConfig::default();
        AlignSettings {
            length_penalty: d.length_penalty,
            min_content_tokens: d.min_content_tokens,
            keep_best_per_source: d.keep_best_per_source,
        }
    }
}

impl AlignSettings {
    pub fn alignment_config(&self) -> AlignmentConfig {
        AlignmentConfig {
            length_penalty: self.length_penalty,
            min_content_tokens: self.min_content_tokens,
            keep_best_per_source: self.keep_best_per_source,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSettings {
    pub thresholds: Vec<f64>,
}

impl Default for FilterSettings {
    fn default() -> Self {
        FilterSettings { thresholds: vec![0.70, 0.85] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSettings {
    pub mwe_mode: MweModeName,
    #[serde(default)]
    pub shuffle_seed: Option<u64>,
    #[serde(default)]
    pub vocab_threshold: u64,
    /// Which filtered pair file feeds the augmentation; must be one of the
    /// filter thresholds.
    pub threshold: f64,
    #[serde(default)]
    pub bpe_source_merges: Option<PathBuf>,
    #[serde(default)]
    pub bpe_target_merges: Option<PathBuf>,
    #[serde(default)]
    pub bpe_source_vocab: Option<PathBuf>,
    #[serde(default)]
    pub bpe_target_vocab: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum MweModeName {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "bpe")]
    Bpe,
}

impl MweModeName {
    fn mode(self) -> MweMode {
        match self {
            MweModeName::Raw => MweMode::RawToken,
            MweModeName::Bpe => MweMode::BpeEncoded,
        }
    }

    fn name(self) -> &'static str {
        match self {
            MweModeName::Raw => "raw",
            MweModeName::Bpe => "bpe",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub extract: ExtractSettings,
    #[serde(default)]
    pub lexprob: LexprobSettings,
    #[serde(default)]
    pub align: AlignSettings,
    #[serde(default)]
    pub filter: FilterSettings,
    #[serde(default)]
    pub augment: Option<AugmentSettings>,
}

impl PipelineConfig {
    /// Loads a TOML config and resolves every relative path against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: PipelineConfig = toml::from_str(&text)
            .map_err(|e| Error::usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        let paths = &mut config.paths;
        resolve(&mut paths.tagged_source);
        resolve(&mut paths.tagged_target);
        resolve(&mut paths.parallel_source);
        resolve(&mut paths.parallel_target);
        resolve(&mut paths.patterns_source);
        resolve(&mut paths.patterns_target);
        for p in paths.stopwords_source.iter_mut().chain(paths.stopwords_target.iter_mut()) {
            resolve(p);
        }
        resolve(&mut paths.output_dir);
        for name in [&mut paths.tagset_source, &mut paths.tagset_target] {
            if TagsetMapping::builtin(name).is_none() {
                let mut p = PathBuf::from(&*name);
                resolve(&mut p);
                *name = p.to_string_lossy().into_owned();
            }
        }
        if let Some(augment) = &mut config.augment {
            for p in [
                &mut augment.bpe_source_merges,
                &mut augment.bpe_target_merges,
                &mut augment.bpe_source_vocab,
                &mut augment.bpe_target_vocab,
            ]
            .into_iter()
            .flatten()
            {
                resolve(p);
            }
        }
        Ok(config)
    }

    /// Checks every referenced path and parameter before any stage runs.
    pub fn validate(&self) -> Result<()> {
        let mut required: Vec<&Path> = vec![
            &self.paths.tagged_source,
            &self.paths.tagged_target,
            &self.paths.parallel_source,
            &self.paths.parallel_target,
            &self.paths.patterns_source,
            &self.paths.patterns_target,
        ];
        required.extend(self.paths.stopwords_source.iter().map(PathBuf::as_path));
        required.extend(self.paths.stopwords_target.iter().map(PathBuf::as_path));
        for name in [&self.paths.tagset_source, &self.paths.tagset_target] {
            if TagsetMapping::builtin(name).is_none() && !Path::new(name).is_file() {
                return Err(Error::usage(format!(
                    "tagset {name:?} is neither a builtin name nor an existing file"
                )));
            }
        }
        if let Some(augment) = &self.augment {
            if !self.filter.thresholds.iter().any(|t| t == &augment.threshold) {
                return Err(Error::usage(format!(
                    "augment threshold {} is not among the filter thresholds",
                    augment.threshold
                )));
            }
            if augment.mwe_mode == MweModeName::Bpe {
                match (&augment.bpe_source_merges, &augment.bpe_target_merges) {
                    (Some(s), Some(t)) => required.extend([s.as_path(), t.as_path()]),
                    _ => {
                        return Err(Error::usage(
                            "mwe_mode = \"bpe\" requires bpe_source_merges and bpe_target_merges",
                        ))
                    }
                }
            }
            for p in [&augment.bpe_source_vocab, &augment.bpe_target_vocab].into_iter().flatten() {
                required.push(p.as_path());
            }
        }
        for path in required {
            if !path.is_file() {
                return Err(Error::usage(format!("missing input file: {}", path.display())));
            }
        }
        for threshold in &self.filter.thresholds {
            if !(0.0..=1.0).contains(threshold) {
                return Err(Error::usage(format!("threshold {threshold} outside [0,1]")));
            }
        }
        if self.filter.thresholds.is_empty() {
            return Err(Error::usage("at least one filter threshold is required"));
        }
        // Stage and artifact names carry thresholds at two decimals.
        let mut names: Vec<String> =
            self.filter.thresholds.iter().map(|t| format!("{t:.2}")).collect();
        names.sort();
        names.dedup();
        if names.len() != self.filter.thresholds.len() {
            return Err(Error::usage(
                "filter thresholds must be distinct at two-decimal precision",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestOutput {
    path: String,
    hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestEntry {
    stage: String,
    input_hash: String,
    outputs: Vec<ManifestOutput>,
    counts: serde_json::Value,
}

/// Append-only stage log; the last entry per stage wins.
struct Manifest {
    path: PathBuf,
    entries: HashMap<String, ManifestEntry>,
}

impl Manifest {
    fn open(dir: &Path) -> Result<Manifest> {
        let path = dir.join("manifest.jsonl");
        let mut entries = HashMap::new();
        if path.is_file() {
            let reader = BufReader::new(File::open(&path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: ManifestEntry = serde_json::from_str(&line)
                    .map_err(|e| Error::data(format!("corrupt manifest line: {e}")))?;
                entries.insert(entry.stage.clone(), entry);
            }
        }
        Ok(Manifest { path, entries })
    }

    fn record(&mut self, entry: ManifestEntry) -> Result<()> {
        let mut file = fs::OpenOptions::new().create(true).append(true).open(&self.path)?;
        writeln!(file, "{}", serde_json::to_string(&entry).expect("manifest entry serializes"))?;
        self.entries.insert(entry.stage.clone(), entry);
        Ok(())
    }
}

fn hash_hex(hasher: Sha256) -> String {
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn hash_file(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut reader = BufReader::new(File::open(path)?);
    loop {
        let buf = reader.fill_buf()?;
        if buf.is_empty() {
            break;
        }
        hasher.update(buf);
        let n = buf.len();
        reader.consume(n);
    }
    Ok(hash_hex(hasher))
}

fn input_hash(files: &[&Path], params: &str) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(params.as_bytes());
    for file in files {
        hasher.update([0]);
        hasher.update(hash_file(file)?.as_bytes());
    }
    Ok(hash_hex(hasher))
}

/// Outcome of one stage in a pipeline run.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub stage: String,
    pub ran: bool,
    pub outputs: Vec<PathBuf>,
    pub counts: serde_json::Value,
}

/// All stage outcomes of one run, in execution order.
#[derive(Debug, Clone, Default)]
pub struct PipelineSummary {
    pub stages: Vec<StageOutcome>,
}

struct StageRunner {
    manifest: Manifest,
    out_dir: PathBuf,
    summary: PipelineSummary,
}

impl StageRunner {
    fn run_stage<F>(
        &mut self,
        stage: &str,
        inputs: &[&Path],
        params: &str,
        outputs: &[PathBuf],
        body: F,
    ) -> Result<()>
    where
        F: FnOnce() -> Result<serde_json::Value>,
    {
        let hash = input_hash(inputs, params).map_err(|e| e.in_stage(stage))?;
        if let Some(entry) = self.manifest.entries.get(stage) {
            let intact = entry.input_hash == hash
                && entry.outputs.iter().all(|o| {
                    let path = self.out_dir.join(&o.path);
                    path.is_file() && hash_file(&path).map(|h| h == o.hash).unwrap_or(false)
                });
            if intact {
                self.summary.stages.push(StageOutcome {
                    stage: stage.to_string(),
                    ran: false,
                    outputs: outputs.to_vec(),
                    counts: entry.counts.clone(),
                });
                return Ok(());
            }
        }
        let counts = body().map_err(|e| e.in_stage(stage))?;
        let mut recorded = Vec::with_capacity(outputs.len());
        for output in outputs {
            let rel = output
                .strip_prefix(&self.out_dir)
                .unwrap_or(output)
                .to_string_lossy()
                .into_owned();
            recorded.push(ManifestOutput {
                path: rel,
                hash: hash_file(output).map_err(|e| e.in_stage(stage))?,
            });
        }
        self.manifest
            .record(ManifestEntry {
                stage: stage.to_string(),
                input_hash: hash,
                outputs: recorded,
                counts: counts.clone(),
            })
            .map_err(|e| e.in_stage(stage))?;
        self.summary.stages.push(StageOutcome {
            stage: stage.to_string(),
            ran: true,
            outputs: outputs.to_vec(),
            counts,
        });
        Ok(())
    }
}

fn load_tagset(name: &str) -> Result<TagsetMapping> {
    if let Some(mapping) = TagsetMapping::builtin(name) {
        return Ok(mapping);
    }
    let file = File::open(name)
        .map_err(|e| Error::usage(format!("cannot open tagset {name}: {e}")))?;
    TagsetMapping::load(name, BufReader::new(file))
}

fn tagset_fingerprint(name: &str) -> Result<String> {
    if TagsetMapping::builtin(name).is_some() {
        Ok(format!("builtin:{name}"))
    } else {
        Ok(format!("file:{}", hash_file(Path::new(name))?))
    }
}

fn load_stopwords(paths: &[PathBuf], language: &str) -> Result<StopwordList> {
    let mut readers = Vec::with_capacity(paths.len());
    for path in paths {
        readers.push(BufReader::new(File::open(path)?));
    }
    merge_stopwords(readers, language)
}

fn open_buffered(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn create_buffered(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn load_parallel(config: &PipelineConfig) -> Result<ParallelCorpus> {
    parse_parallel_corpus(
        open_buffered(&config.paths.parallel_source)?,
        open_buffered(&config.paths.parallel_target)?,
    )
}

fn filtered_pairs_path(out_dir: &Path, threshold: f64) -> PathBuf {
    out_dir.join(format!("pairs.filtered-{threshold:.2}.tsv"))
}

/// Runs the whole pipeline. `seed_override` replaces the configured shuffle
/// seed when set (the CLI's global `--seed`).
pub fn run_pipeline(config: &PipelineConfig, seed_override: Option<u64>) -> Result<PipelineSummary> {
    config.validate()?;
    let out_dir = &config.paths.output_dir;
    fs::create_dir_all(out_dir)?;
    let mut runner = StageRunner {
        manifest: Manifest::open(out_dir)?,
        out_dir: out_dir.clone(),
        summary: PipelineSummary::default(),
    };
    let paths = &config.paths;

    // extract, both languages
    let candidates_source = out_dir.join("candidates.source.tsv");
    let candidates_target = out_dir.join("candidates.target.tsv");
    for (stage, tagged, patterns, tagset, output) in [
        ("extract-source", &paths.tagged_source, &paths.patterns_source, &paths.tagset_source, &candidates_source),
        ("extract-target", &paths.tagged_target, &paths.patterns_target, &paths.tagset_target, &candidates_target),
    ] {
        let params = format!(
            "extract min_freq={} tagset={}",
            config.extract.min_freq,
            tagset_fingerprint(tagset)?
        );
        runner.run_stage(
            stage,
            &[tagged.as_path(), patterns.as_path()],
            &params,
            std::slice::from_ref(output),
            || {
                let corpus = parse_tagged_corpus(open_buffered(tagged)?)?;
                let patterns = parse_patterns(open_buffered(patterns)?)?;
                let mapping = load_tagset(tagset)?;
                let candidates =
                    extract_candidates(&corpus, &patterns, &mapping, config.extract.min_freq);
                let mut writer = create_buffered(output)?;
                write_candidates(&candidates, &mut writer)?;
                writer.flush()?;
                Ok(serde_json::json!({
                    "sentences": corpus.len(),
                    "candidates": candidates.len(),
                }))
            },
        )?;
    }

    // train-lex, both directions
    let lex_forward = out_dir.join("lex.forward.txt");
    let lex_reverse = out_dir.join("lex.reverse.txt");
    let em = config.lexprob.em_config();
    let em_params = format!(
        "train-lex iterations={} prune_epsilon={} lowercase={}",
        em.iterations, em.prune_epsilon, em.lowercase
    );
    for (stage, reverse, output) in
        [("train-lex-forward", false, &lex_forward), ("train-lex-reverse", true, &lex_reverse)]
    {
        let params = format!("{em_params} reverse={reverse}");
        runner.run_stage(
            stage,
            &[paths.parallel_source.as_path(), paths.parallel_target.as_path()],
            &params,
            std::slice::from_ref(output),
            || {
                let corpus = load_parallel(config)?;
                let corpus = if reverse { corpus.swapped() } else { corpus };
                let mut table = train_model1(&corpus, &em)?;
                table.direction = if reverse { "target-source" } else { "source-target" }.to_string();
                let mut writer = create_buffered(output)?;
                write_table(&table, &mut writer)?;
                writer.flush()?;
                Ok(serde_json::json!({ "entries": table.len() }))
            },
        )?;
    }

    // align
    let pairs_path = out_dir.join("pairs.tsv");
    {
        let align_cfg = config.align.alignment_config();
        let params = format!(
            "align length_penalty={} min_content_tokens={} keep_best_per_source={}",
            align_cfg.length_penalty, align_cfg.min_content_tokens, align_cfg.keep_best_per_source
        );
        let mut inputs: Vec<&Path> = vec![
            paths.parallel_source.as_path(),
            paths.parallel_target.as_path(),
            candidates_source.as_path(),
            candidates_target.as_path(),
            lex_forward.as_path(),
            lex_reverse.as_path(),
        ];
        inputs.extend(paths.stopwords_source.iter().map(PathBuf::as_path));
        inputs.extend(paths.stopwords_target.iter().map(PathBuf::as_path));
        runner.run_stage("align", &inputs, &params, std::slice::from_ref(&pairs_path), || {
            let corpus = load_parallel(config)?;
            let src_candidates = read_candidates(open_buffered(&candidates_source)?)?;
            let tgt_candidates = read_candidates(open_buffered(&candidates_target)?)?;
            let fwd = read_table(open_buffered(&lex_forward)?, "source-target")?;
            let rev = read_table(open_buffered(&lex_reverse)?, "target-source")?;
            let stops_src = load_stopwords(&paths.stopwords_source, "source")?;
            let stops_tgt = load_stopwords(&paths.stopwords_target, "target")?;
            let scored = align_corpus(
                &corpus,
                &src_candidates,
                &tgt_candidates,
                &fwd,
                &rev,
                &stops_src,
                &stops_tgt,
                &align_cfg,
            )?;
            let pairs: Vec<_> = scored.iter().map(|s| s.pair.clone()).collect();
            let mut writer = create_buffered(&pairs_path)?;
            write_pairs(&pairs, &mut writer)?;
            writer.flush()?;
            Ok(serde_json::json!({ "pairs": pairs.len() }))
        })?;
    }

    // filter, one stage per threshold
    for &threshold in &config.filter.thresholds {
        let stage = format!("filter-{threshold:.2}");
        let output = filtered_pairs_path(out_dir, threshold);
        let params = format!("filter threshold={threshold:.6}");
        runner.run_stage(&stage, &[pairs_path.as_path()], &params, std::slice::from_ref(&output), || {
            let pairs = read_pairs(open_buffered(&pairs_path)?)?;
            let (kept, report) = filter_pairs(&pairs, threshold)?;
            let mut writer = create_buffered(&output)?;
            write_pairs(&kept, &mut writer)?;
            writer.flush()?;
            Ok(serde_json::json!({
                "input": report.input_count,
                "kept": report.kept_count,
                "retention_percent": report.retention_percent,
            }))
        })?;
    }

    // stats
    let stats_tsv = out_dir.join("stats.tsv");
    let stats_txt = out_dir.join("stats.txt");
    {
        let params = format!(
            "stats thresholds={}",
            config.filter.thresholds.iter().map(|t| format!("{t:.6}")).collect::<Vec<_>>().join(",")
        );
        let thresholds = config.filter.thresholds.clone();
        runner.run_stage(
            "stats",
            &[pairs_path.as_path()],
            &params,
            &[stats_tsv.clone(), stats_txt.clone()],
            || {
                let pairs = read_pairs(open_buffered(&pairs_path)?)?;
                let mut reports = Vec::new();
                for &threshold in &thresholds {
                    let (_, report) = filter_pairs(&pairs, threshold)?;
                    reports.push(report);
                }
                let mut tsv = create_buffered(&stats_tsv)?;
                let mut txt = create_buffered(&stats_txt)?;
                write_reports(&reports, &mut tsv, &mut txt)?;
                tsv.flush()?;
                txt.flush()?;
                Ok(serde_json::json!({ "thresholds": reports.len() }))
            },
        )?;
    }

    // optional augment
    if let Some(augment) = &config.augment {
        let filtered = filtered_pairs_path(out_dir, augment.threshold);
        let out_source = out_dir.join("augmented.source.txt");
        let out_target = out_dir.join("augmented.target.txt");
        let seed = seed_override.or(augment.shuffle_seed);
        let params = format!(
            "augment mode={} seed={seed:?} vocab_threshold={}",
            augment.mwe_mode.name(),
            augment.vocab_threshold
        );
        let mut inputs: Vec<&Path> = vec![
            paths.parallel_source.as_path(),
            paths.parallel_target.as_path(),
            filtered.as_path(),
        ];
        for p in [
            &augment.bpe_source_merges,
            &augment.bpe_target_merges,
            &augment.bpe_source_vocab,
            &augment.bpe_target_vocab,
        ]
        .into_iter()
        .flatten()
        {
            inputs.push(p.as_path());
        }
        runner.run_stage(
            "augment",
            &inputs,
            &params,
            &[out_source.clone(), out_target.clone()],
            || {
                let train = load_parallel(config)?;
                let pairs = read_pairs(open_buffered(&filtered)?)?;
                let aug_config = AugmentConfig {
                    mwe_mode: augment.mwe_mode.mode(),
                    shuffle_seed: seed,
                    vocab_threshold: augment.vocab_threshold,
                };
                let load_side = |merges: &Option<PathBuf>,
                                 vocab: &Option<PathBuf>|
                 -> Result<Option<(crate::bpe::BpeModel, Vocabulary)>> {
                    let Some(merges) = merges else { return Ok(None) };
                    let model = read_merges(open_buffered(merges)?)?;
                    let vocabulary = match vocab {
                        Some(path) => read_vocabulary(open_buffered(path)?)?,
                        None => Vocabulary::new(),
                    };
                    Ok(Some((model, vocabulary)))
                };
                let src_side = load_side(&augment.bpe_source_merges, &augment.bpe_source_vocab)?;
                let tgt_side = load_side(&augment.bpe_target_merges, &augment.bpe_target_vocab)?;
                let src_ctx = src_side
                    .as_ref()
                    .map(|(model, vocabulary)| BpeContext { model, vocabulary });
                let tgt_ctx = tgt_side
                    .as_ref()
                    .map(|(model, vocabulary)| BpeContext { model, vocabulary });
                let augmented =
                    augment_corpus(&train, &pairs, &aug_config, src_ctx.as_ref(), tgt_ctx.as_ref())?;
                let mut src_writer = create_buffered(&out_source)?;
                let mut tgt_writer = create_buffered(&out_target)?;
                write_token_lines(&augmented.source_lines, &mut src_writer)?;
                write_token_lines(&augmented.target_lines, &mut tgt_writer)?;
                src_writer.flush()?;
                tgt_writer.flush()?;
                Ok(serde_json::json!({
                    "train_lines": train.len(),
                    "mwe_pairs": pairs.len(),
                    "augmented_lines": augmented.len(),
                }))
            },
        )?;
    }

    Ok(runner.summary)
}

/// Writes filter reports as TSV and as a short human-readable summary.
pub fn write_reports<W1: Write, W2: Write>(
    reports: &[FilterReport],
    tsv: &mut W1,
    txt: &mut W2,
) -> Result<()> {
    writeln!(tsv, "threshold\tinput\tkept\tretention_percent")?;
    for r in reports {
        writeln!(tsv, "{:.2}\t{}\t{}\t{:.1}", r.threshold, r.input_count, r.kept_count, r.retention_percent)?;
    }
    for r in reports {
        writeln!(
            txt,
            "threshold {:.2}: kept {} of {} pairs ({:.1}% of original size)",
            r.threshold, r.kept_count, r.input_count, r.retention_percent
        )?;
    }
    Ok(())
}
