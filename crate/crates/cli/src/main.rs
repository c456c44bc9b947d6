//! `mwemine` — bilingual MWE mining from tagged and parallel corpora.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mwemine_core::align::{align_corpus, merge_stopwords, AlignmentConfig, StopwordList};
use mwemine_core::augment::{augment_corpus, AugmentConfig, BpeContext, MweMode};
use mwemine_core::bleu::corpus_bleu;
use mwemine_core::bpe::{
    learn_bpe, read_merges, read_vocabulary, write_merges, BpeEncoder, Vocabulary,
};
use mwemine_core::corpus::{
    parse_parallel_corpus, parse_tagged_corpus, read_pairs, write_pairs, write_token_lines,
};
use mwemine_core::filter::{filter_pairs, FilterReport};
use mwemine_core::lexprob::{read_table, train_model1, write_table, EmConfig};
use mwemine_core::pattern::{extract_candidates, parse_patterns, read_candidates, write_candidates};
use mwemine_core::pipeline::{run_pipeline, write_reports, PipelineConfig};
use mwemine_core::tagset::TagsetMapping;
use mwemine_core::{Error, Result};

#[derive(Parser)]
#[command(name = "mwemine", version, about = "Bilingual multi-word-expression mining pipeline")]
struct Cli {
    /// Worker threads for parallelizable stages (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Shuffle seed; overrides any seed in configs or subcommand flags.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract MWE candidates from a tagged corpus.
    Extract(ExtractArgs),
    /// Train a lexical translation table with Model-1 EM.
    TrainLex(TrainLexArgs),
    /// Align and score MWE candidates across a parallel corpus.
    Align(AlignArgs),
    /// Keep pairs at or above a score threshold.
    Filter(FilterArgs),
    /// Print retention statistics for one or more thresholds.
    Stats(StatsArgs),
    /// Append MWE pairs to a training corpus, optionally shuffled.
    Augment(AugmentArgs),
    /// Learn BPE merges from a corpus.
    BpeLearn(BpeLearnArgs),
    /// Apply learned BPE merges to a corpus.
    BpeApply(BpeApplyArgs),
    /// Score a candidate corpus against a reference with BLEU.
    Bleu(BleuArgs),
    /// Run the whole extraction pipeline from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Tagged corpus (`surface<TAB>pos<TAB>lemma`, blank-line separated).
    #[arg(long)]
    input: PathBuf,
    /// Pattern file, one POS pattern per line.
    #[arg(long)]
    patterns: PathBuf,
    /// Builtin tagset name (bnc, stts, lcmc) or mapping file path.
    #[arg(long)]
    tagset: String,
    /// Drop candidates occurring fewer times than this.
    #[arg(long, default_value_t = 2)]
    min_freq: u64,
    /// Candidate TSV output (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrainLexArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// fwd trains p(target|source); rev swaps the sides first.
    #[arg(long, default_value = "fwd")]
    direction: String,
    #[arg(long, default_value_t = 5)]
    iterations: u32,
    #[arg(long, default_value_t = 1e-6)]
    prune_epsilon: f64,
    /// Keep the original casing instead of lowercasing.
    #[arg(long)]
    no_lowercase: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AlignArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    src_candidates: PathBuf,
    #[arg(long)]
    tgt_candidates: PathBuf,
    #[arg(long)]
    fwd_lex: PathBuf,
    #[arg(long)]
    rev_lex: PathBuf,
    /// Source-side stop-word file; repeatable, lists are merged.
    #[arg(long = "stop-src")]
    stop_src: Vec<PathBuf>,
    /// Target-side stop-word file; repeatable, lists are merged.
    #[arg(long = "stop-tgt")]
    stop_tgt: Vec<PathBuf>,
    #[arg(long)]
    no_length_penalty: bool,
    #[arg(long, default_value_t = 1)]
    min_content_tokens: usize,
    /// Keep every scored target instead of only the best per source.
    #[arg(long)]
    keep_all: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    threshold: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated score thresholds.
    #[arg(long, default_value = "0.70,0.85", value_delimiter = ',')]
    thresholds: Vec<f64>,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    train_source: PathBuf,
    #[arg(long)]
    train_target: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    /// raw appends pairs verbatim; bpe encodes them with the given models.
    #[arg(long, default_value = "raw")]
    mwe_mode: String,
    #[arg(long)]
    bpe_src: Option<PathBuf>,
    #[arg(long)]
    bpe_tgt: Option<PathBuf>,
    #[arg(long)]
    vocab_src: Option<PathBuf>,
    #[arg(long)]
    vocab_tgt: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    vocab_threshold: u64,
    /// Shuffle seed; omit to keep corpus order with pairs appended last.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_source: PathBuf,
    #[arg(long)]
    out_target: PathBuf,
}

#[derive(Args)]
struct BpeLearnArgs {
    #[arg(long)]
    input: PathBuf,
    /// Number of merge operations to learn.
    #[arg(long)]
    ops: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BpeApplyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    merges: PathBuf,
    /// `subword count` vocabulary file for threshold re-splitting.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    vocab_threshold: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BleuArgs {
    #[arg(long)]
    cand: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    if let Some(workers) = cli.workers {
        // Ignore the error when a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => ExitCode::from(1),
                Error::Data(_) | Error::Io(_) => ExitCode::from(2),
            }
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))
}

fn out_writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_tagset(name: &str) -> Result<TagsetMapping> {
    if let Some(mapping) = TagsetMapping::builtin(name) {
        return Ok(mapping);
    }
    TagsetMapping::load(name, open(Path::new(name))?)
}

fn load_stopwords(paths: &[PathBuf], language: &str) -> Result<StopwordList> {
    let mut readers = Vec::with_capacity(paths.len());
    for path in paths {
        readers.push(open(path)?);
    }
    merge_stopwords(readers, language)
}

fn read_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut lines = Vec::new();
    for line in open(path)?.lines() {
        let line = line?;
        lines.push(line.split_whitespace().map(str::to_string).collect());
    }
    Ok(lines)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract(args) => {
            let corpus = parse_tagged_corpus(open(&args.input)?)?;
            let patterns = parse_patterns(open(&args.patterns)?)?;
            let mapping = load_tagset(&args.tagset)?;
            let candidates = extract_candidates(&corpus, &patterns, &mapping, args.min_freq);
            let mut writer = out_writer(&args.output)?;
            write_candidates(&candidates, &mut writer)?;
            writer.flush()?;
            eprintln!("extracted {} candidates from {} sentences", candidates.len(), corpus.len());
        }
        Command::TrainLex(args) => {
            let corpus = parse_parallel_corpus(open(&args.source)?, open(&args.target)?)?;
            let (corpus, direction) = match args.direction.as_str() {
                "fwd" => (corpus, "source-target"),
                "rev" => (corpus.swapped(), "target-source"),
                other => return Err(Error::usage(format!("direction must be fwd or rev, got {other:?}"))),
            };
            let config = EmConfig {
                iterations: args.iterations,
                prune_epsilon: args.prune_epsilon,
                lowercase: !args.no_lowercase,
            };
            let mut table = train_model1(&corpus, &config)?;
            table.direction = direction.to_string();
            let mut writer = out_writer(&args.output)?;
            write_table(&table, &mut writer)?;
            writer.flush()?;
            eprintln!("trained {} entries ({direction})", table.len());
        }
        Command::Align(args) => {
            let corpus = parse_parallel_corpus(open(&args.source)?, open(&args.target)?)?;
            let src_candidates = read_candidates(open(&args.src_candidates)?)?;
            let tgt_candidates = read_candidates(open(&args.tgt_candidates)?)?;
            let fwd = read_table(open(&args.fwd_lex)?, "source-target")?;
            let rev = read_table(open(&args.rev_lex)?, "target-source")?;
            let stops_src = load_stopwords(&args.stop_src, "source")?;
            let stops_tgt = load_stopwords(&args.stop_tgt, "target")?;
            let config = AlignmentConfig {
                length_penalty: !args.no_length_penalty,
                min_content_tokens: args.min_content_tokens,
                keep_best_per_source: !args.keep_all,
            };
            let scored = align_corpus(
                &corpus,
                &src_candidates,
                &tgt_candidates,
                &fwd,
                &rev,
                &stops_src,
                &stops_tgt,
                &config,
            )?;
            let pairs: Vec<_> = scored.iter().map(|s| s.pair.clone()).collect();
            let mut writer = out_writer(&args.output)?;
            write_pairs(&pairs, &mut writer)?;
            writer.flush()?;
            eprintln!("aligned {} pairs", pairs.len());
        }
        Command::Filter(args) => {
            let pairs = read_pairs(open(&args.input)?)?;
            let (kept, report) = filter_pairs(&pairs, args.threshold)?;
            let mut writer = out_writer(&args.output)?;
            write_pairs(&kept, &mut writer)?;
            writer.flush()?;
            eprintln!(
                "threshold {:.2}: kept {} of {} pairs ({:.1}% of original size)",
                report.threshold, report.kept_count, report.input_count, report.retention_percent
            );
        }
        Command::Stats(args) => {
            let pairs = read_pairs(open(&args.input)?)?;
            let mut reports: Vec<FilterReport> = Vec::new();
            for &threshold in &args.thresholds {
                let (_, report) = filter_pairs(&pairs, threshold)?;
                reports.push(report);
            }
            let stdout = io::stdout();
            let mut tsv = stdout.lock();
            let mut txt = io::stderr().lock();
            write_reports(&reports, &mut tsv, &mut txt)?;
        }
        Command::Augment(args) => {
            let train = parse_parallel_corpus(open(&args.train_source)?, open(&args.train_target)?)?;
            let pairs = read_pairs(open(&args.pairs)?)?;
            let mode = MweMode::parse(&args.mwe_mode)
                .ok_or_else(|| Error::usage(format!("mwe-mode must be raw or bpe, got {:?}", args.mwe_mode)))?;
            let config = AugmentConfig {
                mwe_mode: mode,
                shuffle_seed: cli.seed.or(args.seed),
                vocab_threshold: args.vocab_threshold,
            };
            let load_side = |merges: &Option<PathBuf>, vocab: &Option<PathBuf>| -> Result<_> {
                let Some(merges) = merges else {
                    return Ok(None);
                };
                let model = read_merges(open(merges)?)?;
                let vocabulary = match vocab {
                    Some(path) => read_vocabulary(open(path)?)?,
                    None => Vocabulary::new(),
                };
                Ok(Some((model, vocabulary)))
            };
            let src_side = load_side(&args.bpe_src, &args.vocab_src)?;
            let tgt_side = load_side(&args.bpe_tgt, &args.vocab_tgt)?;
            let src_ctx =
                src_side.as_ref().map(|(model, vocabulary)| BpeContext { model, vocabulary });
            let tgt_ctx =
                tgt_side.as_ref().map(|(model, vocabulary)| BpeContext { model, vocabulary });
            let augmented = augment_corpus(&train, &pairs, &config, src_ctx.as_ref(), tgt_ctx.as_ref())?;
            let mut src_writer = BufWriter::new(File::create(&args.out_source)?);
            let mut tgt_writer = BufWriter::new(File::create(&args.out_target)?);
            write_token_lines(&augmented.source_lines, &mut src_writer)?;
            write_token_lines(&augmented.target_lines, &mut tgt_writer)?;
            src_writer.flush()?;
            tgt_writer.flush()?;
            eprintln!("wrote {} aligned lines ({} train + {} pairs)", augmented.len(), train.len(), pairs.len());
        }
        Command::BpeLearn(args) => {
            let text = std::fs::read_to_string(&args.input)
                .map_err(|e| Error::Data(format!("cannot open {}: {e}", args.input.display())))?;
            let model = learn_bpe(text.split_whitespace(), args.ops);
            let mut writer = out_writer(&args.output)?;
            write_merges(&model, &mut writer)?;
            writer.flush()?;
            eprintln!("learned {} merges (requested {})", model.merges().len(), args.ops);
        }
        Command::BpeApply(args) => {
            let model = read_merges(open(&args.merges)?)?;
            let vocabulary = match &args.vocab {
                Some(path) => read_vocabulary(open(path)?)?,
                None => Vocabulary::new(),
            };
            let mut encoder = BpeEncoder::new(&model, &vocabulary, args.vocab_threshold);
            let mut writer = out_writer(&args.output)?;
            for line in open(&args.input)?.lines() {
                let line = line?;
                writeln!(writer, "{}", encoder.encode_line(&line))?;
            }
            writer.flush()?;
        }
        Command::Bleu(args) => {
            let candidates = read_lines(&args.cand)?;
            let references = read_lines(&args.reference)?;
            let report = corpus_bleu(&candidates, &references)?;
            println!("1-gram\t2-gram\t3-gram\t4-gram\tBP\tratio\toverall");
            println!(
                "{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.3}\t{:.3}\t{:.2}",
                report.precisions[0],
                report.precisions[1],
                report.precisions[2],
                report.precisions[3],
                report.brevity_penalty,
                report.length_ratio,
                report.overall
            );
        }
        Command::Pipeline(args) => {
            let config = PipelineConfig::load(&args.config)?;
            let summary = run_pipeline(&config, cli.seed)?;
            for stage in &summary.stages {
                let status = if stage.ran { "ran" } else { "up to date" };
                println!("{:<18} {:<10} {}", stage.stage, status, stage.counts);
            }
        }
    }
    Ok(())
}
