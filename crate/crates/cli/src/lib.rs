//! Command implementations behind the `outline` binary.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use outline_core::corpus::{build_all_queries, derive_qrels, parse_corpus, write_corpus};
use outline_core::envgen::{
    build_test_env, build_train_env, generate_candidates, read_candidates, write_candidates, CandidateSet, EnvSpec,
    DEFAULT_CANDIDATES,
};
use outline_core::evaluation::{evaluate_run, paired_t_test};
use outline_core::experiment::{
    run_pipeline, ExpansionParams, Experiment, FeatureSpec, PipelineConfig, Resources,
};
use outline_core::index::build_index;
use outline_core::ltr::{ingest_external_scores, CaConfig};
use outline_core::semvec::{load_embeddings, EmbeddingStore, EntityStats, GazetteerLinker};
use outline_core::synth::{generate, SynthConfig};
use outline_core::textproc::load_stopwords;
use outline_core::{Bm25Params, Corpus, Error, Index, Qrels, RunFile, TokenPipelineConfig};

/// A failed command: bad usage or input (exit 2) or an internal failure (exit 1).
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e.root() {
            Error::Io(_) | Error::Linker(_) => CliError::Internal(msg),
            _ => CliError::Input(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "outline", version, about = "Passage retrieval for article outlines")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build and serialize the inverted index.
    Index(IndexArgs),
    /// Write the qrels implied by the corpus outlines.
    Qrels(QrelsArgs),
    /// Write a training or test candidate environment.
    Env(EnvArgs),
    /// Write BM25 top-k candidates for every heading.
    Candidates(CandidatesArgs),
    /// Rank paragraphs for every heading with one method.
    Run(RunArgs),
    /// Evaluate a run against qrels.
    Eval(EvalArgs),
    /// Compare two runs with a paired t-test per metric.
    Compare(CompareArgs),
    /// Candidates, feature runs, cross-validated fusion and evaluation.
    Pipeline(PipelineArgs),
    /// Generate a synthetic corpus with embeddings and a gazetteer.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Prebuilt index; built from the corpus when absent.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Stopword list replacing the built-in one.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ScoringArgs {
    #[arg(long, default_value_t = 1.2)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,
    #[arg(long, default_value_t = 10)]
    pub fb_docs: usize,
    #[arg(long, default_value_t = 10)]
    pub fb_terms: usize,
    #[arg(long, default_value_t = 10)]
    pub fb_entities: usize,
    #[arg(long, default_value_t = 5)]
    pub rocchio_passages: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1500.0)]
    pub mu: f64,
    /// Word embeddings, `word v1 ... vd` per line.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Entity embeddings, `entityId v1 ... vd` per line.
    #[arg(long)]
    pub entity_embeddings: Option<PathBuf>,
    /// `surface<TAB>entityId` lines.
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    /// Entity link statistics replacing those computed from the corpus.
    #[arg(long)]
    pub entity_stats: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct QrelsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Args, Debug)]
pub struct EnvArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Split::Train)]
    pub split: Split,
    /// Same-article negatives per true paragraph (training split).
    #[arg(long, default_value_t = 5)]
    pub neg_same: usize,
    /// Other-article negatives per true paragraph (training split).
    #[arg(long, default_value_t = 5)]
    pub neg_other: usize,
    /// Also write the qrels here.
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CandidatesArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[arg(long, default_value_t = DEFAULT_CANDIDATES)]
    pub k: usize,
    #[arg(long, default_value_t = 1.2)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub method: String,
    #[arg(long, default_value = "none")]
    pub expansion: String,
    /// Environment file; only its candidates are ranked.
    #[arg(long, conflicts_with = "candidates")]
    pub env: Option<PathBuf>,
    /// Candidate file; only its candidates are ranked.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Depth of full-index retrieval when no candidates are given.
    #[arg(long, default_value_t = DEFAULT_CANDIDATES)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long)]
    pub per_query: bool,
    /// Written to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub run_a: PathBuf,
    #[arg(long)]
    pub run_b: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Candidate file replacing first-stage BM25 retrieval.
    #[arg(long, conflicts_with = "env")]
    pub candidates: Option<PathBuf>,
    #[arg(long)]
    pub env: Option<PathBuf>,
    /// First-stage depth.
    #[arg(long, default_value_t = DEFAULT_CANDIDATES)]
    pub k: usize,
    /// Comma-separated features such as `bm25,tfidf-cs+rocchio`; defaults
    /// to every feature the resources allow.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    /// Extra feature from a score file, as `name=path`.
    #[arg(long)]
    pub external: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub ltr_folds: usize,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Features to drop in a second, ablated fusion.
    #[arg(long, value_delimiter = ',')]
    pub without: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub pages: usize,
    /// Paragraphs attached to no page; defaults to one per page.
    #[arg(long)]
    pub distractors: Option<usize>,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn finish(mut out: impl Write) -> CliResult {
    out.flush()?;
    Ok(())
}

/// Adds the file name to an input parse error.
fn reading<T>(path: &Path, r: outline_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let cli = CliError::from(e);
        match cli {
            CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
            other => other,
        }
    })
}

fn load_corpus(path: &Path) -> CliResult<Corpus> {
    reading(path, parse_corpus(open(path)?))
}

fn analyzer(stopwords: Option<&Path>) -> CliResult<TokenPipelineConfig> {
    let cfg = TokenPipelineConfig::default();
    match stopwords {
        Some(p) => Ok(cfg.with_stopwords(reading(p, load_stopwords(open(p)?))?)),
        None => Ok(cfg),
    }
}

fn load_index(input: &CorpusArgs, corpus: &Corpus) -> CliResult<Index> {
    match &input.index {
        Some(p) => {
            if input.stopwords.is_some() {
                warn!("--stopwords ignored: the index carries its own analyzer");
            }
            let ix = reading(p, Index::read(open(p)?))?;
            let missing = corpus.paragraphs.keys().filter(|id| ix.doc_num(id).is_none()).count();
            if missing > 0 {
                return Err(CliError::Input(format!(
                    "index {} lacks {missing} corpus paragraphs; rebuild it",
                    p.display()
                )));
            }
            Ok(ix)
        }
        None => Ok(build_index(&corpus.texts(), &analyzer(input.stopwords.as_deref())?)?),
    }
}

fn load_candidates(path: &Path) -> CliResult<Vec<CandidateSet>> {
    reading(path, read_candidates(open(path)?))
}

struct LoadedResources {
    words: Option<EmbeddingStore>,
    entities: Option<EmbeddingStore>,
    linker: Option<GazetteerLinker>,
    stats: Option<EntityStats>,
}

impl LoadedResources {
    fn load(s: &ScoringArgs) -> CliResult<Self> {
        let emb = |p: &Option<PathBuf>| -> CliResult<Option<EmbeddingStore>> {
            p.as_deref().map(|p| reading(p, load_embeddings(open(p)?))).transpose()
        };
        let linker =
            s.gazetteer.as_deref().map(|p| reading(p, GazetteerLinker::read(open(p)?))).transpose()?;
        let stats = s.entity_stats.as_deref().map(|p| reading(p, EntityStats::read(open(p)?))).transpose()?;
        Ok(Self { words: emb(&s.embeddings)?, entities: emb(&s.entity_embeddings)?, linker, stats })
    }

    fn resources(&self) -> Resources<'_> {
        Resources {
            word_embeddings: self.words.as_ref(),
            entity_embeddings: self.entities.as_ref(),
            linker: self.linker.as_ref().map(|l| l as _),
            entity_stats: self.stats.clone(),
        }
    }
}

fn params(s: &ScoringArgs) -> CliResult<(Bm25Params, ExpansionParams)> {
    let bm25 = Bm25Params::new(s.k1, s.b)?;
    if !(0.0..=1.0).contains(&s.lambda) {
        return Err(CliError::Input(format!("--lambda must be in [0, 1], got {}", s.lambda)));
    }
    if s.mu <= 0.0 || !s.mu.is_finite() {
        return Err(CliError::Input(format!("--mu must be positive, got {}", s.mu)));
    }
    if [s.fb_docs, s.fb_terms, s.fb_entities, s.rocchio_passages].contains(&0) {
        return Err(CliError::Input("feedback counts must be at least 1".into()));
    }
    Ok((
        bm25,
        ExpansionParams {
            fb_docs: s.fb_docs,
            fb_terms: s.fb_terms,
            fb_entities: s.fb_entities,
            rocchio_passages: s.rocchio_passages,
            lambda: s.lambda,
            mu: s.mu,
        },
    ))
}

pub fn cmd_index(args: &IndexArgs) -> CliResult {
    let corpus = load_corpus(&args.corpus)?;
    let ix = build_index(&corpus.texts(), &analyzer(args.stopwords.as_deref())?)?;
    let mut out = create(&args.out)?;
    ix.write(&mut out)?;
    finish(out)
}

pub fn cmd_qrels(args: &QrelsArgs) -> CliResult {
    let corpus = load_corpus(&args.corpus)?;
    let mut out = create(&args.out)?;
    derive_qrels(&corpus).write(&mut out)?;
    finish(out)
}

pub fn cmd_env(args: &EnvArgs, seed: u64) -> CliResult {
    let corpus = load_corpus(&args.corpus)?;
    let sets = match args.split {
        Split::Train => build_train_env(
            &corpus,
            &EnvSpec { neg_same_article: args.neg_same, neg_other_article: args.neg_other, seed },
        )?,
        Split::Test => build_test_env(&corpus, seed)?,
    };
    let short = sets.iter().filter(|s| s.deficit.same_article + s.deficit.other_article > 0).count();
    if short > 0 {
        warn!("{short} headings got fewer negatives than requested");
    }
    let mut out = create(&args.out)?;
    write_candidates(&sets, &mut out)?;
    finish(out)?;
    if let Some(q) = &args.qrels {
        let mut out = create(q)?;
        derive_qrels(&corpus).write(&mut out)?;
        finish(out)?;
    }
    Ok(())
}

pub fn cmd_candidates(args: &CandidatesArgs) -> CliResult {
    let corpus = load_corpus(&args.input.corpus)?;
    let ix = load_index(&args.input, &corpus)?;
    let params = Bm25Params::new(args.k1, args.b)?;
    let sets = build_all_queries(&corpus, ix.analyzer())
        .iter()
        .map(|q| generate_candidates(&ix, q, args.k, params))
        .collect::<outline_core::Result<Vec<_>>>()?;
    let mut out = create(&args.out)?;
    write_candidates(&sets, &mut out)?;
    finish(out)
}

pub fn cmd_run(args: &RunArgs, seed: u64) -> CliResult {
    let spec: FeatureSpec = FeatureSpec::new(args.method.parse()?, args.expansion.parse()?)?;
    let (bm25, ep) = params(&args.scoring)?;
    let corpus = load_corpus(&args.input.corpus)?;
    let ix = load_index(&args.input, &corpus)?;
    let candidates = args.env.as_deref().or(args.candidates.as_deref()).map(load_candidates).transpose()?;
    let loaded = LoadedResources::load(&args.scoring)?;
    let ex = Experiment::new(&corpus, &ix, loaded.resources(), bm25, ep, seed)?;
    ex.check(spec)?;
    if args.k == 0 && candidates.is_none() {
        return Err(CliError::Input("--k must be at least 1".into()));
    }
    let queries = build_all_queries(&corpus, ix.analyzer());
    let rankings = ex.run(spec, &queries, candidates.as_deref(), args.k)?;
    let mut out = create(&args.out)?;
    RunFile::from_rankings(&rankings, &spec.name()).write(&mut out)?;
    finish(out)
}

fn load_run(path: &Path) -> CliResult<RunFile> {
    reading(path, RunFile::read(open(path)?))
}

fn load_qrels(path: &Path) -> CliResult<Qrels> {
    reading(path, Qrels::read(open(path)?))
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult {
    let run = load_run(&args.run)?;
    let qrels = load_qrels(&args.qrels)?;
    let report = evaluate_run(&run, &qrels);
    let mut out = output(args.out.as_deref())?;
    report.write(&mut out, args.per_query)?;
    finish(out)
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult {
    let a = load_run(&args.run_a)?;
    let b = load_run(&args.run_b)?;
    let qa: BTreeSet<String> = a.query_ids().into_iter().map(String::from).collect();
    let qb: BTreeSet<String> = b.query_ids().into_iter().map(String::from).collect();
    if qa != qb {
        return Err(Error::QuerySetMismatch {
            only_a: qa.difference(&qb).cloned().collect(),
            only_b: qb.difference(&qa).cloned().collect(),
        }
        .into());
    }
    let qrels = load_qrels(&args.qrels)?;
    let ra = evaluate_run(&a, &qrels);
    let rb = evaluate_run(&b, &qrels);
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "metric\tA\tB\tdiff\tt\tp\tsignificance")?;
    type Pick = fn(&outline_core::evaluation::QueryMetrics) -> f64;
    let metrics: [(&str, Pick, f64, f64); 3] = [
        ("map", |m| m.ap, ra.map, rb.map),
        ("R-prec", |m| m.r_prec, ra.r_prec, rb.r_prec),
        ("mrr", |m| m.rr, ra.mrr, rb.mrr),
    ];
    for (name, pick, va, vb) in metrics {
        let pa = ra.per_query.iter().map(|(q, m)| (q.clone(), pick(m))).collect();
        let pb = rb.per_query.iter().map(|(q, m)| (q.clone(), pick(m))).collect();
        let t = paired_t_test(&pa, &pb, args.alpha)?;
        let marker = if t.significant_worse {
            "A worse"
        } else if t.p_value < args.alpha && t.mean_diff > 0.0 {
            "A better"
        } else {
            "-"
        };
        writeln!(
            out,
            "{name}\t{va:.6}\t{vb:.6}\t{:.6}\t{:.4}\t{:.6}\t{marker}",
            t.mean_diff, t.t_statistic, t.p_value
        )?;
    }
    finish(out)
}

pub fn cmd_pipeline(args: &PipelineArgs, seed: u64) -> CliResult {
    let (bm25, ep) = params(&args.scoring)?;
    if args.k == 0 {
        return Err(CliError::Input("--k must be at least 1".into()));
    }
    let corpus = load_corpus(&args.input.corpus)?;
    let ix = load_index(&args.input, &corpus)?;
    let candidates = args.env.as_deref().or(args.candidates.as_deref()).map(load_candidates).transpose()?;
    let mut external = Vec::new();
    for spec in &args.external {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("--external expects name=path, got {spec:?}")))?;
        let path = Path::new(path);
        external.push((name.to_string(), reading(path, ingest_external_scores(open(path)?))?));
    }
    let loaded = LoadedResources::load(&args.scoring)?;
    let ex = Experiment::new(&corpus, &ix, loaded.resources(), bm25, ep, seed)?;
    let features = if args.features.is_empty() {
        PipelineConfig::default_features(&ex)
    } else {
        args.features.iter().map(|f| f.parse()).collect::<outline_core::Result<Vec<FeatureSpec>>>()?
    };
    for f in &features {
        ex.check(*f)?;
    }
    let cfg = PipelineConfig {
        candidates_k: args.k,
        features,
        ltr_folds: args.ltr_folds,
        ca: CaConfig { restarts: args.restarts, seed, ..CaConfig::default() },
        without: args.without.clone(),
    };
    let queries = build_all_queries(&corpus, ix.analyzer());
    let qrels = derive_qrels(&corpus);
    let result = run_pipeline(&ex, &queries, &qrels, candidates, external, &cfg)?;
    result.write_to(&args.out)?;
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs, seed: u64) -> CliResult {
    let cfg = SynthConfig {
        pages: args.pages,
        distractors: args.distractors.unwrap_or(args.pages),
        dim: args.dim,
        seed,
        ..SynthConfig::default()
    };
    let data = generate(&cfg)?;
    fs::create_dir_all(&args.out)?;
    let mut out = create(&args.out.join("corpus.jsonl"))?;
    write_corpus(&data.corpus, &mut out)?;
    finish(out)?;
    let mut out = create(&args.out.join("embeddings.txt"))?;
    data.word_embeddings.write(&mut out)?;
    finish(out)?;
    let mut out = create(&args.out.join("entity-embeddings.txt"))?;
    data.entity_embeddings.write(&mut out)?;
    finish(out)?;
    let mut out = create(&args.out.join("gazetteer.tsv"))?;
    data.write_gazetteer(&mut out)?;
    finish(out)
}

pub fn execute(cli: &Cli) -> CliResult {
    let seed = cli.seed;
    match &cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Qrels(a) => cmd_qrels(a),
        Command::Env(a) => cmd_env(a, seed),
        Command::Candidates(a) => cmd_candidates(a),
        Command::Run(a) => cmd_run(a, seed),
        Command::Eval(a) => cmd_eval(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Pipeline(a) => cmd_pipeline(a, seed),
        Command::Synth(a) => cmd_synth(a, seed),
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
