use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fuzzydr::baselines::{self, ReduceMethod, ReduceOptions};
use fuzzydr::bench;
use fuzzydr::corpus::{self, CorpusFormat, TokenizerConfig, Vocabulary};
use fuzzydr::dense::Dense;
use fuzzydr::error::{Error, Result};
use fuzzydr::eval::{self, ExperimentPlan, ReportFormat};
use fuzzydr::fuzzy;
use fuzzydr::persist::{self, Model};
use fuzzydr::sparse::SparseMatrix;
use fuzzydr::weighting::{self, WeightingMethod};

#[derive(Parser)]
#[command(
    name = "fuzzydr",
    version,
    about = "Sparse document-term matrix reduction via fuzzy spherical clustering, \
             with PCA/SVD baselines and a cross-validation harness"
)]
struct Cli {
    /// Master seed for all randomized steps.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads (0 = logical cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize a corpus into a Matrix Market DTM plus vocabulary sidecar.
    BuildDtm(BuildDtmArgs),
    /// Apply a global term weighting scheme to a DTM.
    Weight(WeightArgs),
    /// Reduce a DTM to k dimensions (fc, pca, or svd).
    Reduce(ReduceArgs),
    /// Fold new documents into a previously saved model.
    Transform(TransformArgs),
    /// Run a cross-validation experiment plan.
    Evaluate(EvaluateArgs),
    /// Time the reduction methods over growing synthetic corpora.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BuildDtmArgs {
    /// Corpus file (.jsonl or .csv).
    #[arg(long)]
    corpus: PathBuf,
    /// Corpus format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// Keep original case.
    #[arg(long)]
    no_lowercase: bool,
    /// Keep punctuation characters inside tokens.
    #[arg(long)]
    keep_punctuation: bool,
    #[arg(long, default_value_t = 2)]
    min_token_length: usize,
    #[arg(long, default_value_t = 1)]
    min_document_frequency: usize,
    /// Optional stopword list, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Output DTM path (Matrix Market).
    #[arg(long)]
    out: PathBuf,
    /// Vocabulary sidecar path; defaults to <out>.vocab.
    #[arg(long)]
    vocab_out: Option<PathBuf>,
}

#[derive(Args)]
struct WeightArgs {
    /// Input DTM (Matrix Market).
    #[arg(long)]
    dtm: PathBuf,
    /// Weighting method: none|entropy|gfidf|idf|idf_df|normal|probidf.
    #[arg(long)]
    method: String,
    /// Output weighted DTM (Matrix Market).
    #[arg(long)]
    out: PathBuf,
    /// Optional per-term weight CSV (needs --vocab).
    #[arg(long)]
    weights_csv: Option<PathBuf>,
    /// Vocabulary sidecar, required for --weights-csv.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    /// Input DTM (Matrix Market).
    #[arg(long)]
    dtm: PathBuf,
    /// Reduction method: fc|pca|svd.
    #[arg(long)]
    method: String,
    /// Target dimension.
    #[arg(long)]
    k: usize,
    /// Fuzzifier (fc only).
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Output CSV of the reduced representation.
    #[arg(long)]
    out: PathBuf,
    /// Optional model container output (needs --vocab).
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Vocabulary sidecar, required for --model-out.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    /// Saved model container.
    #[arg(long)]
    model: PathBuf,
    /// Vocabulary the model was fitted against.
    #[arg(long)]
    vocab: PathBuf,
    /// New documents (.jsonl or .csv).
    #[arg(long)]
    corpus: PathBuf,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Experiment plan JSON.
    #[arg(long)]
    plan: PathBuf,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
    /// Report format: csv|markdown.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Refit the reduction on each training fold instead of once on the
    /// whole corpus (overrides the plan).
    #[arg(long)]
    strict_folds: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated corpus sizes.
    #[arg(long, default_value = "1000,2000,4000,8000")]
    sizes: String,
    /// Comma-separated methods to time.
    #[arg(long, default_value = "fc")]
    methods: String,
    /// Vocabulary size of the synthetic corpora.
    #[arg(long, default_value_t = 5000)]
    vocab_size: usize,
    /// Target dimension.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Fixed iteration count per fit, so timings scale with n only.
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    /// Output CSV: phase,wall_ms,peak_rss_bytes.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // ignore failure: the global pool may already exist under tests
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 2,
        Error::Parse { .. }
        | Error::DuplicateId(_)
        | Error::BadMagic
        | Error::VersionMismatch(_)
        | Error::ChecksumMismatch
        | Error::Truncated => 3,
        _ => 4,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildDtm(a) => cmd_build_dtm(a),
        Command::Weight(a) => cmd_weight(a),
        Command::Reduce(a) => cmd_reduce(a, cli.seed),
        Command::Transform(a) => cmd_transform(a),
        Command::Evaluate(a) => cmd_evaluate(a, cli.seed),
        Command::Bench(a) => cmd_bench(a, cli.seed),
    }
}

fn corpus_format(path: &Path, flag: Option<&str>) -> Result<CorpusFormat> {
    match flag {
        Some("jsonl") => Ok(CorpusFormat::Jsonl),
        Some("csv") => Ok(CorpusFormat::Csv),
        Some(other) => Err(Error::InvalidParameter(format!(
            "unknown corpus format {other:?}"
        ))),
        None => {
            if path.extension().is_some_and(|e| e == "csv") {
                Ok(CorpusFormat::Csv)
            } else {
                Ok(CorpusFormat::Jsonl)
            }
        }
    }
}

fn cmd_build_dtm(a: BuildDtmArgs) -> Result<()> {
    let format = corpus_format(&a.corpus, a.format.as_deref())?;
    let docs = corpus::load_corpus(&a.corpus, format)?;
    let stopword_list = match &a.stopwords {
        Some(p) => Some(
            std::fs::read_to_string(p)?
                .lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect(),
        ),
        None => None,
    };
    let cfg = TokenizerConfig {
        lowercase: !a.no_lowercase,
        strip_non_alphanumeric: !a.keep_punctuation,
        min_token_length: a.min_token_length,
        min_document_frequency: a.min_document_frequency,
        stopword_list,
    };
    let (dtm, vocab) = corpus::build_dtm(&docs, &cfg)?;
    dtm.save_matrix_market(&a.out)?;
    let vocab_path = a
        .vocab_out
        .unwrap_or_else(|| append_ext(&a.out, "vocab"));
    vocab.save(&vocab_path)?;
    println!(
        "wrote {} x {} dtm ({} nonzeros) to {}",
        dtm.n_rows(),
        dtm.n_cols(),
        dtm.nnz(),
        a.out.display()
    );
    Ok(())
}

fn append_ext(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_weight(a: WeightArgs) -> Result<()> {
    let method = WeightingMethod::parse(&a.method)?;
    let dtm = SparseMatrix::load_matrix_market(&a.dtm)?;
    let gw = weighting::compute_weights(&dtm, method)?;
    let weighted = weighting::apply_weights(&dtm, &gw)?;
    weighted.save_matrix_market(&a.out)?;
    if let Some(csv_path) = &a.weights_csv {
        let vocab_path = a.vocab.as_ref().ok_or_else(|| {
            Error::InvalidParameter("--weights-csv requires --vocab".into())
        })?;
        let vocab = Vocabulary::load(vocab_path)?;
        let f = std::fs::File::create(csv_path)?;
        weighting::write_weights_csv(std::io::BufWriter::new(f), vocab.terms(), &gw)?;
    }
    println!("wrote {}-weighted dtm to {}", method.name(), a.out.display());
    Ok(())
}

fn write_dense_csv(path: &Path, header_prefix: &str, m: &Dense) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(w, "doc_id")?;
    for c in 1..=m.cols {
        write!(w, ",{header_prefix}{c}")?;
    }
    writeln!(w)?;
    for r in 0..m.rows {
        write!(w, "{r}")?;
        for v in m.row(r) {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_reduce(a: ReduceArgs, seed: u64) -> Result<()> {
    let method = ReduceMethod::parse(&a.method)?;
    let dtm = SparseMatrix::load_matrix_market(&a.dtm)?;
    let opts = ReduceOptions {
        fuzzifier: a.q,
        seed,
        ..Default::default()
    };
    let prefix = if method == ReduceMethod::Fc { "c_" } else { "k_" };

    if let Some(model_out) = &a.model_out {
        let vocab_path = a.vocab.as_ref().ok_or_else(|| {
            Error::InvalidParameter("--model-out requires --vocab".into())
        })?;
        let vocab = Vocabulary::load(vocab_path)?;
        let model = match method {
            ReduceMethod::Fc => {
                let mut cfg = fuzzy::FuzzyConfig::new(a.k, a.q);
                cfg.seed = seed;
                let fit = fuzzy::fit(&dtm, &cfg)?;
                let scores = Dense {
                    rows: fit.memberships.n_rows,
                    cols: fit.memberships.k,
                    data: fit.memberships.data.clone(),
                };
                write_dense_csv(&a.out, prefix, &scores)?;
                Model::Fc {
                    fuzzifier: a.q,
                    prototypes: fit.prototypes,
                }
            }
            ReduceMethod::Svd => {
                let svd = baselines::truncated_svd(
                    &dtm,
                    a.k,
                    seed,
                    opts.oversample,
                    opts.power_iters,
                )?;
                write_dense_csv(&a.out, prefix, &svd.scores())?;
                Model::Svd(svd)
            }
            ReduceMethod::Pca => {
                let pca = baselines::pca_scores_with(
                    &dtm,
                    a.k,
                    seed,
                    opts.oversample,
                    opts.power_iters,
                )?;
                write_dense_csv(&a.out, prefix, &pca.scores)?;
                Model::Pca(pca)
            }
        };
        persist::save_model(model_out, &model, &vocab)?;
    } else {
        let rep = baselines::reduce(&dtm, method, a.k, &opts)?;
        write_dense_csv(&a.out, prefix, &rep)?;
    }
    println!(
        "reduced {} x {} dtm to {} dimensions with {}",
        dtm.n_rows(),
        dtm.n_cols(),
        a.k,
        method.name()
    );
    Ok(())
}

fn cmd_transform(a: TransformArgs) -> Result<()> {
    let vocab = Vocabulary::load(&a.vocab)?;
    let model = persist::load_model(&a.model, &vocab)?;
    let format = corpus_format(&a.corpus, None)?;
    let docs = corpus::load_corpus(&a.corpus, format)?;
    let dtm = corpus::dtm_with_vocabulary(&docs, &vocab, &TokenizerConfig::default())?;
    let (rep, prefix) = match &model {
        Model::Fc {
            fuzzifier,
            prototypes,
        } => {
            let mu = fuzzy::transform(&dtm, prototypes, *fuzzifier)?;
            (
                Dense {
                    rows: mu.n_rows,
                    cols: mu.k,
                    data: mu.data,
                },
                "c_",
            )
        }
        Model::Svd(svd) => {
            let k = svd.s.len();
            let mut rep = Dense::zeros(dtm.n_rows(), k);
            for r in 0..dtm.n_rows() {
                let (cols, vals) = dtm.row(r);
                for c in 0..k {
                    let mut acc = 0.0;
                    for (&ci, &v) in cols.iter().zip(vals) {
                        acc += v * svd.v.get(ci, c);
                    }
                    rep.set(r, c, acc);
                }
            }
            (rep, "k_")
        }
        Model::Pca(pca) => (pca.project(&dtm)?, "k_"),
        Model::Weights(_) => {
            return Err(Error::InvalidParameter(
                "a weight vector cannot transform documents; use `weight`".into(),
            ))
        }
    };
    write_dense_csv(&a.out, prefix, &rep)?;
    println!(
        "transformed {} documents with the saved {} model",
        docs.len(),
        model.kind_name()
    );
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, seed: u64) -> Result<()> {
    let bytes = std::fs::read(&a.plan)?;
    let mut plan = ExperimentPlan::parse_json(&bytes)?;
    if plan.master_seed == 42 {
        plan.master_seed = seed;
    }
    if a.strict_folds {
        plan.reduce_whole_corpus = false;
    }
    let format = match a.format.as_str() {
        "csv" => ReportFormat::Csv,
        "markdown" => ReportFormat::Markdown,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown report format {other:?}"
            )))
        }
    };
    let result = eval::run_experiment(&plan)?;
    let f = std::fs::File::create(&a.out)?;
    eval::emit_report(&result, std::io::BufWriter::new(f), format)?;
    for fail in &result.failures {
        eprintln!(
            "cell failed: {} k={} {}: {}",
            eval::series_label(fail.method, fail.fuzzifier),
            fail.dimension,
            fail.weighting.name(),
            fail.message
        );
    }
    println!(
        "wrote {} result rows ({} failed cells) to {}",
        result.rows.len(),
        result.failures.len(),
        a.out.display()
    );
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad {what}: {p:?}")))
        })
        .collect()
}

fn cmd_bench(a: BenchArgs, seed: u64) -> Result<()> {
    let sizes: Vec<usize> = parse_list(&a.sizes, "size")?;
    let methods: Vec<ReduceMethod> = a
        .methods
        .split(',')
        .map(|m| ReduceMethod::parse(m.trim()))
        .collect::<Result<_>>()?;
    let rows = bench::bench_rows(&sizes, &methods, a.vocab_size, a.k, a.iterations, seed)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(&a.out)?);
    writeln!(w, "phase,wall_ms,peak_rss_bytes")?;
    for r in &rows {
        writeln!(w, "{},{},{}", r.phase, r.wall_ms, r.peak_rss_bytes)?;
        println!("{}: {:.1} ms", r.phase, r.wall_ms);
    }
    w.flush()?;
    for &method in &methods {
        if let Some(e) = bench::fitted_exponent(&rows, method.name()) {
            println!("{} fitted exponent: {e:.3}", method.name());
        }
    }
    Ok(())
}
