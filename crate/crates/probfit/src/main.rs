//! Command-line front end: generate / fit / predict / score / benchmark
//! over every model type in the library. Exit codes: 0 success, 1 model
//! or I/O error, 2 flag misuse (clap's default).

use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use probfit::bayesnet;
use probfit::classifiers::{self, ClassifierSpec, FitKind};
use probfit::data::{
    BatchSource, ColumnRef, CsvSchema, CsvSource, DataBatch, MemorySource, Sequence,
    SequenceFileSource, SequenceMemorySource,
};
use probfit::distributions::{CovarianceMode, FamilySpec};
use probfit::engine::{self, BatchSize, BatchesPerEpoch, FitConfig, FitReport};
use probfit::error::{Error, Result};
use probfit::hmm;
use probfit::kmeans;
use probfit::markovchain;
use probfit::mixture::GeneralMixtureModel;
use probfit::serialize::{load_model, save_model, Model};
use probfit::synthetic;

#[derive(Parser)]
#[command(name = "probfit", version, about = "Probabilistic model fitting on additive sufficient statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelType {
    /// Single Gaussian (univariate or multivariate by column count).
    Gaussian,
    /// k-means clustering.
    Kmeans,
    /// Gaussian naive Bayes classifier.
    GaussianNb,
    /// Full-covariance Bayes classifier.
    Bayes,
    /// Gaussian mixture model.
    Gmm,
    /// Hidden Markov model over sequence files.
    Hmm,
    /// Order-k Markov chain over symbol sequence files.
    MarkovChain,
    /// Discrete Bayesian network with Chow-Liu structure learning.
    Bayesnet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Two overlapping Gaussian classes (CSV with a label column).
    Ellipses,
    /// Well-separated Gaussian blobs (CSV).
    GmmBlobs,
    /// Gaussian-emission HMM sequence corpus (sequence file).
    HmmBench,
    /// Sticky Markov chain symbol corpus (sequence file).
    Markov,
    /// Binary-chain Bayesian network samples (CSV).
    Bayesnet,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset.
    Generate(GenerateArgs),
    /// Fit a model to a data file and write a model document.
    Fit(FitArgs),
    /// Per-row (or per-sequence) predictions from a saved model.
    Predict(ApplyArgs),
    /// Per-row (or per-sequence) log-probabilities plus a total.
    Score(ApplyArgs),
    /// Time a fit at several worker counts.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    preset: Preset,
    /// Output path (CSV or sequence file depending on the preset).
    #[arg(long)]
    output: String,
    /// Number of rows (CSV presets).
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Feature dimensionality.
    #[arg(long, default_value_t = 10)]
    dim: usize,
    /// Per-class standard deviation for the ellipses preset.
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    /// Fraction of rows keeping their label in the ellipses preset;
    /// the rest are written as -1.
    #[arg(long, default_value_t = 1.0)]
    labeled_fraction: f64,
    /// Number of mixture blobs for gmm-blobs.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Sequence count for sequence presets.
    #[arg(long, default_value_t = 10)]
    sequences: usize,
    /// Sequence length for sequence presets.
    #[arg(long, default_value_t = 100)]
    length: usize,
    /// HMM state count for hmm-bench.
    #[arg(long, default_value_t = 2)]
    states: usize,
    /// Alphabet size for the markov preset.
    #[arg(long, default_value_t = 3)]
    alphabet: usize,
    /// Variable count for the bayesnet preset.
    #[arg(long, default_value_t = 4)]
    variables: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct CommonFitFlags {
    /// Rows per batch, or "all".
    #[arg(long, default_value = "all")]
    batch_size: String,
    /// Batches per parameter update, or "all" (full-batch).
    #[arg(long, default_value = "all")]
    batches_per_epoch: String,
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    stop_threshold: f64,
    #[arg(long, default_value_t = 0.0)]
    inertia: f64,
    /// Worker threads for summarization.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FitArgs {
    #[arg(value_enum)]
    model_type: ModelType,
    /// CSV file, or sequence file for hmm / markov-chain.
    data: String,
    /// Where to write the model document.
    #[arg(long)]
    output: String,
    #[command(flatten)]
    flags: CommonFitFlags,
    /// Mixture components or k-means clusters.
    #[arg(long)]
    k: Option<usize>,
    /// HMM state count.
    #[arg(long)]
    states: Option<usize>,
    /// Markov chain order.
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Markov chain alphabet size (inferred from data when omitted).
    #[arg(long)]
    alphabet: Option<usize>,
    /// Label column (name or index) for classifier fits; -1 labels
    /// switch on semi-supervised training.
    #[arg(long)]
    labels: Option<String>,
    /// Weight column (name or index).
    #[arg(long)]
    weights: Option<String>,
}

#[derive(Args)]
struct ApplyArgs {
    /// Model document written by `fit`.
    model: String,
    /// CSV file, or sequence file for hmm / markov-chain models.
    data: String,
    /// Label column to skip over when reading (it is ignored).
    #[arg(long)]
    labels: Option<String>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(value_enum)]
    model_type: ModelType,
    /// Comma-separated worker counts, e.g. 1,2,4.
    #[arg(long, default_value = "1,2,4")]
    jobs: String,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 10_000)]
    batch_size: usize,
    #[arg(long, default_value_t = 5)]
    max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn column_ref(text: &str) -> ColumnRef {
    match text.parse::<usize>() {
        Ok(idx) => ColumnRef::Index(idx),
        Err(_) => ColumnRef::Name(text.to_string()),
    }
}

fn parse_batch_size(text: &str) -> Result<BatchSize> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(BatchSize::All);
    }
    text.parse::<usize>()
        .map(BatchSize::Rows)
        .map_err(|_| Error::InvalidConfig(format!("bad --batch-size {:?}", text)))
}

fn parse_batches_per_epoch(text: &str) -> Result<BatchesPerEpoch> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(BatchesPerEpoch::All);
    }
    text.parse::<usize>()
        .map(BatchesPerEpoch::Count)
        .map_err(|_| Error::InvalidConfig(format!("bad --batches-per-epoch {:?}", text)))
}

fn fit_config(flags: &CommonFitFlags) -> Result<FitConfig> {
    let config = FitConfig {
        batch_size: parse_batch_size(&flags.batch_size)?,
        batches_per_epoch: parse_batches_per_epoch(&flags.batches_per_epoch)?,
        max_iterations: flags.max_iterations,
        stop_threshold: flags.stop_threshold,
        inertia: flags.inertia,
        worker_count: flags.jobs,
        deterministic_merge: true,
        rng_seed: flags.seed,
    };
    config.validate()?;
    Ok(config)
}

fn csv_batch_rows(config: &FitConfig) -> usize {
    match config.batch_size {
        BatchSize::All => usize::MAX,
        BatchSize::Rows(n) => n,
    }
}

fn write_csv(path: &str, header: &[String], rows: &[Vec<f64>], labels: Option<&[i64]>) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        let mut line = String::new();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            let _ = write!(line, "{}", v);
        }
        if let Some(ls) = labels {
            let _ = write!(line, ",{}", ls[i]);
        }
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_sequences(path: &str, sequences: &[Sequence]) -> Result<()> {
    let mut out = String::new();
    for (i, seq) in sequences.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for t in 0..seq.len() {
            let mut line = String::new();
            for (j, v) in seq.obs(t).iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                let _ = write!(line, "{}", v);
            }
            out.push_str(&line);
            out.push('\n');
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    match args.preset {
        Preset::Ellipses => {
            let (rows, labels, _) = synthetic::ellipses(
                args.n,
                args.dim,
                args.sigma,
                args.labeled_fraction,
                args.seed,
            );
            let mut header: Vec<String> = (0..args.dim).map(|d| format!("x{}", d)).collect();
            header.push("label".to_string());
            write_csv(&args.output, &header, &rows, Some(&labels))?;
        }
        Preset::GmmBlobs => {
            let rows = synthetic::gmm_blobs(args.n, args.k, args.dim, args.seed);
            let header: Vec<String> = (0..args.dim).map(|d| format!("x{}", d)).collect();
            write_csv(&args.output, &header, &rows, None)?;
        }
        Preset::HmmBench => {
            let seqs = synthetic::hmm_bench(
                args.sequences,
                args.length,
                args.states,
                args.dim,
                args.seed,
            )?;
            write_sequences(&args.output, &seqs)?;
        }
        Preset::Markov => {
            let corpus =
                synthetic::markov_corpus(args.sequences, args.length, args.alphabet, args.seed)?;
            let seqs: Vec<Sequence> = corpus
                .iter()
                .map(|s| Sequence::from_symbols(s))
                .collect::<Result<_>>()?;
            write_sequences(&args.output, &seqs)?;
        }
        Preset::Bayesnet => {
            let rows = synthetic::bayesnet_rows(args.n, args.variables, args.seed)?;
            let header: Vec<String> = (0..args.variables).map(|v| format!("x{}", v)).collect();
            write_csv(&args.output, &header, &rows, None)?;
        }
    }
    println!("wrote {}", args.output);
    Ok(())
}

fn open_csv(args_data: &str, labels: Option<&str>, weights: Option<&str>, config: &FitConfig) -> Result<CsvSource> {
    let schema = CsvSchema {
        label_column: labels.map(column_ref),
        weight_column: weights.map(column_ref),
    };
    CsvSource::open(args_data, schema, csv_batch_rows(config))
}

fn read_all_rows(source: &mut CsvSource) -> Result<DataBatch> {
    source.reset()?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut weights = Vec::new();
    let mut labels = Vec::new();
    let mut has_labels = false;
    while let Some(batch) = source.next_batch()? {
        for i in 0..batch.n_rows() {
            rows.push(batch.row(i).to_vec());
            weights.push(batch.weight(i));
            if let Some(l) = batch.label(i) {
                has_labels = true;
                labels.push(l);
            } else {
                labels.push(0);
            }
        }
    }
    let mut batch = DataBatch::from_rows(&rows)?.with_weights(weights)?;
    if has_labels {
        batch = batch.with_labels(labels)?;
    }
    Ok(batch)
}

fn print_report(report: &FitReport) {
    for (i, ll) in report.log_likelihoods.iter().enumerate() {
        println!("iteration {} log-likelihood {}", i + 1, ll);
    }
    println!("iterations {}", report.iterations_run);
}

fn peek_columns(source: &mut CsvSource) -> Result<usize> {
    source.reset()?;
    match source.next_batch()? {
        Some(b) => Ok(b.n_cols()),
        None => Err(Error::EmptySource),
    }
}

fn scan_classes(source: &mut CsvSource) -> Result<usize> {
    source.reset()?;
    let mut max_label = -1i64;
    while let Some(batch) = source.next_batch()? {
        for i in 0..batch.n_rows() {
            let l = batch.label(i).ok_or(Error::MissingLabels)?;
            max_label = max_label.max(l);
        }
    }
    if max_label < 1 {
        return Err(Error::InvalidConfig(
            "need labels for at least 2 classes".into(),
        ));
    }
    Ok(max_label as usize + 1)
}

fn scan_alphabet(source: &mut SequenceFileSource) -> Result<usize> {
    source.reset()?;
    let mut max_symbol = 0usize;
    while let Some(batch) = source.next_batch()? {
        for seq in &batch {
            for t in 0..seq.len() {
                max_symbol = max_symbol.max(seq.symbol(t)?);
            }
        }
    }
    Ok(max_symbol + 1)
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let config = fit_config(&args.flags)?;
    let model = match args.model_type {
        ModelType::Gaussian => {
            let mut source = open_csv(&args.data, None, args.weights.as_deref(), &config)?;
            let d = peek_columns(&mut source)?;
            let family = if d == 1 {
                FamilySpec::Gaussian
            } else {
                FamilySpec::MultivariateGaussian(CovarianceMode::Full)
            };
            let mut dist = family.default_distribution(d)?;
            let report = engine::fit(&mut dist, &mut source, &config)?;
            print_report(&report);
            Model::Distribution(dist)
        }
        ModelType::Kmeans => {
            let k = args
                .k
                .ok_or_else(|| Error::InvalidConfig("kmeans needs --k".into()))?;
            let mut source = open_csv(&args.data, None, args.weights.as_deref(), &config)?;
            let data = read_all_rows(&mut source)?;
            let km = kmeans::lloyd_fit(&data, k, &config)?;
            println!("inertia {}", km.inertia(&data)?);
            Model::KMeans(km)
        }
        ModelType::GaussianNb | ModelType::Bayes => {
            let labels = args.labels.as_deref().ok_or_else(|| {
                Error::InvalidConfig("classifier fits need --labels <column>".into())
            })?;
            let mut source = open_csv(&args.data, Some(labels), args.weights.as_deref(), &config)?;
            let n_classes = scan_classes(&mut source)?;
            let d = peek_columns(&mut source)?;
            let spec = if args.model_type == ModelType::GaussianNb {
                ClassifierSpec::gaussian_naive(n_classes, d)
            } else {
                ClassifierSpec::gaussian_full(n_classes)
            };
            let (model, report, kind) =
                classifiers::fit_auto(&spec, &mut source, &config)?;
            match kind {
                FitKind::Supervised => println!("mode supervised"),
                FitKind::SemiSupervised => println!("mode semi-supervised"),
            }
            print_report(&report);
            Model::BayesClassifier(model)
        }
        ModelType::Gmm => {
            let k = args
                .k
                .ok_or_else(|| Error::InvalidConfig("gmm needs --k".into()))?;
            let mut source = open_csv(&args.data, None, args.weights.as_deref(), &config)?;
            let d = peek_columns(&mut source)?;
            let family = if d == 1 {
                FamilySpec::Gaussian
            } else {
                FamilySpec::MultivariateGaussian(CovarianceMode::Full)
            };
            let (model, report) =
                GeneralMixtureModel::from_samples(&family, k, &mut source, &config)?;
            print_report(&report);
            Model::Mixture(model)
        }
        ModelType::Hmm => {
            let states = args
                .states
                .ok_or_else(|| Error::InvalidConfig("hmm needs --states".into()))?;
            let mut source = SequenceFileSource::open(&args.data, usize::MAX)?;
            source.reset()?;
            let dim = match source.next_batch()? {
                Some(batch) if !batch.is_empty() => batch[0].dim(),
                _ => return Err(Error::EmptySource),
            };
            let family = if dim == 1 {
                FamilySpec::Gaussian
            } else {
                FamilySpec::MultivariateGaussian(CovarianceMode::Diagonal)
            };
            let (model, report) = hmm::from_samples_hmm(&family, states, &mut source, &config)?;
            print_report(&report);
            Model::Hmm(model)
        }
        ModelType::MarkovChain => {
            let mut source = SequenceFileSource::open(&args.data, usize::MAX)?;
            let alphabet = match args.alphabet {
                Some(a) => a,
                None => scan_alphabet(&mut source)?,
            };
            let model = markovchain::fit_chain(args.order, alphabet, &mut source, &config)?;
            Model::MarkovChain(model)
        }
        ModelType::Bayesnet => {
            let mut source = open_csv(&args.data, None, args.weights.as_deref(), &config)?;
            let model = bayesnet::from_samples_bn(&mut source, &config)?;
            Model::BayesNet(model)
        }
    };
    save_model(&model, &args.output)?;
    println!("wrote {}", args.output);
    Ok(())
}

fn default_config() -> FitConfig {
    FitConfig::default()
}

fn cmd_predict(args: &ApplyArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match model {
        Model::BayesClassifier(c) => {
            let mut source = open_csv(&args.data, args.labels.as_deref(), None, &default_config())?;
            source.reset()?;
            while let Some(batch) = source.next_batch()? {
                for i in 0..batch.n_rows() {
                    writeln!(out, "{}", c.predict(batch.row(i))?)?;
                }
            }
        }
        Model::Mixture(m) => {
            let mut source = open_csv(&args.data, args.labels.as_deref(), None, &default_config())?;
            source.reset()?;
            while let Some(batch) = source.next_batch()? {
                for i in 0..batch.n_rows() {
                    writeln!(out, "{}", m.predict(batch.row(i))?)?;
                }
            }
        }
        Model::KMeans(km) => {
            let mut source = open_csv(&args.data, args.labels.as_deref(), None, &default_config())?;
            source.reset()?;
            while let Some(batch) = source.next_batch()? {
                for i in 0..batch.n_rows() {
                    writeln!(out, "{}", km.assign(batch.row(i))?)?;
                }
            }
        }
        Model::Hmm(h) => {
            let mut source = SequenceFileSource::open(&args.data, usize::MAX)?;
            source.reset()?;
            while let Some(batch) = source.next_batch()? {
                for seq in &batch {
                    let (path, log_joint) = h.viterbi(seq)?;
                    let path_text: Vec<String> =
                        path.iter().map(|s| s.to_string()).collect();
                    writeln!(out, "{} {}", path_text.join(","), log_joint)?;
                }
            }
        }
        _ => {
            return Err(Error::InvalidConfig(
                "predict supports classifier, gmm, kmeans, and hmm models; use score".into(),
            ))
        }
    }
    Ok(())
}

fn cmd_score(args: &ApplyArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut total = 0.0f64;
    match model {
        Model::Distribution(d) => {
            let mut source = open_csv(&args.data, args.labels.as_deref(), None, &default_config())?;
            source.reset()?;
            while let Some(batch) = source.next_batch()? {
                for i in 0..batch.n_rows() {
                    let lp = d.log_probability(batch.row(i))?;
                    total += lp;
                    writeln!(out, "{}", lp)?;
                }
            }
        }
        Model::BayesClassifier(c) => {
            let mut source = open_csv(&args.data, args.labels.as_deref(), None, &default_config())?;
            source.reset()?;
            while let Some(batch) = source.next_batch()? {
                for i in 0..batch.n_rows() {
                    let lp = c.log_probability(batch.row(i))?;
                    total += lp;
                    writeln!(out, "{}", lp)?;
                }
            }
        }
        Model::Mixture(m) => {
            let mut source = open_csv(&args.data, args.labels.as_deref(), None, &default_config())?;
            source.reset()?;
            while let Some(batch) = source.next_batch()? {
                for i in 0..batch.n_rows() {
                    let lp = m.log_probability(batch.row(i))?;
                    total += lp;
                    writeln!(out, "{}", lp)?;
                }
            }
        }
        Model::KMeans(km) => {
            // Reported value per row: squared distance to the nearest
            // centroid; the total is the dataset inertia.
            let mut source = open_csv(&args.data, args.labels.as_deref(), None, &default_config())?;
            source.reset()?;
            while let Some(batch) = source.next_batch()? {
                for i in 0..batch.n_rows() {
                    let c = km.assign(batch.row(i))?;
                    let d2 = probfit::math::sq_dist(batch.row(i), &km.centroids[c]);
                    total += d2;
                    writeln!(out, "{}", d2)?;
                }
            }
        }
        Model::Hmm(h) => {
            let mut source = SequenceFileSource::open(&args.data, usize::MAX)?;
            source.reset()?;
            while let Some(batch) = source.next_batch()? {
                for seq in &batch {
                    let lp = h.log_probability(seq)?;
                    total += lp;
                    writeln!(out, "{}", lp)?;
                }
            }
        }
        Model::MarkovChain(mc) => {
            let mut source = SequenceFileSource::open(&args.data, usize::MAX)?;
            source.reset()?;
            while let Some(batch) = source.next_batch()? {
                for seq in &batch {
                    let lp = mc.log_probability(seq)?;
                    total += lp;
                    writeln!(out, "{}", lp)?;
                }
            }
        }
        Model::BayesNet(bn) => {
            let mut source = open_csv(&args.data, args.labels.as_deref(), None, &default_config())?;
            source.reset()?;
            while let Some(batch) = source.next_batch()? {
                for i in 0..batch.n_rows() {
                    let values: Vec<usize> = batch
                        .row(i)
                        .iter()
                        .map(|&x| x as usize)
                        .collect();
                    let lp = bn.log_probability(&values)?;
                    total += lp;
                    writeln!(out, "{}", lp)?;
                }
            }
        }
    }
    writeln!(out, "total {}", total)?;
    Ok(())
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<()> {
    let jobs: Vec<usize> = args
        .jobs
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad --jobs entry {:?}", s)))
        })
        .collect::<Result<_>>()?;
    if jobs.is_empty() {
        return Err(Error::InvalidConfig("--jobs must list worker counts".into()));
    }

    // Build the dataset once; every timing run sees identical batches.
    enum Bench {
        Rows(DataBatch),
        Seqs(Vec<Sequence>),
    }
    let data = match args.model_type {
        ModelType::Gaussian | ModelType::Gmm | ModelType::Kmeans => {
            let rows = synthetic::gmm_blobs(args.n, 2, args.dim, args.seed);
            Bench::Rows(DataBatch::from_rows(&rows)?)
        }
        ModelType::GaussianNb | ModelType::Bayes => {
            let (rows, labels, _) = synthetic::ellipses(args.n, args.dim, 2.0, 1.0, args.seed);
            Bench::Rows(DataBatch::from_rows(&rows)?.with_labels(labels)?)
        }
        ModelType::Hmm => {
            let n_seqs = (args.n / 1000).max(4);
            Bench::Seqs(synthetic::hmm_bench(n_seqs, 1000, 2, args.dim, args.seed)?)
        }
        ModelType::MarkovChain | ModelType::Bayesnet => {
            return Err(Error::InvalidConfig(
                "benchmark supports gaussian, kmeans, gaussian-nb, bayes, gmm, and hmm".into(),
            ))
        }
    };

    println!("{:>5} {:>10} {:>8}", "jobs", "seconds", "speedup");
    let mut baseline = None;
    for &j in &jobs {
        let config = FitConfig {
            batch_size: BatchSize::Rows(args.batch_size),
            max_iterations: args.max_iterations,
            stop_threshold: 0.0,
            worker_count: j,
            rng_seed: args.seed,
            ..FitConfig::default()
        };
        let start = Instant::now();
        match (&data, args.model_type) {
            (Bench::Rows(batch), ModelType::Gaussian) => {
                let mut source = MemorySource::new(batch.clone(), Some(args.batch_size));
                let d = batch.n_cols();
                let family = if d == 1 {
                    FamilySpec::Gaussian
                } else {
                    FamilySpec::MultivariateGaussian(CovarianceMode::Diagonal)
                };
                let mut dist = family.default_distribution(d)?;
                engine::fit(&mut dist, &mut source, &config)?;
            }
            (Bench::Rows(batch), ModelType::Kmeans) => {
                kmeans::lloyd_fit(batch, 2, &config)?;
            }
            (Bench::Rows(batch), ModelType::GaussianNb | ModelType::Bayes) => {
                let mut source = MemorySource::new(batch.clone(), Some(args.batch_size));
                let spec = if args.model_type == ModelType::GaussianNb {
                    ClassifierSpec::gaussian_naive(2, batch.n_cols())
                } else {
                    ClassifierSpec::gaussian_full(2)
                };
                classifiers::fit_supervised(&spec, &mut source, &config)?;
            }
            (Bench::Rows(batch), ModelType::Gmm) => {
                let mut source = MemorySource::new(batch.clone(), Some(args.batch_size));
                let family = if batch.n_cols() == 1 {
                    FamilySpec::Gaussian
                } else {
                    FamilySpec::MultivariateGaussian(CovarianceMode::Diagonal)
                };
                GeneralMixtureModel::from_samples(&family, 2, &mut source, &config)?;
            }
            (Bench::Seqs(seqs), ModelType::Hmm) => {
                let per_batch = (seqs.len() / 8).max(1);
                let mut source = SequenceMemorySource::new(seqs.clone(), Some(per_batch));
                let family = if seqs[0].dim() == 1 {
                    FamilySpec::Gaussian
                } else {
                    FamilySpec::MultivariateGaussian(CovarianceMode::Diagonal)
                };
                hmm::from_samples_hmm(&family, 2, &mut source, &config)?;
            }
            _ => unreachable!("rejected above"),
        }
        let seconds = start.elapsed().as_secs_f64();
        let base = *baseline.get_or_insert(seconds);
        println!("{:>5} {:>10.3} {:>8.2}", j, seconds, base / seconds);
    }
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Score(args) => cmd_score(args),
        Command::Benchmark(args) => cmd_benchmark(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(1)
        }
    }
}
