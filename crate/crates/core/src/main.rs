//! Command-line pipeline: synthetic data generation, teacher training,
//! score caching, distillation, evaluation, and benchmarking.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crf_distill::bench::{self, BenchConfig, BenchTeacher};
use crf_distill::data::{self, Dataset, HmmSpec};
use crf_distill::eval;
use crf_distill::losses::LambdaMode;
use crf_distill::model::{init_model, load_checkpoint, EncoderConfig, ModelParams};
use crf_distill::pipeline::{
    self, default_suite_datasets, distill, run_experiment_suite, split_seed, suite_report,
    train_teacher, DistillConfig, Method, SuiteConfig, TeacherSide, TrainConfig,
};
use crf_distill::{Error, Result};

#[derive(Parser)]
#[command(
    name = "crf-distill",
    version,
    about = "CRF sequence labeling with teacher-student distillation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic tagged corpus from a random HMM.
    Generate(GenerateArgs),
    /// Train a teacher model from scratch with NLL.
    TrainTeacher(TrainTeacherArgs),
    /// Precompute and store teacher score lattices for a corpus.
    CacheScores(CacheScoresArgs),
    /// Train a student against a teacher model or score cache.
    Distill(DistillArgs),
    /// Score a checkpoint on a labeled corpus.
    Evaluate(EvaluateArgs),
    /// Time the per-phase cost of one training epoch per method.
    Bench(BenchArgs),
    /// Multi-seed teacher + student runs with a mean-metric summary.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct ColumnArgs {
    /// Whitespace-separated column holding the token.
    #[arg(long, default_value_t = 0)]
    token_column: usize,
    /// Column holding the tag.
    #[arg(long, default_value_t = 1)]
    tag_column: usize,
    /// Corpus whose first-occurrence vocabulary defines token and tag ids.
    /// Defaults to the primary data file itself.
    #[arg(long)]
    vocab_from: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 8)]
    states: usize,
    #[arg(long, default_value_t = 30)]
    vocab: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    teacher_train: usize,
    #[arg(long, default_value_t = 500)]
    student_train: usize,
    #[arg(long, default_value_t = 200)]
    dev: usize,
    #[arg(long, default_value_t = 500)]
    test: usize,
    #[arg(long, default_value_t = 8)]
    min_len: usize,
    #[arg(long, default_value_t = 20)]
    max_len: usize,
}

#[derive(Args)]
struct TrainTeacherArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    /// Output checkpoint path; the resolved config lands next to it.
    #[arg(long)]
    output: PathBuf,
    /// JSON file with the training parameters; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON file with the encoder shape; defaults to the teacher preset.
    #[arg(long)]
    model_config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args)]
struct CacheScoresArgs {
    /// Teacher checkpoint.
    #[arg(long)]
    teacher: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args)]
struct DistillArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Teacher checkpoint; required unless --cache is given or the
    /// method is vanilla.
    #[arg(long)]
    teacher: Option<PathBuf>,
    /// Prebuilt teacher score cache; replaces teacher forward passes.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// JSON file with the distillation parameters; flags override.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON file with the student encoder shape; defaults to the preset.
    #[arg(long)]
    model_config: Option<PathBuf>,
    /// vanilla, kbest, structural, or efficient.
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    k: Option<usize>,
    /// linear-decay or paper-efficient.
    #[arg(long, value_parser = parse_lambda_mode)]
    lambda_mode: Option<LambdaMode>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    /// Teacher checkpoint for methods that run the teacher each epoch.
    #[arg(long)]
    teacher: Option<PathBuf>,
    /// Student checkpoint to time; a fresh default student otherwise.
    #[arg(long)]
    student: Option<PathBuf>,
    /// JSON file with the benchmark parameters; flags override.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated method list.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    warmup_epochs: Option<usize>,
    #[arg(long)]
    epochs_measured: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Parallelize within each sentence instead of across sentences.
    #[arg(long)]
    inner_parallel: bool,
    /// Score cache for the efficient method.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Where to write the timing report; stdout either way.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args)]
struct SuiteArgs {
    /// Scratch and report directory.
    #[arg(long)]
    output_dir: PathBuf,
    /// JSON file with the suite parameters; flags override.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed for the synthetic corpora.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    teacher_epochs: Option<usize>,
    #[arg(long)]
    student_epochs: Option<usize>,
    #[arg(long)]
    teacher_lr: Option<f64>,
    #[arg(long)]
    student_lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::parse(s).map_err(|e| e.to_string())
}

fn parse_lambda_mode(s: &str) -> std::result::Result<LambdaMode, String> {
    match s {
        "linear-decay" => Ok(LambdaMode::LinearDecay),
        "paper-efficient" => Ok(LambdaMode::PaperEfficient),
        other => Err(format!(
            "unknown lambda mode {other:?} (expected linear-decay or paper-efficient)"
        )),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Write the fully resolved config next to an output artifact and check
/// that it parses back to the same value.
fn write_resolved<T: Serialize + DeserializeOwned>(
    cfg: &T,
    beside: &Path,
    stem: &str,
) -> Result<()> {
    let path = beside.with_extension(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(cfg)
        .map_err(|e| Error::Config(format!("serializing resolved config: {e}")))?;
    std::fs::write(&path, &text)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    let reparsed: T = read_json(&path)?;
    let a = serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
    let b = serde_json::to_value(&reparsed).map_err(|e| Error::Config(e.to_string()))?;
    if a != b {
        return Err(Error::Config(format!(
            "resolved config at {} did not round-trip",
            path.display()
        )));
    }
    Ok(())
}

/// Load a corpus, re-encoded against the vocabulary reference if one was
/// given.
fn load_dataset(path: &Path, columns: &ColumnArgs) -> Result<Dataset> {
    let ds = data::parse_conll(path, columns.token_column, columns.tag_column)?;
    match &columns.vocab_from {
        None => Ok(ds),
        Some(v) if v == path => Ok(ds),
        Some(v) => {
            let reference = data::parse_conll(v, columns.token_column, columns.tag_column)?;
            ds.map_to_vocab(&reference)
        }
    }
}

/// Re-encode a corpus against a checkpoint's tag order so predicted tag
/// ids line up with gold ids.
fn align_tags(ds: Dataset, tag_vocab: &[String]) -> Result<Dataset> {
    if ds.tag_vocab == tag_vocab {
        return Ok(ds);
    }
    let mut reference = ds.clone();
    reference.tag_vocab = tag_vocab.to_vec();
    reference.sentences.clear();
    ds.map_to_vocab(&reference)
}

fn check_vocab_size(model: &ModelParams, ds: &Dataset, what: &str) -> Result<()> {
    if model.config.vocab_size != ds.token_vocab.len() {
        return Err(Error::Config(format!(
            "{what}: model vocabulary has {} entries but the corpus has {}; \
             pass --vocab-from with the model's training corpus",
            model.config.vocab_size,
            ds.token_vocab.len()
        )));
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut out = std::io::stdout();
    match cli.command {
        Command::Generate(args) => cmd_generate(args, &mut out),
        Command::TrainTeacher(args) => cmd_train_teacher(args, &mut out),
        Command::CacheScores(args) => cmd_cache_scores(args, &mut out),
        Command::Distill(args) => cmd_distill(args, &mut out),
        Command::Evaluate(args) => cmd_evaluate(args, &mut out),
        Command::Bench(args) => cmd_bench(args, &mut out),
        Command::Suite(args) => cmd_suite(args, &mut out),
    }
}

fn cmd_generate(args: GenerateArgs, out: &mut impl std::io::Write) -> Result<()> {
    if args.min_len == 0 || args.max_len < args.min_len {
        return Err(Error::Config("need 1 <= min_len <= max_len".into()));
    }
    std::fs::create_dir_all(&args.output_dir)
        .map_err(|e| Error::io(format!("creating {}", args.output_dir.display()), e))?;
    let mut spec = HmmSpec::random_peaked(args.states, args.vocab, split_seed(args.seed, "hmm"));
    let splits = [
        ("teacher_train", args.teacher_train),
        ("student_train", args.student_train),
        ("dev", args.dev),
        ("test", args.test),
    ];
    for (name, count) in splits {
        spec.seed = split_seed(args.seed, name);
        let ds = data::hmm_generate(&spec, count, args.min_len, args.max_len)?;
        let path = args.output_dir.join(format!("{name}.conll"));
        data::write_conll(&ds, &path)?;
        pipeline::log_epoch(
            out,
            &[
                ("split", name.into()),
                ("sentences", count.to_string()),
                ("fingerprint", format!("{:016x}", ds.fingerprint())),
                ("path", path.display().to_string()),
            ],
        );
    }
    let spec_path = args.output_dir.join("hmm_spec.json");
    std::fs::write(
        &spec_path,
        serde_json::to_string_pretty(&spec).map_err(|e| Error::Config(e.to_string()))?,
    )
    .map_err(|e| Error::io(format!("writing {}", spec_path.display()), e))?;
    Ok(())
}

fn cmd_train_teacher(args: TrainTeacherArgs, out: &mut impl std::io::Write) -> Result<()> {
    let mut cfg: TrainConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => TrainConfig {
            epochs: 20,
            batch_size: 32,
            learning_rate: 5e-5,
            seed: 0,
            threads: 1,
        },
    };
    apply_train_overrides(
        &mut cfg,
        args.epochs,
        args.batch_size,
        args.learning_rate,
        args.seed,
        args.threads,
    );
    cfg.validate()?;

    let train = load_dataset(&args.train, &args.columns)?;
    let mut dev_columns_vocab = args.columns;
    if dev_columns_vocab.vocab_from.is_none() {
        dev_columns_vocab.vocab_from = Some(args.train.clone());
    }
    let dev = load_dataset(&args.dev, &dev_columns_vocab)?;

    let model_cfg = match &args.model_config {
        Some(p) => {
            let mut c: EncoderConfig = read_json(p)?;
            c.seed = split_seed(cfg.seed, "teacher-init");
            c
        }
        None => EncoderConfig::teacher_default(
            train.token_vocab.len(),
            train.num_tags(),
            split_seed(cfg.seed, "teacher-init"),
        ),
    };

    let outcome = train_teacher(&model_cfg, &train, &dev, &cfg, out)?;
    pipeline::save_outcome(&outcome, &train.tag_vocab, &args.output)?;
    write_resolved(&cfg, &args.output, "config")?;
    pipeline::log_epoch(
        out,
        &[
            ("checkpoint", args.output.display().to_string()),
            (
                &format!("best_dev_{}", outcome.metric_name),
                format!("{:.2}", outcome.best_dev_metric),
            ),
        ],
    );
    Ok(())
}

fn apply_train_overrides(
    cfg: &mut TrainConfig,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    learning_rate: Option<f64>,
    seed: Option<u64>,
    threads: Option<usize>,
) {
    if let Some(v) = epochs {
        cfg.epochs = v;
    }
    if let Some(v) = batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    if let Some(v) = threads {
        cfg.threads = v;
    }
}

fn cmd_cache_scores(args: CacheScoresArgs, out: &mut impl std::io::Write) -> Result<()> {
    let (teacher, tag_vocab) = load_checkpoint(&args.teacher)?;
    let ds = align_tags(load_dataset(&args.data, &args.columns)?, &tag_vocab)?;
    check_vocab_size(&teacher, &ds, "cache-scores")?;
    let cache = data::build_cache(&teacher, &ds, &args.output)?;
    pipeline::log_epoch(
        out,
        &[
            ("cache", args.output.display().to_string()),
            ("records", cache.lattices.len().to_string()),
            ("dataset_fingerprint", format!("{:016x}", ds.fingerprint())),
        ],
    );
    Ok(())
}

fn cmd_distill(args: DistillArgs, out: &mut impl std::io::Write) -> Result<()> {
    let mut cfg: DistillConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => DistillConfig {
            method: Method::Efficient,
            k: 3,
            lambda_mode: LambdaMode::PaperEfficient,
            train: TrainConfig {
                epochs: 30,
                batch_size: 32,
                learning_rate: 2e-4,
                seed: 0,
                threads: 1,
            },
        },
    };
    if let Some(m) = args.method {
        cfg.method = m;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(l) = args.lambda_mode {
        cfg.lambda_mode = l;
    }
    apply_train_overrides(
        &mut cfg.train,
        args.epochs,
        args.batch_size,
        args.learning_rate,
        args.seed,
        args.threads,
    );
    cfg.validate()?;

    let mut columns = args.columns;
    if columns.vocab_from.is_none() {
        columns.vocab_from = Some(args.train.clone());
    }
    let train = load_dataset(&args.train, &columns)?;
    let dev = load_dataset(&args.dev, &columns)?;

    let teacher_ckpt = match &args.teacher {
        Some(p) => Some(load_checkpoint(p)?),
        None => None,
    };
    let (train, dev) = match &teacher_ckpt {
        Some((t, tag_vocab)) => {
            let train = align_tags(train, tag_vocab)?;
            let dev = align_tags(dev, tag_vocab)?;
            check_vocab_size(t, &train, "distill")?;
            (train, dev)
        }
        None => (train, dev),
    };

    let side = match (&teacher_ckpt, &args.cache, cfg.method) {
        (_, _, Method::Vanilla) => TeacherSide::None,
        (_, Some(cache), _) => TeacherSide::CacheFile(cache),
        (Some((t, _)), None, _) => TeacherSide::Model(t),
        (None, None, m) => {
            return Err(Error::Config(format!(
                "method {} needs --teacher or --cache",
                m.name()
            )));
        }
    };

    let student_cfg = match &args.model_config {
        Some(p) => {
            let mut c: EncoderConfig = read_json(p)?;
            c.seed = split_seed(cfg.train.seed, "student-init");
            c
        }
        None => EncoderConfig::student_default(
            train.token_vocab.len(),
            train.num_tags(),
            split_seed(cfg.train.seed, "student-init"),
        ),
    };

    let outcome = distill(&student_cfg, side, &train, &dev, &cfg, out)?;
    pipeline::save_outcome(&outcome, &train.tag_vocab, &args.output)?;
    write_resolved(&cfg, &args.output, "config")?;
    pipeline::log_epoch(
        out,
        &[
            ("checkpoint", args.output.display().to_string()),
            ("method", cfg.method.name().into()),
            (
                &format!("best_dev_{}", outcome.metric_name),
                format!("{:.2}", outcome.best_dev_metric),
            ),
        ],
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs, out: &mut impl std::io::Write) -> Result<()> {
    let (model, tag_vocab) = load_checkpoint(&args.model)?;
    let ds = align_tags(load_dataset(&args.data, &args.columns)?, &tag_vocab)?;
    check_vocab_size(&model, &ds, "evaluate")?;
    let pred = pipeline::predict(&model, &ds)?;
    let gold: Vec<Vec<usize>> = ds.sentences.iter().map(|s| s.tags.clone()).collect();
    let acc = eval::token_accuracy(&gold, &pred)?;
    let mut pairs = vec![("token_accuracy", acc)];
    if ds.tag_vocab.iter().any(|t| t.starts_with("B-")) {
        let gold_names: Vec<Vec<String>> = ds.sentences.iter().map(|s| ds.tag_names(s)).collect();
        let pred_names: Vec<Vec<String>> = pred
            .iter()
            .map(|tags| tags.iter().map(|&t| ds.tag_vocab[t].clone()).collect())
            .collect();
        let (p, r, f1) = eval::prf1(&gold_names, &pred_names)?;
        pairs.push(("precision", p));
        pairs.push(("recall", r));
        pairs.push(("f1", f1));
    }
    write!(out, "{}", eval::metrics_report(&pairs))
        .map_err(|e| Error::io("writing metrics".to_string(), e))?;
    Ok(())
}

fn cmd_bench(args: BenchArgs, out: &mut impl std::io::Write) -> Result<()> {
    let mut cfg: BenchConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => BenchConfig {
            methods: vec![
                Method::Vanilla,
                Method::KBest,
                Method::Structural,
                Method::Efficient,
            ],
            warmup_epochs: 1,
            epochs_measured: 5,
            batch_size: 32,
            k: 3,
            threads: 1,
            inner_parallel: false,
            cache_path: None,
            output_path: None,
        },
    };
    if let Some(m) = args.methods {
        cfg.methods = m;
    }
    if let Some(v) = args.warmup_epochs {
        cfg.warmup_epochs = v;
    }
    if let Some(v) = args.epochs_measured {
        cfg.epochs_measured = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.k {
        cfg.k = v;
    }
    if let Some(v) = args.threads {
        cfg.threads = v;
    }
    if args.inner_parallel {
        cfg.inner_parallel = true;
    }
    if let Some(p) = args.cache {
        cfg.cache_path = Some(p);
    }
    if let Some(p) = args.output {
        cfg.output_path = Some(p);
    }
    cfg.validate()?;

    let teacher_ckpt = match &args.teacher {
        Some(p) => Some(load_checkpoint(p)?),
        None => None,
    };
    let ds = {
        let ds = load_dataset(&args.data, &args.columns)?;
        match &teacher_ckpt {
            Some((t, tag_vocab)) => {
                let ds = align_tags(ds, tag_vocab)?;
                check_vocab_size(t, &ds, "bench")?;
                ds
            }
            None => ds,
        }
    };
    let seed = args.seed.unwrap_or(0);
    let student = match &args.student {
        Some(p) => load_checkpoint(p)?.0,
        None => init_model(&EncoderConfig::student_default(
            ds.token_vocab.len(),
            ds.num_tags(),
            split_seed(seed, "student-init"),
        ))?,
    };
    let lr = args.learning_rate.unwrap_or(2e-4);

    let mut timings = Vec::new();
    for &method in &cfg.methods {
        let teacher = match method {
            Method::Vanilla => None,
            Method::Efficient => match (&cfg.cache_path, &teacher_ckpt) {
                (Some(p), _) => Some(BenchTeacher::CacheFile(p)),
                (None, Some((t, _))) => Some(BenchTeacher::Model(t)),
                (None, None) => {
                    return Err(Error::Config(
                        "efficient method needs --cache or --teacher".into(),
                    ));
                }
            },
            _ => match &teacher_ckpt {
                Some((t, _)) => Some(BenchTeacher::Model(t)),
                None => {
                    return Err(Error::Config(format!(
                        "method {} needs --teacher",
                        method.name()
                    )));
                }
            },
        };
        let timing = bench::time_epoch(method, teacher, &student, &ds, &cfg, lr)?;
        writeln!(out, "{}", bench::report_kv(std::slice::from_ref(&timing))?)
            .map_err(|e| Error::io("writing timings".to_string(), e))?;
        timings.push(timing);
    }

    let report = bench::report(&timings)?;
    write!(out, "{report}").map_err(|e| Error::io("writing report".to_string(), e))?;
    if let Some(path) = &cfg.output_path {
        std::fs::write(path, &report)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        write_resolved(&cfg, path, "config")?;
    }
    Ok(())
}

fn cmd_suite(args: SuiteArgs, out: &mut impl std::io::Write) -> Result<()> {
    let mut cfg: SuiteConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => SuiteConfig::default(),
    };
    if let Some(v) = args.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = args.methods {
        cfg.methods = v;
    }
    if let Some(v) = args.teacher_epochs {
        cfg.teacher_epochs = v;
    }
    if let Some(v) = args.student_epochs {
        cfg.student_epochs = v;
    }
    if let Some(v) = args.teacher_lr {
        cfg.teacher_lr = v;
    }
    if let Some(v) = args.student_lr {
        cfg.student_lr = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.k {
        cfg.k = v;
    }
    if let Some(v) = args.threads {
        cfg.threads = v;
    }

    std::fs::create_dir_all(&args.output_dir)
        .map_err(|e| Error::io(format!("creating {}", args.output_dir.display()), e))?;
    let datasets = default_suite_datasets(args.data_seed)?;
    let rows = run_experiment_suite(&datasets, &cfg, &args.output_dir, out)?;
    let report = suite_report(&rows);
    write!(out, "{report}").map_err(|e| Error::io("writing report".to_string(), e))?;
    let report_path = args.output_dir.join("suite_report.txt");
    std::fs::write(&report_path, &report)
        .map_err(|e| Error::io(format!("writing {}", report_path.display()), e))?;
    write_resolved(&cfg, &report_path, "config")?;
    Ok(())
}
