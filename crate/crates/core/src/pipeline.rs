//! Training orchestration: the per-epoch engine shared by the trainer, the
//! distiller, and the benchmark harness.
//!
//! One epoch is split into three instrumented phases, matching the
//! benchmark report's columns:
//! - teacher forward: teacher encoding plus any teacher-side decoding
//!   (K-best lists, forward-backward marginals), or cache reads when a
//!   prebuilt score cache is used;
//! - student forward: student encoding and loss evaluation, including the
//!   loss's lattice-level gradient;
//! - student backward: backprop through the encoder and the Adam update.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crf::{kbest, pair_marginals, viterbi};
use crate::data::{self, Dataset, TeacherScoreCache};
use crate::eval;
use crate::lattice::{LatticeGrad, PairMarginalTable, ScoreLattice};
use crate::losses::{
    combined_objective, kbest_kd_loss, nll_loss, structural_kd_loss, substructure_l2_loss,
    substructure_l2_loss_par, KBestHypotheses, LambdaMode, LambdaSchedule,
};
use crate::model::{
    adam_step, backward, backward_par, encode, encode_par, init_model, load_checkpoint,
    save_checkpoint, AdamState, EncoderConfig, ModelParams, ParamGrads,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Pure NLL training, no teacher.
    Vanilla,
    /// K-best sequence distillation.
    KBest,
    /// Factorized structural distillation.
    Structural,
    /// Sub-structure L2 distillation.
    Efficient,
}

impl Method {
    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "vanilla" => Ok(Method::Vanilla),
            "kbest" => Ok(Method::KBest),
            "structural" => Ok(Method::Structural),
            "efficient" => Ok(Method::Efficient),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected vanilla, kbest, structural, efficient)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::KBest => "kbest",
            Method::Structural => "structural",
            Method::Efficient => "efficient",
        }
    }
}

/// Where the teacher-side quantities for an epoch come from.
pub enum TeacherSide<'a> {
    None,
    Model(&'a ModelParams),
    /// Preloaded cache (distillation runs load once up front).
    Cache(&'a TeacherScoreCache),
    /// Cache file re-read each epoch, so the benchmark's teacher-forward
    /// phase reflects the read cost.
    CacheFile(&'a Path),
}

#[derive(Debug, Clone)]
pub struct EpochOptions {
    pub batch_size: usize,
    pub k: usize,
    pub shuffle_seed: u64,
    pub epoch: usize,
    pub threads: usize,
    /// With `threads > 1`, spend the pool inside each sentence instead of
    /// across sentences: encoder positions, the sub-structure score table,
    /// and backprop split over the pool while sentences stay sequential.
    /// Only the losses that factor over independent sub-structures benefit;
    /// the forward-backward recurrence stays serial in sentence length.
    pub inner_parallel: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EpochStats {
    pub mean_loss: f64,
    pub teacher_forward_s: f64,
    pub student_forward_s: f64,
    pub student_backward_s: f64,
    pub total_s: f64,
}

enum TeacherQuantity {
    None,
    Hypotheses(KBestHypotheses),
    Marginals(PairMarginalTable),
    Lattice(ScoreLattice),
}

fn teacher_quantity(
    method: Method,
    side: &TeacherSide,
    cache_loaded: Option<&TeacherScoreCache>,
    sentence_index: usize,
    tokens: &[usize],
    k: usize,
    par_chunks: usize,
) -> Result<TeacherQuantity> {
    let from_model = |model: &ModelParams| -> Result<TeacherQuantity> {
        let lattice = if par_chunks > 1 {
            encode_par(model, tokens)?
        } else {
            encode(model, tokens)?
        };
        Ok(match method {
            Method::Vanilla => TeacherQuantity::None,
            Method::KBest => {
                TeacherQuantity::Hypotheses(KBestHypotheses::from_scored(kbest(&lattice, k))?)
            }
            Method::Structural => TeacherQuantity::Marginals(pair_marginals(&lattice)),
            Method::Efficient => TeacherQuantity::Lattice(lattice),
        })
    };
    match (side, cache_loaded) {
        (TeacherSide::None, _) => Ok(TeacherQuantity::None),
        (TeacherSide::Model(m), _) => from_model(m),
        (TeacherSide::Cache(c), _) => cached_quantity(method, c, sentence_index, k),
        (TeacherSide::CacheFile(_), Some(c)) => cached_quantity(method, c, sentence_index, k),
        (TeacherSide::CacheFile(_), None) => {
            Err(Error::Config("cache file not loaded for epoch".into()))
        }
    }
}

fn cached_quantity(
    method: Method,
    cache: &TeacherScoreCache,
    sentence_index: usize,
    k: usize,
) -> Result<TeacherQuantity> {
    let lattice = &cache.lattices[sentence_index];
    Ok(match method {
        Method::Vanilla => TeacherQuantity::None,
        Method::KBest => {
            TeacherQuantity::Hypotheses(KBestHypotheses::from_scored(kbest(lattice, k))?)
        }
        Method::Structural => TeacherQuantity::Marginals(pair_marginals(lattice)),
        Method::Efficient => TeacherQuantity::Lattice(lattice.clone()),
    })
}

fn sentence_loss(
    method: Method,
    student_lattice: &ScoreLattice,
    teacher: &TeacherQuantity,
    gold: &crate::TagSequence,
    lambda: f64,
    par_chunks: usize,
) -> Result<(f64, LatticeGrad)> {
    let kd = match (method, teacher) {
        (Method::Vanilla, _) => None,
        (Method::KBest, TeacherQuantity::Hypotheses(h)) => Some(kbest_kd_loss(student_lattice, h)?),
        (Method::Structural, TeacherQuantity::Marginals(m)) => {
            Some(structural_kd_loss(student_lattice, m)?)
        }
        (Method::Efficient, TeacherQuantity::Lattice(t)) => Some(if par_chunks > 1 {
            substructure_l2_loss_par(student_lattice, t, par_chunks)?
        } else {
            substructure_l2_loss(student_lattice, t)?
        }),
        _ => {
            return Err(Error::Config(
                "teacher quantity does not match distillation method".into(),
            ))
        }
    };
    match kd {
        None => nll_loss(student_lattice, gold),
        Some((kd_loss, kd_grad)) => {
            if lambda >= 1.0 {
                // lambda 1: pure KD, no NLL (and for the L2 method no DP at all)
                Ok((kd_loss, kd_grad))
            } else {
                let (nl, ng) = nll_loss(student_lattice, gold)?;
                combined_objective(kd_loss, &kd_grad, nl, &ng, lambda)
            }
        }
    }
}

fn run_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads <= 1 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(f)
    }
}

/// One training epoch of `method`, mutating the student in place.
/// Phase durations are accumulated with a monotonic clock.
pub fn train_epoch(
    method: Method,
    teacher: TeacherSide,
    student: &mut ModelParams,
    adam: &mut AdamState,
    dataset: &Dataset,
    lambda: f64,
    opts: &EpochOptions,
) -> Result<EpochStats> {
    let epoch_start = Instant::now();
    let mut stats = EpochStats::default();
    let mut loss_sum = 0.0;

    // Cache-file mode: the read happens once per epoch, inside the
    // teacher-forward phase.
    let cache_loaded: Option<TeacherScoreCache> = match &teacher {
        TeacherSide::CacheFile(path) => {
            let t0 = Instant::now();
            let cache = data::load_cache(path, dataset)?;
            stats.teacher_forward_s += t0.elapsed().as_secs_f64();
            Some(cache)
        }
        _ => None,
    };

    let batches = data::batch_iter(
        dataset.len(),
        opts.batch_size,
        opts.shuffle_seed,
        opts.epoch,
    );
    // Inner-parallel mode keeps sentences sequential and spends the pool
    // within each one; cross-sentence mode parallelizes over the batch.
    let inner = opts.inner_parallel && opts.threads > 1;
    let chunks = if inner { opts.threads } else { 1 };
    for batch in &batches {
        // ---- teacher forward (absent entirely for vanilla training) ----
        let t0 = Instant::now();
        let no_teacher = matches!(teacher, TeacherSide::None);
        let teacher_quantities: Vec<TeacherQuantity> = if no_teacher {
            batch.iter().map(|_| Ok(TeacherQuantity::None)).collect()
        } else {
            run_pool(opts.threads, || {
                if opts.threads <= 1 || inner {
                    batch
                        .iter()
                        .map(|&si| {
                            teacher_quantity(
                                method,
                                &teacher,
                                cache_loaded.as_ref(),
                                si,
                                &dataset.sentences[si].tokens,
                                opts.k,
                                chunks,
                            )
                        })
                        .collect::<Vec<Result<TeacherQuantity>>>()
                } else {
                    batch
                        .par_iter()
                        .map(|&si| {
                            teacher_quantity(
                                method,
                                &teacher,
                                cache_loaded.as_ref(),
                                si,
                                &dataset.sentences[si].tokens,
                                opts.k,
                                1,
                            )
                        })
                        .collect()
                }
            })
        }
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        if !no_teacher {
            stats.teacher_forward_s += t0.elapsed().as_secs_f64();
        }

        // ---- student forward: encode + loss value + lattice gradient ----
        let t0 = Instant::now();
        let student_ref = &*student;
        let forward: Vec<(f64, LatticeGrad)> = run_pool(opts.threads, || {
            let work = |(&si, tq): (&usize, &TeacherQuantity)| {
                let sentence = &dataset.sentences[si];
                let lattice = if chunks > 1 {
                    encode_par(student_ref, &sentence.tokens)?
                } else {
                    encode(student_ref, &sentence.tokens)?
                };
                sentence_loss(
                    method,
                    &lattice,
                    tq,
                    &crate::TagSequence(sentence.tags.clone()),
                    lambda,
                    chunks,
                )
            };
            if opts.threads <= 1 || inner {
                batch
                    .iter()
                    .zip(&teacher_quantities)
                    .map(work)
                    .collect::<Vec<Result<_>>>()
            } else {
                batch
                    .par_iter()
                    .zip(&teacher_quantities)
                    .map(work)
                    .collect()
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        stats.student_forward_s += t0.elapsed().as_secs_f64();

        // ---- student backward: backprop + Adam ----
        let t0 = Instant::now();
        let scale = 1.0 / batch.len() as f64;
        let grads_per_sentence: Vec<ParamGrads> = run_pool(opts.threads, || {
            let work = |(&si, (loss, lat_grad)): (&usize, &(f64, LatticeGrad))| {
                let _ = loss;
                if chunks > 1 {
                    backward_par(student_ref, &dataset.sentences[si].tokens, lat_grad, chunks)
                } else {
                    backward(student_ref, &dataset.sentences[si].tokens, lat_grad)
                }
            };
            if opts.threads <= 1 || inner {
                batch
                    .iter()
                    .zip(&forward)
                    .map(work)
                    .collect::<Vec<Result<_>>>()
            } else {
                batch.par_iter().zip(&forward).map(work).collect()
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let mut total = ParamGrads::zeros_like(student);
        for g in &grads_per_sentence {
            total.accumulate(g);
        }
        total.scale(scale);
        adam_step(student, &total, adam)?;
        stats.student_backward_s += t0.elapsed().as_secs_f64();

        loss_sum += forward.iter().map(|(l, _)| l).sum::<f64>();
    }

    stats.mean_loss = loss_sum / dataset.len() as f64;
    stats.total_s = epoch_start.elapsed().as_secs_f64();
    Ok(stats)
}

/// Viterbi-decode every sentence of a dataset.
pub fn predict(params: &ModelParams, dataset: &Dataset) -> Result<Vec<Vec<usize>>> {
    dataset
        .sentences
        .iter()
        .map(|s| {
            let lattice = encode(params, &s.tokens)?;
            Ok(viterbi(&lattice).0 .0)
        })
        .collect()
}

/// Dev/test metric: entity F1 when the tag set looks like BIO, token
/// accuracy otherwise.
pub fn dev_metric(dataset: &Dataset, pred: &[Vec<usize>]) -> Result<(String, f64)> {
    let has_spans = dataset
        .tag_vocab
        .iter()
        .any(|t| t.starts_with("B-") || t.starts_with("I-"));
    if has_spans {
        let gold: Vec<Vec<String>> = dataset
            .sentences
            .iter()
            .map(|s| dataset.tag_names(s))
            .collect();
        let pred_names: Vec<Vec<String>> = pred
            .iter()
            .map(|p| p.iter().map(|&t| dataset.tag_vocab[t].clone()).collect())
            .collect();
        let (_, _, f1) = eval::prf1(&gold, &pred_names)?;
        Ok(("f1".into(), f1))
    } else {
        let gold: Vec<Vec<usize>> = dataset.sentences.iter().map(|s| s.tags.clone()).collect();
        let acc = eval::token_accuracy(&gold, pred)?;
        Ok(("token_accuracy".into(), acc))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

fn default_batch_size() -> usize {
    32
}

fn default_threads() -> usize {
    1
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.learning_rate.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-epoch log record, one key=value line per field.
pub fn log_epoch(out: &mut impl std::io::Write, fields: &[(&str, String)]) {
    let line = fields
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    let _ = writeln!(out, "{line}");
}

pub struct TrainOutcome {
    pub params: ModelParams,
    pub best_dev_metric: f64,
    pub metric_name: String,
    pub final_train_loss: f64,
}

/// Train a model from scratch with NLL, selecting the best-dev epoch.
pub fn train_teacher(
    config: &EncoderConfig,
    train: &Dataset,
    dev: &Dataset,
    opts: &TrainConfig,
    log: &mut impl std::io::Write,
) -> Result<TrainOutcome> {
    opts.validate()?;
    let mut params = init_model(config)?;
    let mut adam = AdamState::new(&params, opts.learning_rate);
    let mut best: Option<(f64, ModelParams)> = None;
    let mut metric_name = String::new();
    let mut final_loss = 0.0;
    for epoch in 0..opts.epochs {
        let stats = train_epoch(
            Method::Vanilla,
            TeacherSide::None,
            &mut params,
            &mut adam,
            train,
            0.0,
            &EpochOptions {
                batch_size: opts.batch_size,
                k: 1,
                shuffle_seed: opts.seed,
                epoch,
                threads: opts.threads,
                inner_parallel: false,
            },
        )?;
        let pred = predict(&params, dev)?;
        let (name, metric) = dev_metric(dev, &pred)?;
        metric_name = name;
        final_loss = stats.mean_loss;
        log_epoch(
            log,
            &[
                ("epoch", epoch.to_string()),
                ("train_loss", format!("{:.6}", stats.mean_loss)),
                (&format!("dev_{metric_name}"), format!("{metric:.2}")),
            ],
        );
        if best.as_ref().is_none_or(|(m, _)| metric > *m) {
            best = Some((metric, params.clone()));
        }
    }
    let (best_metric, best_params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        params: best_params,
        best_dev_metric: best_metric,
        metric_name,
        final_train_loss: final_loss,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DistillConfig {
    pub method: Method,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_lambda_mode")]
    pub lambda_mode: LambdaMode,
    pub train: TrainConfig,
}

fn default_k() -> usize {
    3
}

fn default_lambda_mode() -> LambdaMode {
    LambdaMode::PaperEfficient
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.method == Method::KBest && self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        Ok(())
    }
}

/// Distill a student against a teacher (or a prebuilt score cache).
pub fn distill(
    student_config: &EncoderConfig,
    teacher: TeacherSide,
    train: &Dataset,
    dev: &Dataset,
    cfg: &DistillConfig,
    log: &mut impl std::io::Write,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if let TeacherSide::Model(t) = &teacher {
        if t.config.num_tags != student_config.num_tags {
            return Err(Error::Config(format!(
                "teacher has {} tags, student {}",
                t.config.num_tags, student_config.num_tags
            )));
        }
    }
    let schedule = LambdaSchedule::new(cfg.lambda_mode, cfg.train.epochs)?;
    let mut params = init_model(student_config)?;
    let mut adam = AdamState::new(&params, cfg.train.learning_rate);
    let mut best: Option<(f64, ModelParams)> = None;
    let mut metric_name = String::new();
    let mut final_loss = 0.0;
    for epoch in 0..cfg.train.epochs {
        let lambda = if cfg.method == Method::Vanilla {
            0.0
        } else {
            schedule.lambda(epoch)
        };
        let side = match &teacher {
            TeacherSide::None => TeacherSide::None,
            TeacherSide::Model(m) => TeacherSide::Model(m),
            TeacherSide::Cache(c) => TeacherSide::Cache(c),
            TeacherSide::CacheFile(p) => TeacherSide::CacheFile(p),
        };
        let stats = train_epoch(
            cfg.method,
            side,
            &mut params,
            &mut adam,
            train,
            lambda,
            &EpochOptions {
                batch_size: cfg.train.batch_size,
                k: cfg.k,
                shuffle_seed: cfg.train.seed,
                epoch,
                threads: cfg.train.threads,
                inner_parallel: false,
            },
        )?;
        let pred = predict(&params, dev)?;
        let (name, metric) = dev_metric(dev, &pred)?;
        metric_name = name;
        final_loss = stats.mean_loss;
        log_epoch(
            log,
            &[
                ("epoch", epoch.to_string()),
                ("lambda", format!("{lambda}")),
                ("train_loss", format!("{:.6}", stats.mean_loss)),
                (&format!("dev_{metric_name}"), format!("{metric:.2}")),
                (
                    "teacher_forward_s",
                    format!("{:.3}", stats.teacher_forward_s),
                ),
                (
                    "student_forward_s",
                    format!("{:.3}", stats.student_forward_s),
                ),
                (
                    "student_backward_s",
                    format!("{:.3}", stats.student_backward_s),
                ),
            ],
        );
        if best.as_ref().is_none_or(|(m, _)| metric > *m) {
            best = Some((metric, params.clone()));
        }
    }
    let (best_metric, best_params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        params: best_params,
        best_dev_metric: best_metric,
        metric_name,
        final_train_loss: final_loss,
    })
}

/// Root-seed split: every randomness consumer gets its own stream.
pub fn split_seed(root: u64, purpose: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325 ^ root.wrapping_mul(0x100000001b3);
    for &b in purpose.as_bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub teacher_epochs: usize,
    pub student_epochs: usize,
    pub teacher_lr: f64,
    pub student_lr: f64,
    pub batch_size: usize,
    pub k: usize,
    pub threads: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seeds: vec![1, 2, 3, 4, 5],
            methods: vec![Method::Vanilla, Method::Efficient],
            teacher_epochs: 20,
            student_epochs: 30,
            teacher_lr: 5e-5,
            student_lr: 2e-4,
            batch_size: 32,
            k: 3,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub method: String,
    pub metric_name: String,
    pub mean_test_metric: f64,
    pub per_seed: Vec<f64>,
}

pub struct SuiteDatasets {
    pub teacher_train: Dataset,
    pub student_train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
}

/// The default synthetic benchmark corpora: one HMM, disjoint sampling
/// seeds per split, shared vocabularies.
pub fn default_suite_datasets(root_seed: u64) -> Result<SuiteDatasets> {
    let mut spec = data::HmmSpec::random_peaked(8, 30, split_seed(root_seed, "hmm"));
    let gen = |spec: &mut data::HmmSpec, purpose: &str, n: usize| -> Result<Dataset> {
        spec.seed = split_seed(root_seed, purpose);
        data::hmm_generate(spec, n, 8, 20)
    };
    Ok(SuiteDatasets {
        teacher_train: gen(&mut spec, "teacher-train", 2000)?,
        student_train: gen(&mut spec, "student-train", 500)?,
        dev: gen(&mut spec, "dev", 200)?,
        test: gen(&mut spec, "test", 500)?,
    })
}

/// Train teacher + per-method students for every seed; report mean
/// held-out metric per method.
pub fn run_experiment_suite(
    datasets: &SuiteDatasets,
    cfg: &SuiteConfig,
    scratch_dir: &Path,
    log: &mut impl std::io::Write,
) -> Result<Vec<SuiteRow>> {
    if cfg.seeds.is_empty() {
        return Err(Error::Config("need at least one seed".into()));
    }
    let num_tags = datasets.teacher_train.num_tags();
    let vocab = datasets.teacher_train.token_vocab.len();
    let mut per_method: Vec<(Method, Vec<f64>)> =
        cfg.methods.iter().map(|&m| (m, Vec::new())).collect();
    let mut metric_name = String::new();

    for &seed in &cfg.seeds {
        let teacher_cfg =
            EncoderConfig::teacher_default(vocab, num_tags, split_seed(seed, "teacher-init"));
        let teacher_out = train_teacher(
            &teacher_cfg,
            &datasets.teacher_train,
            &datasets.dev,
            &TrainConfig {
                epochs: cfg.teacher_epochs,
                batch_size: cfg.batch_size,
                learning_rate: cfg.teacher_lr,
                seed: split_seed(seed, "teacher-shuffle"),
                threads: cfg.threads,
            },
            log,
        )?;
        log_epoch(
            log,
            &[
                ("seed", seed.to_string()),
                ("stage", "teacher".into()),
                (
                    &format!("dev_{}", teacher_out.metric_name),
                    format!("{:.2}", teacher_out.best_dev_metric),
                ),
            ],
        );

        let cache_path: PathBuf = scratch_dir.join(format!("teacher-scores-{seed}.cache"));
        let cache = data::build_cache(&teacher_out.params, &datasets.student_train, &cache_path)?;

        for (method, results) in &mut per_method {
            let student_cfg =
                EncoderConfig::student_default(vocab, num_tags, split_seed(seed, "student-init"));
            let dcfg = DistillConfig {
                method: *method,
                k: cfg.k,
                lambda_mode: LambdaMode::PaperEfficient,
                train: TrainConfig {
                    epochs: cfg.student_epochs,
                    batch_size: cfg.batch_size,
                    learning_rate: cfg.student_lr,
                    seed: split_seed(seed, "student-shuffle"),
                    threads: cfg.threads,
                },
            };
            let side = match method {
                Method::Vanilla => TeacherSide::None,
                Method::Efficient => TeacherSide::Cache(&cache),
                _ => TeacherSide::Model(&teacher_out.params),
            };
            let out = distill(
                &student_cfg,
                side,
                &datasets.student_train,
                &datasets.dev,
                &dcfg,
                log,
            )
            .map_err(|e| Error::Config(format!("seed {seed}, method {}: {e}", method.name())))?;
            let pred = predict(&out.params, &datasets.test)?;
            let (name, metric) = dev_metric(&datasets.test, &pred)?;
            metric_name = name;
            log_epoch(
                log,
                &[
                    ("seed", seed.to_string()),
                    ("method", method.name().into()),
                    (&format!("test_{metric_name}"), format!("{metric:.2}")),
                ],
            );
            results.push(metric);
        }
    }

    Ok(per_method
        .into_iter()
        .map(|(method, per_seed)| SuiteRow {
            method: method.name().to_string(),
            metric_name: metric_name.clone(),
            mean_test_metric: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
            per_seed,
        })
        .collect())
}

/// Table-1-shaped summary of a suite run.
pub fn suite_report(rows: &[SuiteRow]) -> String {
    let mut out = String::new();
    let metric = rows
        .first()
        .map(|r| r.metric_name.clone())
        .unwrap_or_default();
    out.push_str(&format!(
        "{:<12} {:>16}\n",
        "Method",
        format!("Mean {metric}")
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<12} {:>16.2}\n",
            row.method, row.mean_test_metric
        ));
    }
    out
}

pub fn save_outcome(outcome: &TrainOutcome, tag_vocab: &[String], path: &Path) -> Result<()> {
    save_checkpoint(&outcome.params, tag_vocab, path)
}

pub fn load_model(path: &Path) -> Result<(ModelParams, Vec<String>)> {
    load_checkpoint(path)
}
