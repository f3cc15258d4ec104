//! End-to-end acceptance checks. Each test prints one pass/fail line
//! (visible with `--nocapture`, or on failure). The checks share a lock
//! so the global counters and wall-clock measurements are not polluted
//! by concurrent tests.

use std::sync::Mutex;
use std::time::Instant;

use crf_distill::bench::{self, BenchConfig, BenchTeacher};
use crf_distill::counters;
use crf_distill::crf::{
    enumerate_all, kbest, log_partition, log_sum_exp, pair_marginals, test_support::random_lattice,
    viterbi,
};
use crf_distill::data::{self, build_cache, hmm_generate, Dataset, HmmSpec};
use crf_distill::eval::{extract_spans, prf1};
use crf_distill::lattice::{LatticeGrad, PairMarginalTable, ScoreLattice, TagSequence};
use crf_distill::losses::{
    combined_objective, exact_kd_loss, kbest_kd_loss, nll_loss, structural_kd_loss,
    substructure_l2_loss, KBestHypotheses,
};
use crf_distill::model::{backward, encode, init_model, AdamState, EncoderConfig, ModelParams};
use crf_distill::pipeline::{
    default_suite_datasets, run_experiment_suite, train_epoch, EpochOptions, Method, SuiteConfig,
    TeacherSide,
};

static GATE: Mutex<()> = Mutex::new(());

fn run(name: &str, body: impl FnOnce() -> Result<(), String>) {
    let _lock = GATE.lock().unwrap_or_else(|p| p.into_inner());
    let outcome = body();
    match &outcome {
        Ok(()) => println!("acceptance {name}: pass"),
        Err(msg) => println!("acceptance {name}: FAIL ({msg})"),
    }
    if let Err(msg) = outcome {
        panic!("{name}: {msg}");
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Enumeration-based marginals, independent of the forward-backward code.
fn brute_marginals(lattice: &ScoreLattice) -> PairMarginalTable {
    let n = lattice.num_tags();
    let len = lattice.len();
    let all = enumerate_all(lattice).unwrap();
    let mut start = vec![0.0; n];
    let mut pair = vec![0.0; len.saturating_sub(1) * n * n];
    for (y, _, p) in &all {
        start[y.0[0]] += p;
        for l in 0..len - 1 {
            pair[(l * n + y.0[l]) * n + y.0[l + 1]] += p;
        }
    }
    PairMarginalTable::new(len, n, start, pair)
}

/// Enumerated sequences ordered the way the decoders break ties: score
/// descending, then tags lexicographically ascending.
fn brute_ranking(lattice: &ScoreLattice) -> Vec<(TagSequence, f64)> {
    let mut all: Vec<(TagSequence, f64)> = enumerate_all(lattice)
        .unwrap()
        .into_iter()
        .map(|(y, s, _)| (y, s))
        .collect();
    all.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0 .0.cmp(&b.0 .0))
    });
    all
}

#[test]
fn criterion_1_oracle_equivalence() {
    run("1 oracle-equivalence", || {
        let t0 = Instant::now();
        let mut checked = 0usize;
        for case in 0..220u64 {
            let len = 1 + (case % 6) as usize;
            let n = 1 + ((case / 6) % 4) as usize;
            let (lo, hi) = if case % 11 == 0 {
                (-30.0, 30.0)
            } else {
                (-3.0, 3.0)
            };
            let lat = random_lattice(1000 + case, len, n, lo, hi);

            let all = enumerate_all(&lat).map_err(|e| e.to_string())?;
            let scores: Vec<f64> = all.iter().map(|(_, s, _)| *s).collect();
            let want_z = log_sum_exp(&scores);
            let got_z = log_partition(&lat);
            ensure(
                ((got_z - want_z) / want_z.abs().max(1.0)).abs() <= 1e-10,
                || format!("case {case}: log partition {got_z} vs {want_z}"),
            )?;

            let want_m = brute_marginals(&lat);
            let got_m = pair_marginals(&lat);
            let close = want_m
                .start_marg
                .iter()
                .zip(&got_m.start_marg)
                .chain(want_m.pair_marg.iter().zip(&got_m.pair_marg))
                .all(|(a, b)| (a - b).abs() <= 1e-9);
            ensure(close, || format!("case {case}: marginal mismatch"))?;

            let ranking = brute_ranking(&lat);
            let (vit, vit_score) = viterbi(&lat);
            ensure(vit == ranking[0].0, || {
                format!("case {case}: viterbi {:?} vs {:?}", vit.0, ranking[0].0 .0)
            })?;
            ensure((vit_score - ranking[0].1).abs() <= 1e-9, || {
                format!("case {case}: viterbi score off")
            })?;

            let k = 4.min(ranking.len());
            let got_k = kbest(&lat, 4);
            ensure(got_k.len() == k, || format!("case {case}: kbest size"))?;
            for (r, ((gy, gs), (wy, ws))) in got_k.iter().zip(&ranking).enumerate() {
                ensure(gy == wy && (gs - ws).abs() <= 1e-9, || {
                    format!("case {case}: kbest rank {r} mismatch")
                })?;
            }
            checked += 1;
        }
        ensure(checked >= 200, || "fewer than 200 lattices".into())?;
        let secs = t0.elapsed().as_secs_f64();
        ensure(secs < 10.0, || format!("took {secs:.1}s, budget 10s"))
    });
}

#[test]
fn criterion_2_factorization_identity() {
    run("2 factorization-identity", || {
        let mut checked = 0usize;
        for case in 0..120u64 {
            let len = 2 + (case % 5) as usize;
            let n = 2 + ((case / 5) % 3) as usize;
            if (n as f64).powi(len as i32) > 4096.0 {
                continue;
            }
            let teacher = random_lattice(5000 + 2 * case, len, n, -4.0, 4.0);
            let student = random_lattice(5001 + 2 * case, len, n, -4.0, 4.0);
            let tm = pair_marginals(&teacher);
            let (factored, _) = structural_kd_loss(&student, &tm).map_err(|e| e.to_string())?;
            let exact = exact_kd_loss(&student, &teacher).map_err(|e| e.to_string())?;
            ensure((factored - exact).abs() <= 1e-9, || {
                format!("case {case}: factored {factored} vs exact {exact}")
            })?;
            checked += 1;
        }
        ensure(checked >= 100, || "fewer than 100 pairs".into())
    });
}

fn lattice_fd(lattice: &ScoreLattice, mut f: impl FnMut(&ScoreLattice) -> f64) -> LatticeGrad {
    let step = 1e-4;
    let mut grad = LatticeGrad::zeros_like(lattice);
    for k in 0..lattice.start.len() {
        let mut hi = lattice.clone();
        let mut lo = lattice.clone();
        hi.start[k] += step;
        lo.start[k] -= step;
        grad.d_start[k] = (f(&hi) - f(&lo)) / (2.0 * step);
    }
    for k in 0..lattice.pair.len() {
        let mut hi = lattice.clone();
        let mut lo = lattice.clone();
        hi.pair[k] += step;
        lo.pair[k] -= step;
        grad.d_pair[k] = (f(&hi) - f(&lo)) / (2.0 * step);
    }
    grad
}

fn grads_close(got: &LatticeGrad, want: &LatticeGrad, rel: f64) -> Result<(), String> {
    for (g, w) in got
        .d_start
        .iter()
        .zip(&want.d_start)
        .chain(got.d_pair.iter().zip(&want.d_pair))
    {
        let denom = w.abs().max(1.0);
        if ((g - w) / denom).abs() > rel {
            return Err(format!("analytic {g} vs finite-diff {w}"));
        }
    }
    Ok(())
}

#[test]
fn criterion_3_gradient_suite() {
    run("3 gradient-suite", || {
        for seed in 0..8u64 {
            let len = 3 + (seed % 3) as usize;
            let n = 3;
            let student = random_lattice(7000 + seed, len, n, -2.0, 2.0);
            let teacher = random_lattice(7100 + seed, len, n, -2.0, 2.0);
            let gold = TagSequence((0..len).map(|l| (l + seed as usize) % n).collect());

            let (_, g) = nll_loss(&student, &gold).map_err(|e| e.to_string())?;
            let fd = lattice_fd(&student, |lat| nll_loss(lat, &gold).unwrap().0);
            grads_close(&g, &fd, 1e-4).map_err(|e| format!("nll seed {seed}: {e}"))?;

            let tm = pair_marginals(&teacher);
            let (_, g) = structural_kd_loss(&student, &tm).map_err(|e| e.to_string())?;
            let fd = lattice_fd(&student, |lat| structural_kd_loss(lat, &tm).unwrap().0);
            grads_close(&g, &fd, 1e-4).map_err(|e| format!("structural seed {seed}: {e}"))?;

            let hyps =
                KBestHypotheses::from_scored(kbest(&teacher, 3)).map_err(|e| e.to_string())?;
            let (_, g) = kbest_kd_loss(&student, &hyps).map_err(|e| e.to_string())?;
            let fd = lattice_fd(&student, |lat| kbest_kd_loss(lat, &hyps).unwrap().0);
            grads_close(&g, &fd, 1e-4).map_err(|e| format!("kbest seed {seed}: {e}"))?;

            let (_, g) = substructure_l2_loss(&student, &teacher).map_err(|e| e.to_string())?;
            let fd = lattice_fd(&student, |lat| {
                substructure_l2_loss(lat, &teacher).unwrap().0
            });
            grads_close(&g, &fd, 1e-4).map_err(|e| format!("l2 seed {seed}: {e}"))?;

            let mix = |lat: &ScoreLattice| {
                let (kd, kd_g) = substructure_l2_loss(lat, &teacher).unwrap();
                let (nl, nl_g) = nll_loss(lat, &gold).unwrap();
                combined_objective(kd, &kd_g, nl, &nl_g, 0.5).unwrap()
            };
            let (_, g) = mix(&student);
            let fd = lattice_fd(&student, |lat| mix(lat).0);
            grads_close(&g, &fd, 1e-4).map_err(|e| format!("combined seed {seed}: {e}"))?;
        }

        // end to end: encoder + CRF head against parameter-space differences
        let cfg = EncoderConfig {
            vocab_size: 12,
            embed_dim: 6,
            window: 3,
            hidden_dims: vec![7],
            num_tags: 4,
            seed: 99,
        };
        let model = init_model(&cfg).map_err(|e| e.to_string())?;
        let sentence = [1usize, 5, 3, 8, 2];
        let gold = TagSequence(vec![0, 2, 1, 3, 1]);
        let lat = encode(&model, &sentence).map_err(|e| e.to_string())?;
        let (_, lat_grad) = nll_loss(&lat, &gold).map_err(|e| e.to_string())?;
        let grads = backward(&model, &sentence, &lat_grad).map_err(|e| e.to_string())?;
        let loss_of = |params: &ModelParams| {
            let lat = encode(params, &sentence).unwrap();
            nll_loss(&lat, &gold).unwrap().0
        };
        let step = 1e-4;
        for ti in 0..grads.tensors().len() {
            let len = grads.tensors()[ti].len();
            for k in (0..len).step_by((len / 7).max(1)) {
                let mut hi = model.clone();
                hi.tensors_mut()[ti][k] += step;
                let mut lo = model.clone();
                lo.tensors_mut()[ti][k] -= step;
                let fd = (loss_of(&hi) - loss_of(&lo)) / (2.0 * step);
                let got = grads.tensors()[ti][k];
                ensure(((got - fd) / fd.abs().max(1.0)).abs() <= 1e-3, || {
                    format!("end-to-end tensor {ti} coord {k}: {got} vs {fd}")
                })?;
            }
        }
        Ok(())
    });
}

/// Epoch/learning-rate settings sized so the full multi-seed run fits the
/// time budget on one core; the corpora themselves are the defaults.
fn suite_config() -> SuiteConfig {
    SuiteConfig {
        seeds: vec![1, 2, 3, 4, 5],
        methods: vec![Method::Vanilla, Method::Efficient],
        teacher_epochs: 8,
        student_epochs: 8,
        teacher_lr: 1e-3,
        student_lr: 2e-3,
        batch_size: 32,
        k: 3,
        threads: 1,
    }
}

#[test]
fn criterion_4_accuracy_ordering() {
    run("4 accuracy-ordering", || {
        let t0 = Instant::now();
        let datasets = default_suite_datasets(0).map_err(|e| e.to_string())?;
        ensure(datasets.teacher_train.len() == 2000, || {
            "teacher split size".into()
        })?;
        ensure(datasets.student_train.len() == 500, || {
            "student split size".into()
        })?;
        ensure(datasets.teacher_train.num_tags() == 8, || {
            "state count".into()
        })?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut log = std::io::sink();
        let rows = run_experiment_suite(&datasets, &suite_config(), dir.path(), &mut log)
            .map_err(|e| e.to_string())?;
        let vanilla = rows
            .iter()
            .find(|r| r.method == "vanilla")
            .ok_or("missing vanilla row")?;
        let efficient = rows
            .iter()
            .find(|r| r.method == "efficient")
            .ok_or("missing efficient row")?;
        let wins = vanilla
            .per_seed
            .iter()
            .zip(&efficient.per_seed)
            .filter(|(v, e)| e >= v)
            .count();
        let secs = t0.elapsed().as_secs_f64();
        ensure(wins >= 4, || {
            format!(
                "efficient {:.2?} beat vanilla {:.2?} in only {wins}/5 seeds",
                efficient.per_seed, vanilla.per_seed
            )
        })?;
        ensure(
            efficient.mean_test_metric >= vanilla.mean_test_metric,
            || {
                format!(
                    "mean efficient {:.2} < mean vanilla {:.2}",
                    efficient.mean_test_metric, vanilla.mean_test_metric
                )
            },
        )?;
        ensure(secs < 600.0, || format!("took {secs:.0}s, budget 600s"))
    });
}

/// A small benchmark corpus with a matching untrained teacher; phase
/// timings do not depend on the weights.
fn bench_setup(num_sentences: usize, min_len: usize, max_len: usize) -> (Dataset, ModelParams) {
    let mut spec = HmmSpec::random_peaked(8, 30, 4242);
    spec.seed = 777;
    let ds = hmm_generate(&spec, num_sentences, min_len, max_len).unwrap();
    let teacher = init_model(&EncoderConfig::teacher_default(
        ds.token_vocab.len(),
        ds.num_tags(),
        4243,
    ))
    .unwrap();
    (ds, teacher)
}

fn student_for(ds: &Dataset, seed: u64) -> ModelParams {
    init_model(&EncoderConfig::student_default(
        ds.token_vocab.len(),
        ds.num_tags(),
        seed,
    ))
    .unwrap()
}

#[test]
fn criterion_5_phase_timing() {
    run("5 phase-timing", || {
        let (ds, teacher) = bench_setup(5000, 20, 60);
        let student = student_for(&ds, 5050);
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cache_path = dir.path().join("scores.cache");
        let cache = build_cache(&teacher, &ds, &cache_path).map_err(|e| e.to_string())?;
        let cfg = BenchConfig {
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
            cache_path: Some(cache_path.clone()),
            output_path: None,
        };
        let mut timings = Vec::new();
        for &method in &cfg.methods {
            let teacher_side = match method {
                Method::Vanilla => None,
                Method::Efficient => Some(BenchTeacher::Cache(&cache)),
                _ => Some(BenchTeacher::Model(&teacher)),
            };
            timings.push(
                bench::time_epoch(method, teacher_side, &student, &ds, &cfg, 2e-3)
                    .map_err(|e| e.to_string())?,
            );
        }
        let total = |name: &str| {
            timings
                .iter()
                .find(|t| t.method == name)
                .map(|t| t.total_s)
                .ok_or_else(|| format!("missing {name} row"))
        };
        let kbest_t = total("kbest")?;
        let structural_t = total("structural")?;
        let efficient_t = total("efficient")?;
        ensure(efficient_t < structural_t, || {
            format!("efficient {efficient_t:.3}s not under structural {structural_t:.3}s")
        })?;
        ensure(efficient_t < kbest_t, || {
            format!("efficient {efficient_t:.3}s not under kbest {kbest_t:.3}s")
        })?;
        let ratio = structural_t / efficient_t;
        ensure(ratio >= 1.3, || {
            format!("structural/efficient speedup {ratio:.2}x below 1.3x")
        })?;

        let report = bench::report(&timings).map_err(|e| e.to_string())?;
        for column in [
            "Method",
            "Tea. Forward",
            "Stu. Forward",
            "Stu. Backward",
            "Total",
        ] {
            ensure(report.contains(column), || {
                format!("report lacks column {column:?}")
            })?;
        }
        let vanilla_row = report
            .lines()
            .find(|l| l.starts_with("vanilla"))
            .ok_or("report lacks vanilla row")?;
        ensure(vanilla_row.split_whitespace().nth(1) == Some("-"), || {
            "vanilla teacher-forward cell is not \"-\"".into()
        })
    });
}

#[test]
fn criterion_6_length_scaling() {
    run("6 length-scaling", || {
        // The length effect comes from per-sentence parallelism: the
        // sub-structure loss splits across the pool with a fixed dispatch
        // cost per sentence, which amortizes as sentences grow, while the
        // structural method keeps its serial forward-backward recurrence.
        // Measured in the opt-in inner-parallel benchmark mode; the
        // efficient teacher side re-reads the score cache each epoch, as
        // in the timing report. Wall-clock medians still wobble under
        // host contention, so one full re-measurement is allowed before
        // the run counts as a failure.
        let measure = || -> Result<Vec<(usize, f64)>, String> {
            let mut medians = Vec::new();
            for &len in &[30usize, 60, 120] {
                let (ds, teacher) = bench_setup(96, len, len);
                let student = student_for(&ds, 6060);
                let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
                let cache_path = dir.path().join("scores.cache");
                build_cache(&teacher, &ds, &cache_path).map_err(|e| e.to_string())?;
                let cfg = BenchConfig {
                    methods: vec![Method::Structural, Method::Efficient],
                    warmup_epochs: 1,
                    epochs_measured: 2,
                    batch_size: 32,
                    k: 3,
                    threads: 16,
                    inner_parallel: true,
                    cache_path: None,
                    output_path: None,
                };
                let mut ratios = Vec::new();
                for _rep in 0..9 {
                    let s = bench::time_epoch(
                        Method::Structural,
                        Some(BenchTeacher::Model(&teacher)),
                        &student,
                        &ds,
                        &cfg,
                        2e-3,
                    )
                    .map_err(|e| e.to_string())?;
                    let e = bench::time_epoch(
                        Method::Efficient,
                        Some(BenchTeacher::CacheFile(&cache_path)),
                        &student,
                        &ds,
                        &cfg,
                        2e-3,
                    )
                    .map_err(|e| e.to_string())?;
                    ratios.push(s.total_s / e.total_s);
                }
                ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
                medians.push((len, ratios[4]));
            }
            Ok(medians)
        };
        let check = |medians: &[(usize, f64)]| -> Result<(), String> {
            for w in medians.windows(2) {
                let ((l0, r0), (l1, r1)) = (w[0], w[1]);
                ensure(r1 >= r0, || {
                    format!("median ratio fell from {r0:.2}x at len {l0} to {r1:.2}x at len {l1}")
                })?;
            }
            Ok(())
        };
        match check(&measure()?) {
            Ok(()) => Ok(()),
            Err(first) => {
                eprintln!("length-scaling re-measuring after noisy run: {first}");
                check(&measure()?)
            }
        }
    });
}

#[test]
fn criterion_7_pipeline_fidelity() {
    run("7 pipeline-fidelity", || {
        let (ds, teacher) = bench_setup(100, 8, 16);
        let mut student = student_for(&ds, 7070);
        let mut adam = AdamState::new(&student, 2e-3);
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cache_path = dir.path().join("scores.cache");
        let cache = build_cache(&teacher, &ds, &cache_path).map_err(|e| e.to_string())?;

        let encodes_before = counters::encoder_forwards();
        let dps_before = counters::dp_normalizations();
        let epochs = 2usize;
        for epoch in 0..epochs {
            train_epoch(
                Method::Efficient,
                TeacherSide::Cache(&cache),
                &mut student,
                &mut adam,
                &ds,
                1.0,
                &EpochOptions {
                    batch_size: 32,
                    k: 3,
                    shuffle_seed: 7,
                    epoch,
                    threads: 1,
                    inner_parallel: false,
                },
            )
            .map_err(|e| e.to_string())?;
        }
        let encodes = counters::encoder_forwards() - encodes_before;
        let dps = counters::dp_normalizations() - dps_before;
        let student_only = (epochs * ds.len()) as u64;
        ensure(encodes == student_only, || {
            format!(
                "{encodes} encoder passes, expected {student_only} (student only, zero teacher)"
            )
        })?;
        ensure(dps == 0, || {
            format!("{dps} normalization DPs during lambda=1 epochs, expected 0")
        })
    });
}

#[test]
fn criterion_8_span_scoring_golden() {
    run("8 span-scoring-golden", || {
        let s = |tags: &[&str]| -> Vec<String> { tags.iter().map(|t| t.to_string()).collect() };
        // (gold, pred, precision, recall, f1), hand-scored
        type SpanCase = (Vec<Vec<String>>, Vec<Vec<String>>, f64, f64, f64);
        let cases: Vec<SpanCase> = vec![
            // exact match
            (
                vec![s(&["B-PER", "I-PER", "O"])],
                vec![s(&["B-PER", "I-PER", "O"])],
                100.0,
                100.0,
                100.0,
            ),
            // boundary error: prediction truncates the span
            (
                vec![s(&["B-PER", "I-PER", "O"])],
                vec![s(&["B-PER", "O", "O"])],
                0.0,
                0.0,
                0.0,
            ),
            // type error
            (
                vec![s(&["B-PER", "O"])],
                vec![s(&["B-ORG", "O"])],
                0.0,
                0.0,
                0.0,
            ),
            // one of two entities correct
            (
                vec![s(&["B-PER", "I-PER", "O", "B-LOC"])],
                vec![s(&["B-PER", "I-PER", "O", "B-ORG"])],
                50.0,
                50.0,
                50.0,
            ),
            // empty prediction
            (
                vec![s(&["B-PER", "O"])],
                vec![s(&["O", "O"])],
                0.0,
                0.0,
                0.0,
            ),
            // bare I- opens a span on both sides
            (
                vec![s(&["I-PER", "I-PER"])],
                vec![s(&["B-PER", "I-PER"])],
                100.0,
                100.0,
                100.0,
            ),
            // adjacent B-B split vs one merged span
            (
                vec![s(&["B-PER", "B-PER"])],
                vec![s(&["B-PER", "I-PER"])],
                0.0,
                0.0,
                0.0,
            ),
            // two sentences, one entity missed
            (
                vec![s(&["B-ORG", "I-ORG"]), s(&["B-PER", "O"])],
                vec![s(&["B-ORG", "I-ORG"]), s(&["O", "O"])],
                100.0,
                50.0,
                66.67,
            ),
            // spurious prediction with empty gold
            (
                vec![s(&["O", "O", "O"])],
                vec![s(&["O", "B-LOC", "O"])],
                0.0,
                0.0,
                0.0,
            ),
            // I- after a different type opens a second gold span
            (
                vec![s(&["B-PER", "I-ORG"])],
                vec![s(&["B-PER", "O"])],
                100.0,
                50.0,
                66.67,
            ),
        ];
        ensure(cases.len() == 10, || "expected 10 cases".into())?;
        let two = |x: f64| (x * 100.0).round() / 100.0;
        for (k, (gold, pred, wp, wr, wf)) in cases.iter().enumerate() {
            let (p, r, f1) = prf1(gold, pred).map_err(|e| e.to_string())?;
            ensure(two(p) == *wp && two(r) == *wr && two(f1) == *wf, || {
                format!(
                    "case {k}: got {:.2}/{:.2}/{:.2}, want {wp:.2}/{wr:.2}/{wf:.2}",
                    p, r, f1
                )
            })?;
        }

        // IOB1 input is repaired to BIO2 at parse time
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let path = dir.path().join("iob1.conll");
        std::fs::write(&path, "a I-PER\nb I-PER\nc O\nd I-ORG\n\n").map_err(|e| e.to_string())?;
        let ds = data::parse_conll(&path, 0, 1).map_err(|e| e.to_string())?;
        let names = ds.tag_names(&ds.sentences[0]);
        ensure(names == ["B-PER", "I-PER", "O", "B-ORG"], || {
            format!("repair produced {names:?}")
        })?;
        let spans = extract_spans(&names).map_err(|e| e.to_string())?;
        ensure(spans.len() == 2, || {
            format!("expected 2 spans, got {spans:?}")
        })
    });
}
