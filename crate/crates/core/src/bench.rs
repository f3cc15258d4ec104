//! Per-epoch phase timing for each distillation method.
//!
//! Each timed run executes `warmup_epochs` untimed epochs and then averages
//! `epochs_measured` instrumented epochs. Phase boundaries sit inside the
//! training loop: teacher forward (including K-best decoding or
//! forward-backward marginals where the method needs them, or cache reads
//! when a prebuilt score cache is used), student forward, student backward.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TeacherScoreCache};
use crate::model::{AdamState, ModelParams};
use crate::pipeline::{train_epoch, EpochOptions, EpochStats, Method, TeacherSide};
use crate::{Error, Result};

/// Wall-clock phase durations for one method, averaged over measured epochs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub method: String,
    pub teacher_forward_s: f64,
    pub student_forward_s: f64,
    pub student_backward_s: f64,
    pub total_s: f64,
    /// Portion of total not covered by the three phases (batching, logging).
    pub untimed_overhead_s: f64,
    pub epochs_measured: usize,
    pub warmup_epochs: usize,
}

impl PhaseTiming {
    pub fn validate(&self) -> Result<()> {
        let parts = [
            self.teacher_forward_s,
            self.student_forward_s,
            self.student_backward_s,
            self.total_s,
            self.untimed_overhead_s,
        ];
        if parts.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidInput(
                "phase durations must be finite and non-negative".into(),
            ));
        }
        if parts[..3].iter().any(|&p| p > self.total_s) {
            return Err(Error::InvalidInput(
                "total must be at least each component".into(),
            ));
        }
        let covered = self.teacher_forward_s
            + self.student_forward_s
            + self.student_backward_s
            + self.untimed_overhead_s;
        if self.total_s > 1.05 * covered {
            return Err(Error::InvalidInput(format!(
                "total {} exceeds 1.05x accounted time {covered}",
                self.total_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    #[serde(default = "default_warmup")]
    pub warmup_epochs: usize,
    #[serde(default = "default_measured")]
    pub epochs_measured: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Opt-in: spend `threads` inside each sentence (encoder positions and
    /// sub-structure tables parallel, sentences sequential) rather than
    /// across sentences. Isolates the per-sentence parallelism advantage
    /// of the sub-structure objective; single-threaded stays the default
    /// for cross-method fairness.
    #[serde(default)]
    pub inner_parallel: bool,
    /// Score cache for the efficient method; required when listed.
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

fn default_warmup() -> usize {
    1
}
fn default_measured() -> usize {
    5
}
fn default_batch() -> usize {
    32
}
fn default_k() -> usize {
    3
}
fn default_threads() -> usize {
    1
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup_epochs < 1 {
            return Err(Error::Config("warmup must be >= 1".into()));
        }
        if self.epochs_measured < 1 {
            return Err(Error::Config("epochs_measured must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods listed".into()));
        }
        Ok(())
    }
}

/// Teacher source for one benchmarked method.
pub enum BenchTeacher<'a> {
    Model(&'a ModelParams),
    /// Re-read each epoch; teacher-forward then reflects cache reads only.
    CacheFile(&'a Path),
    /// Preloaded cache.
    Cache(&'a TeacherScoreCache),
}

/// Run warmup + measured epochs of one method on a fresh clone of the
/// student; returns per-phase averages. The KD weight is 1 throughout
/// (vanilla runs pure NLL).
pub fn time_epoch(
    method: Method,
    teacher: Option<BenchTeacher>,
    student: &ModelParams,
    dataset: &Dataset,
    config: &BenchConfig,
    student_lr: f64,
) -> Result<PhaseTiming> {
    config.validate()?;
    if method != Method::Vanilla && teacher.is_none() {
        return Err(Error::Config(format!(
            "method {} requires a teacher",
            method.name()
        )));
    }
    let mut student = student.clone();
    let mut adam = AdamState::new(&student, student_lr);
    let mut acc = EpochStats::default();
    let total_epochs = config.warmup_epochs + config.epochs_measured;
    for epoch in 0..total_epochs {
        let side = match (&teacher, method) {
            (_, Method::Vanilla) => TeacherSide::None,
            (Some(BenchTeacher::Model(m)), _) => TeacherSide::Model(m),
            (Some(BenchTeacher::CacheFile(p)), _) => TeacherSide::CacheFile(p),
            (Some(BenchTeacher::Cache(c)), _) => TeacherSide::Cache(c),
            (None, _) => unreachable!("checked above"),
        };
        let lambda = if method == Method::Vanilla { 0.0 } else { 1.0 };
        let stats = train_epoch(
            method,
            side,
            &mut student,
            &mut adam,
            dataset,
            lambda,
            &EpochOptions {
                batch_size: config.batch_size,
                k: config.k,
                shuffle_seed: 17,
                epoch,
                threads: config.threads,
                inner_parallel: config.inner_parallel,
            },
        )?;
        if epoch >= config.warmup_epochs {
            acc.teacher_forward_s += stats.teacher_forward_s;
            acc.student_forward_s += stats.student_forward_s;
            acc.student_backward_s += stats.student_backward_s;
            acc.total_s += stats.total_s;
        }
    }
    let m = config.epochs_measured as f64;
    let timing = PhaseTiming {
        method: method.name().to_string(),
        teacher_forward_s: acc.teacher_forward_s / m,
        student_forward_s: acc.student_forward_s / m,
        student_backward_s: acc.student_backward_s / m,
        total_s: acc.total_s / m,
        untimed_overhead_s: ((acc.total_s
            - acc.teacher_forward_s
            - acc.student_forward_s
            - acc.student_backward_s)
            / m)
            .max(0.0),
        epochs_measured: config.epochs_measured,
        warmup_epochs: config.warmup_epochs,
    };
    timing.validate()?;
    Ok(timing)
}

/// Human-readable table with the benchmark's column structure: method,
/// teacher forward, student forward, student backward, total. The vanilla
/// row shows "-" for teacher forward.
pub fn report(timings: &[PhaseTiming]) -> Result<String> {
    if timings.is_empty() {
        return Err(Error::InvalidInput("no timings to report".into()));
    }
    for t in timings {
        t.validate()?;
    }
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>12} {:>12} {:>13} {:>8}\n",
        "Method", "Tea. Forward", "Stu. Forward", "Stu. Backward", "Total"
    ));
    for t in timings {
        let tea = if t.method == "vanilla" {
            "-".to_string()
        } else {
            format!("{:.2}s", t.teacher_forward_s)
        };
        out.push_str(&format!(
            "{:<12} {:>12} {:>11.2}s {:>12.2}s {:>7.2}s\n",
            t.method, tea, t.student_forward_s, t.student_backward_s, t.total_s
        ));
    }
    out.push_str(
        "note: teacher forward for the structural method includes the \
         forward-backward marginal computation\n",
    );
    Ok(out)
}

/// Machine-readable key-value block, one line per phase.
pub fn report_kv(timings: &[PhaseTiming]) -> Result<String> {
    if timings.is_empty() {
        return Err(Error::InvalidInput("no timings to report".into()));
    }
    let mut out = String::new();
    for t in timings {
        t.validate()?;
        out.push_str(&format!(
            "method={} teacher_forward_s={:.4} student_forward_s={:.4} \
             student_backward_s={:.4} total_s={:.4} epochs_measured={} warmup_epochs={}\n",
            t.method,
            t.teacher_forward_s,
            t.student_forward_s,
            t.student_backward_s,
            t.total_s,
            t.epochs_measured,
            t.warmup_epochs
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_cache, hmm_generate, HmmSpec};
    use crate::model::{init_model, EncoderConfig};

    fn setup() -> (Dataset, ModelParams, ModelParams) {
        let spec = HmmSpec::random_peaked(3, 10, 29);
        let ds = hmm_generate(&spec, 12, 3, 8).unwrap();
        let vocab = ds.token_vocab.len();
        let teacher = init_model(&EncoderConfig {
            vocab_size: vocab,
            embed_dim: 8,
            window: 3,
            hidden_dims: vec![8],
            num_tags: 3,
            seed: 1,
        })
        .unwrap();
        let student = init_model(&EncoderConfig {
            vocab_size: vocab,
            embed_dim: 4,
            window: 3,
            hidden_dims: vec![4],
            num_tags: 3,
            seed: 2,
        })
        .unwrap();
        (ds, teacher, student)
    }

    fn config(methods: Vec<Method>) -> BenchConfig {
        BenchConfig {
            methods,
            warmup_epochs: 1,
            epochs_measured: 2,
            batch_size: 6,
            k: 3,
            threads: 1,
            inner_parallel: false,
            cache_path: None,
            output_path: None,
        }
    }

    #[test]
    fn vanilla_has_no_teacher_time() {
        let (ds, _, student) = setup();
        let t = time_epoch(
            Method::Vanilla,
            None,
            &student,
            &ds,
            &config(vec![Method::Vanilla]),
            0.01,
        )
        .unwrap();
        assert_eq!(t.teacher_forward_s, 0.0);
        assert!(t.total_s > 0.0);
    }

    #[test]
    fn kd_methods_report_teacher_time() {
        let (ds, teacher, student) = setup();
        for method in [Method::KBest, Method::Structural, Method::Efficient] {
            let t = time_epoch(
                method,
                Some(BenchTeacher::Model(&teacher)),
                &student,
                &ds,
                &config(vec![method]),
                0.01,
            )
            .unwrap();
            assert!(t.teacher_forward_s > 0.0, "{}", method.name());
            t.validate().unwrap();
        }
    }

    #[test]
    fn efficient_from_cache_file_runs() {
        let (ds, teacher, student) = setup();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.cache");
        build_cache(&teacher, &ds, &path).unwrap();
        let t = time_epoch(
            Method::Efficient,
            Some(BenchTeacher::CacheFile(&path)),
            &student,
            &ds,
            &config(vec![Method::Efficient]),
            0.01,
        )
        .unwrap();
        t.validate().unwrap();
    }

    #[test]
    fn missing_teacher_is_rejected() {
        let (ds, _, student) = setup();
        assert!(time_epoch(
            Method::Structural,
            None,
            &student,
            &ds,
            &config(vec![Method::Structural]),
            0.01
        )
        .is_err());
    }

    #[test]
    fn report_shape_and_vanilla_dash() {
        let t = PhaseTiming {
            method: "vanilla".into(),
            teacher_forward_s: 0.0,
            student_forward_s: 1.0,
            student_backward_s: 2.0,
            total_s: 3.1,
            untimed_overhead_s: 0.1,
            epochs_measured: 5,
            warmup_epochs: 1,
        };
        let table = report(std::slice::from_ref(&t)).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[0].contains("Tea. Forward"));
        assert!(lines[0].contains("Stu. Forward"));
        assert!(lines[0].contains("Stu. Backward"));
        assert!(lines[0].contains("Total"));
        assert!(lines[1].contains('-'));
        // row order preserved
        let t2 = PhaseTiming {
            method: "efficient".into(),
            teacher_forward_s: 0.5,
            ..t.clone()
        };
        let table = report(&[t.clone(), t2]).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[1].starts_with("vanilla"));
        assert!(lines[2].starts_with("efficient"));
    }

    #[test]
    fn negative_duration_rejected() {
        let t = PhaseTiming {
            method: "vanilla".into(),
            teacher_forward_s: -1.0,
            student_forward_s: 1.0,
            student_backward_s: 1.0,
            total_s: 2.0,
            untimed_overhead_s: 0.0,
            epochs_measured: 5,
            warmup_epochs: 1,
        };
        assert!(t.validate().is_err());
        assert!(report(&[t]).is_err());
        assert!(report(&[]).is_err());
    }

    #[test]
    fn epoch_counting_contract() {
        // warmup=1, measured=2 -> adam sees exactly 3 epochs of steps
        let (ds, _, student) = setup();
        let cfg = config(vec![Method::Vanilla]);
        let t = time_epoch(Method::Vanilla, None, &student, &ds, &cfg, 0.01).unwrap();
        assert_eq!(t.warmup_epochs, 1);
        assert_eq!(t.epochs_measured, 2);
    }
}
