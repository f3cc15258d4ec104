//! Training objectives, each returning the loss value and its analytic
//! gradient with respect to the student's lattice entries.
//!
//! The gradients share one backbone: d(log Z)/d(entry) is the corresponding
//! posterior marginal, and d(score of a fixed sequence)/d(entry) is the 0/1
//! indicator of that sequence touching the entry. Every loss below is a
//! combination of those two pieces, except the sub-structure L2 loss, which
//! needs no DP at all.

use serde::{Deserialize, Serialize};

use crate::crf::{
    enumerate_all, log_partition, log_sum_exp, pair_marginals_with_logz, score_sequence,
};
use crate::lattice::{LatticeGrad, PairMarginalTable, ScoreLattice, TagSequence};
use crate::{Error, Result};

/// Teacher K-best hypotheses with their renormalized probabilities
/// (softmax over the K teacher path scores).
#[derive(Debug, Clone)]
pub struct KBestHypotheses {
    pub items: Vec<(TagSequence, f64)>,
    pub renormalized_prob: Vec<f64>,
}

impl KBestHypotheses {
    pub fn from_scored(items: Vec<(TagSequence, f64)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidInput("empty hypothesis set".into()));
        }
        for (a, (y, _)) in items.iter().enumerate() {
            if items[a + 1..].iter().any(|(z, _)| z == y) {
                return Err(Error::InvalidInput("duplicate hypothesis".into()));
            }
        }
        let logscores: Vec<f64> = items.iter().map(|(_, s)| *s).collect();
        let log_z = log_sum_exp(&logscores);
        let renormalized_prob = logscores.iter().map(|s| (s - log_z).exp()).collect();
        Ok(Self {
            items,
            renormalized_prob,
        })
    }
}

/// Mixing weight schedule between the KD loss and the gold NLL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    /// lambda = 1 - epoch/(total-1), the usual 1-to-0 decay.
    LinearDecay,
    /// lambda = 1 everywhere except the last epoch, where it is 0.
    PaperEfficient,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LambdaSchedule {
    pub mode: LambdaMode,
    pub total_epochs: usize,
}

impl LambdaSchedule {
    pub fn new(mode: LambdaMode, total_epochs: usize) -> Result<Self> {
        if total_epochs == 0 {
            return Err(Error::Config("total_epochs must be >= 1".into()));
        }
        Ok(Self { mode, total_epochs })
    }

    /// lambda for a zero-based epoch index; always in [0, 1].
    pub fn lambda(&self, epoch: usize) -> f64 {
        debug_assert!(epoch < self.total_epochs);
        match self.mode {
            LambdaMode::LinearDecay => {
                if self.total_epochs == 1 {
                    0.0
                } else {
                    1.0 - epoch as f64 / (self.total_epochs - 1) as f64
                }
            }
            LambdaMode::PaperEfficient => {
                if epoch + 1 == self.total_epochs {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

fn indicator_grad(lattice: &ScoreLattice, y: &TagSequence, weight: f64, grad: &mut LatticeGrad) {
    grad.d_start[y.0[0]] -= weight;
    for l in 0..y.0.len() - 1 {
        *grad.d_pair_at_mut(l, y.0[l], y.0[l + 1]) -= weight;
    }
    let _ = lattice;
}

fn marginal_grad(m: &PairMarginalTable) -> LatticeGrad {
    let mut g = LatticeGrad::zeros(m.len(), m.num_tags());
    g.d_start.copy_from_slice(&m.start_marg);
    g.d_pair.copy_from_slice(&m.pair_marg);
    g
}

/// CRF negative log-likelihood: `log Z - score(gold)`.
/// Gradient = model pair marginals minus the gold indicator.
pub fn nll_loss(student: &ScoreLattice, gold: &TagSequence) -> Result<(f64, LatticeGrad)> {
    gold.validate(student)?;
    let (m, log_z) = pair_marginals_with_logz(student);
    let loss = log_z - score_sequence(student, gold)?;
    let mut grad = marginal_grad(&m);
    indicator_grad(student, gold, 1.0, &mut grad);
    Ok((loss, grad))
}

/// Exact sequence-level KD cross-entropy by full enumeration. Oracle-scale
/// only; the tractable counterparts are [`structural_kd_loss`] and
/// [`kbest_kd_loss`].
pub fn exact_kd_loss(student: &ScoreLattice, teacher: &ScoreLattice) -> Result<f64> {
    student.check_same_shape(teacher)?;
    let teacher_dist = enumerate_all(teacher)?;
    let log_z_s = log_partition(student);
    let mut loss = 0.0;
    for (y, _, p_t) in &teacher_dist {
        if *p_t > 0.0 {
            loss += p_t * (log_z_s - score_sequence(student, y)?);
        }
    }
    Ok(loss)
}

/// Factorized structural KD: `-(sum_u p'(u|x) s(u)) + log Z(student)`.
/// Equals [`exact_kd_loss`] whenever `teacher_marginals` are the exact
/// pair marginals of the teacher lattice.
pub fn structural_kd_loss(
    student: &ScoreLattice,
    teacher_marginals: &PairMarginalTable,
) -> Result<(f64, LatticeGrad)> {
    if teacher_marginals.len() != student.len()
        || teacher_marginals.num_tags() != student.num_tags()
    {
        return Err(Error::ShapeMismatch(
            "teacher marginals do not match student lattice".into(),
        ));
    }
    teacher_marginals.validate(1e-6)?;
    let cross: f64 = teacher_marginals
        .start_marg
        .iter()
        .zip(&student.start)
        .map(|(p, s)| p * s)
        .sum::<f64>()
        + teacher_marginals
            .pair_marg
            .iter()
            .zip(&student.pair)
            .map(|(p, s)| p * s)
            .sum::<f64>();
    let (student_marg, log_z) = pair_marginals_with_logz(student);
    let loss = -cross + log_z;
    let mut grad = marginal_grad(&student_marg);
    for (g, p) in grad.d_start.iter_mut().zip(&teacher_marginals.start_marg) {
        *g -= p;
    }
    for (g, p) in grad.d_pair.iter_mut().zip(&teacher_marginals.pair_marg) {
        *g -= p;
    }
    Ok((loss, grad))
}

/// K-best approximated KD: cross-entropy of the student against the
/// renormalized teacher distribution over the hypothesis set.
pub fn kbest_kd_loss(student: &ScoreLattice, hyps: &KBestHypotheses) -> Result<(f64, LatticeGrad)> {
    if hyps.items.is_empty() {
        return Err(Error::InvalidInput("empty hypothesis set".into()));
    }
    for (y, _) in &hyps.items {
        y.validate(student)?;
    }
    let (student_marg, log_z_s) = pair_marginals_with_logz(student);
    let mut loss = 0.0;
    let mut grad = marginal_grad(&student_marg);
    for ((y, _), &q) in hyps.items.iter().zip(&hyps.renormalized_prob) {
        loss += q * (log_z_s - score_sequence(student, y)?);
        indicator_grad(student, y, q, &mut grad);
    }
    Ok((loss, grad))
}

/// Mean squared sub-structure score difference, averaged over all
/// `N + (L-1)*N^2` sub-structures. Position-wise independent; no DP.
/// Summed with Kahan compensation so any evaluation order agrees.
pub fn substructure_l2_loss(
    student: &ScoreLattice,
    teacher: &ScoreLattice,
) -> Result<(f64, LatticeGrad)> {
    student.check_same_shape(teacher)?;
    let count = student.num_substructures() as f64;
    let mut grad = LatticeGrad::zeros_like(student);

    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut add = |d: f64| {
        let term = d * d - comp;
        let t = sum + term;
        comp = (t - sum) - term;
        sum = t;
    };
    for (k, (s, t)) in student.start.iter().zip(&teacher.start).enumerate() {
        let d = s - t;
        add(d);
        grad.d_start[k] = 2.0 * d / count;
    }
    for (k, (s, t)) in student.pair.iter().zip(&teacher.pair).enumerate() {
        let d = s - t;
        add(d);
        grad.d_pair[k] = 2.0 * d / count;
    }
    Ok((sum / count, grad))
}

/// `substructure_l2_loss` with the pair table split into `chunks`
/// contiguous ranges computed on the ambient rayon pool. Each chunk
/// keeps its own compensated sum and chunk results are combined in a
/// fixed order, so the value is deterministic for a given chunk count.
pub fn substructure_l2_loss_par(
    student: &ScoreLattice,
    teacher: &ScoreLattice,
    chunks: usize,
) -> Result<(f64, LatticeGrad)> {
    use rayon::prelude::*;
    let chunks = chunks.max(1);
    student.check_same_shape(teacher)?;
    let count = student.num_substructures() as f64;
    let mut grad = LatticeGrad::zeros_like(student);

    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut add = |d: f64| {
        let term = d - comp;
        let t = sum + term;
        comp = (t - sum) - term;
        sum = t;
    };
    for (k, (s, t)) in student.start.iter().zip(&teacher.start).enumerate() {
        let d = s - t;
        add(d * d);
        grad.d_start[k] = 2.0 * d / count;
    }

    let pairs = student.pair.len();
    let chunk_len = pairs.div_ceil(chunks).max(1);
    let partials: Vec<f64> = grad
        .d_pair
        .par_chunks_mut(chunk_len)
        .enumerate()
        .map(|(ci, g_chunk)| {
            let lo = ci * chunk_len;
            let mut sum = 0.0;
            let mut comp = 0.0;
            for (k, g) in g_chunk.iter_mut().enumerate() {
                let d = student.pair[lo + k] - teacher.pair[lo + k];
                let term = d * d - comp;
                let t = sum + term;
                comp = (t - sum) - term;
                sum = t;
                *g = 2.0 * d / count;
            }
            sum
        })
        .collect();
    for p in partials {
        add(p);
    }
    Ok((sum / count, grad))
}

/// Convex combination `lambda * KD + (1 - lambda) * NLL` of losses and
/// gradients.
pub fn combined_objective(
    kd_loss: f64,
    kd_grad: &LatticeGrad,
    nll_loss: f64,
    nll_grad: &LatticeGrad,
    lambda: f64,
) -> Result<(f64, LatticeGrad)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!(
            "lambda must be in [0, 1], got {lambda}"
        )));
    }
    if kd_grad.len() != nll_grad.len() || kd_grad.num_tags() != nll_grad.num_tags() {
        return Err(Error::ShapeMismatch("gradient shapes differ".into()));
    }
    let mut grad = kd_grad.clone();
    grad.scale(lambda);
    grad.axpy(1.0 - lambda, nll_grad);
    Ok((lambda * kd_loss + (1.0 - lambda) * nll_loss, grad))
}
