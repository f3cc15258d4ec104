//! Exact inference on score lattices.
//!
//! All dynamic programming runs in log space with max-shifted log-sum-exp;
//! no probability-space forward pass exists. Tie-breaking is deterministic
//! everywhere: lowest tag index at each Viterbi backtrack step, lexicographic
//! over sequences for K-best.

use crate::counters;
use crate::lattice::{PairMarginalTable, ScoreLattice, TagSequence};
use crate::{Error, Result};

/// Guard on the enumeration oracle: N^L may not exceed this.
pub const ENUMERATION_LIMIT: usize = 100_000;

/// log(sum(exp(xs))) with a max shift. Returns -inf for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Unnormalized log-score of one tag sequence: `start[y1] + sum pair(l, y_l, y_{l+1})`.
pub fn score_sequence(lattice: &ScoreLattice, y: &TagSequence) -> Result<f64> {
    y.validate(lattice)?;
    let mut score = lattice.start[y.0[0]];
    for l in 0..y.0.len() - 1 {
        score += lattice.pair_at(l, y.0[l], y.0[l + 1]);
    }
    Ok(score)
}

fn forward_table(lattice: &ScoreLattice) -> Vec<Vec<f64>> {
    let n = lattice.num_tags();
    let mut alpha = Vec::with_capacity(lattice.len());
    alpha.push(lattice.start.clone());
    let mut scratch = vec![0.0; n];
    for l in 0..lattice.len() - 1 {
        let prev = alpha.last().unwrap().clone();
        let mut next = vec![0.0; n];
        for (j, slot) in next.iter_mut().enumerate() {
            for i in 0..n {
                scratch[i] = prev[i] + lattice.pair_at(l, i, j);
            }
            *slot = log_sum_exp(&scratch);
        }
        alpha.push(next);
    }
    alpha
}

fn backward_table(lattice: &ScoreLattice) -> Vec<Vec<f64>> {
    let n = lattice.num_tags();
    let mut beta = vec![vec![0.0; n]; lattice.len()];
    let mut scratch = vec![0.0; n];
    for l in (0..lattice.len() - 1).rev() {
        for i in 0..n {
            for j in 0..n {
                scratch[j] = lattice.pair_at(l, i, j) + beta[l + 1][j];
            }
            beta[l][i] = log_sum_exp(&scratch);
        }
    }
    beta
}

/// log Z(x): log-sum-exp over all N^L sequence scores, by the forward recursion.
pub fn log_partition(lattice: &ScoreLattice) -> f64 {
    counters::DP_NORMALIZATIONS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let alpha = forward_table(lattice);
    log_sum_exp(alpha.last().unwrap())
}

/// Posterior marginals of the start tag and of every adjacent tag pair,
/// by forward-backward.
pub fn pair_marginals(lattice: &ScoreLattice) -> PairMarginalTable {
    pair_marginals_with_logz(lattice).0
}

/// Forward-backward returning the marginal table together with log Z(x),
/// so losses needing both run a single DP.
pub fn pair_marginals_with_logz(lattice: &ScoreLattice) -> (PairMarginalTable, f64) {
    counters::DP_NORMALIZATIONS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let n = lattice.num_tags();
    let alpha = forward_table(lattice);
    let beta = backward_table(lattice);
    let log_z = log_sum_exp(alpha.last().unwrap());

    let start_marg: Vec<f64> = (0..n)
        .map(|j| (alpha[0][j] + beta[0][j] - log_z).exp())
        .collect();
    let mut pair_marg = vec![0.0; (lattice.len() - 1) * n * n];
    for l in 0..lattice.len() - 1 {
        for i in 0..n {
            for j in 0..n {
                pair_marg[(l * n + i) * n + j] =
                    (alpha[l][i] + lattice.pair_at(l, i, j) + beta[l + 1][j] - log_z).exp();
            }
        }
    }
    (
        PairMarginalTable::new(lattice.len(), n, start_marg, pair_marg),
        log_z,
    )
}

/// Argmax tag sequence and its score. Ties break toward the lowest tag index
/// at every backtrack step.
pub fn viterbi(lattice: &ScoreLattice) -> (TagSequence, f64) {
    let n = lattice.num_tags();
    let len = lattice.len();
    let mut delta = lattice.start.clone();
    // back[l][j] = best predecessor of tag j at position l+1
    let mut back = vec![vec![0usize; n]; len.saturating_sub(1)];
    for l in 0..len - 1 {
        let mut next = vec![f64::NEG_INFINITY; n];
        for j in 0..n {
            for i in 0..n {
                let cand = delta[i] + lattice.pair_at(l, i, j);
                // strict > keeps the lowest i on ties
                if cand > next[j] {
                    next[j] = cand;
                    back[l][j] = i;
                }
            }
        }
        delta = next;
    }
    let mut best_tag = 0;
    for j in 1..n {
        if delta[j] > delta[best_tag] {
            best_tag = j;
        }
    }
    let best_score = delta[best_tag];
    let mut tags = vec![0usize; len];
    tags[len - 1] = best_tag;
    for l in (0..len - 1).rev() {
        tags[l] = back[l][tags[l + 1]];
    }
    (TagSequence(tags), best_score)
}

#[derive(Clone)]
struct Hypothesis {
    score: f64,
    tags: Vec<usize>,
}

fn hyp_order(a: &Hypothesis, b: &Hypothesis) -> std::cmp::Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap()
        .then_with(|| a.tags.cmp(&b.tags))
}

/// The `min(K, N^L)` highest-scoring sequences, non-increasing in score,
/// ties broken lexicographically by tag indices.
///
/// Per-state beam K-best: every state at position l keeps its top-K partial
/// paths under (score desc, path lex asc). Pruning is sound because a common
/// suffix preserves both the score ordering and the lexicographic ordering
/// of prefixes.
pub fn kbest(lattice: &ScoreLattice, k: usize) -> Vec<(TagSequence, f64)> {
    assert!(k >= 1, "K must be >= 1");
    let n = lattice.num_tags();
    let len = lattice.len();

    let mut beams: Vec<Vec<Hypothesis>> = (0..n)
        .map(|j| {
            vec![Hypothesis {
                score: lattice.start[j],
                tags: vec![j],
            }]
        })
        .collect();

    for l in 0..len - 1 {
        let mut next: Vec<Vec<Hypothesis>> = vec![Vec::new(); n];
        for (j, beam) in next.iter_mut().enumerate() {
            for i in 0..n {
                let step = lattice.pair_at(l, i, j);
                for h in &beams[i] {
                    let mut tags = h.tags.clone();
                    tags.push(j);
                    beam.push(Hypothesis {
                        score: h.score + step,
                        tags,
                    });
                }
            }
            beam.sort_by(hyp_order);
            beam.truncate(k);
        }
        beams = next;
    }

    let mut all: Vec<Hypothesis> = beams.into_iter().flatten().collect();
    all.sort_by(hyp_order);
    all.truncate(k);
    all.into_iter()
        .map(|h| (TagSequence(h.tags), h.score))
        .collect()
}

/// Every sequence with its exact score and normalized probability.
/// Testing oracle; guarded by [`ENUMERATION_LIMIT`].
pub fn enumerate_all(lattice: &ScoreLattice) -> Result<Vec<(TagSequence, f64, f64)>> {
    let n = lattice.num_tags();
    let len = lattice.len();
    let mut total: usize = 1;
    for _ in 0..len {
        total = total
            .checked_mul(n)
            .filter(|&t| t <= ENUMERATION_LIMIT)
            .ok_or(Error::OracleTooLarge {
                states: n,
                len,
                limit: ENUMERATION_LIMIT,
            })?;
    }

    let mut out = Vec::with_capacity(total);
    let mut tags = vec![0usize; len];
    loop {
        let seq = TagSequence(tags.clone());
        let score = score_sequence(lattice, &seq)?;
        out.push((seq, score, 0.0));
        // odometer increment, lexicographic order
        let mut pos = len;
        loop {
            if pos == 0 {
                let scores: Vec<f64> = out.iter().map(|(_, s, _)| *s).collect();
                let log_z = log_sum_exp(&scores);
                for (_, s, p) in &mut out {
                    *p = (*s - log_z).exp();
                }
                return Ok(out);
            }
            pos -= 1;
            tags[pos] += 1;
            if tags[pos] < n {
                break;
            }
            tags[pos] = 0;
        }
    }
}

/// Seeded random lattices for tests and benchmarks.
pub mod test_support {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn random_lattice(
        seed: u64,
        len: usize,
        num_tags: usize,
        lo: f64,
        hi: f64,
    ) -> ScoreLattice {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = (0..num_tags).map(|_| rng.gen_range(lo..hi)).collect();
        let pair = (0..(len - 1) * num_tags * num_tags)
            .map(|_| rng.gen_range(lo..hi))
            .collect();
        ScoreLattice::new(len, num_tags, start, pair).unwrap()
    }
}
