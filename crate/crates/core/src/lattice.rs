//! Per-sentence sub-structure score tables and their gradients.
//!
//! A `ScoreLattice` holds the scores of every sub-structure of a sentence:
//! `start[j]` scores tag `j` at position 1 (a learned start vector standing
//! in for the y0 boundary), and `pair(l, i, j)` scores the adjacent pair (tag `i` at
//! position `l+1`, tag `j` at position `l+2`), with the emission already
//! folded into the second tag. A sentence of length `L` over `N` tags has
//! exactly `N + (L-1)*N^2` sub-structures.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sub-structure scores for one sentence: start scores plus pair scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreLattice {
    len: usize,
    num_tags: usize,
    /// `start[j]` = score of tag `j` at the first position.
    pub start: Vec<f64>,
    /// Row-major `(L-1) x N x N`; entry `(l, i, j)` scores tag `i` at
    /// position `l+1` followed by tag `j` at position `l+2`.
    pub pair: Vec<f64>,
}

impl ScoreLattice {
    pub fn new(len: usize, num_tags: usize, start: Vec<f64>, pair: Vec<f64>) -> Result<Self> {
        if len == 0 || num_tags == 0 {
            return Err(Error::InvalidInput(format!(
                "lattice requires L >= 1 and N >= 1, got L={len}, N={num_tags}"
            )));
        }
        if start.len() != num_tags {
            return Err(Error::ShapeMismatch(format!(
                "start has {} entries, expected {num_tags}",
                start.len()
            )));
        }
        let expect = (len - 1) * num_tags * num_tags;
        if pair.len() != expect {
            return Err(Error::ShapeMismatch(format!(
                "pair has {} entries, expected {expect}",
                pair.len()
            )));
        }
        if !start.iter().chain(pair.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("lattice entries must be finite".into()));
        }
        Ok(Self {
            len,
            num_tags,
            start,
            pair,
        })
    }

    /// All-zero lattice (uniform distribution over tag sequences).
    pub fn zeros(len: usize, num_tags: usize) -> Self {
        Self::new(
            len,
            num_tags,
            vec![0.0; num_tags],
            vec![0.0; len.saturating_sub(1) * num_tags * num_tags],
        )
        .expect("zero lattice is valid")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // L >= 1 by construction
    }

    #[inline]
    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    /// Number of sub-structures: `N + (L-1)*N^2`.
    #[inline]
    pub fn num_substructures(&self) -> usize {
        self.num_tags + self.pair.len()
    }

    #[inline]
    pub fn pair_at(&self, pos: usize, from: usize, to: usize) -> f64 {
        self.pair[(pos * self.num_tags + from) * self.num_tags + to]
    }

    #[inline]
    pub fn pair_at_mut(&mut self, pos: usize, from: usize, to: usize) -> &mut f64 {
        &mut self.pair[(pos * self.num_tags + from) * self.num_tags + to]
    }

    /// Row `(pos, from, ·)` as a slice.
    #[inline]
    pub fn pair_row(&self, pos: usize, from: usize) -> &[f64] {
        let base = (pos * self.num_tags + from) * self.num_tags;
        &self.pair[base..base + self.num_tags]
    }

    pub fn same_shape(&self, other: &ScoreLattice) -> bool {
        self.len == other.len && self.num_tags == other.num_tags
    }

    pub fn check_same_shape(&self, other: &ScoreLattice) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch(format!(
                "lattice (L={}, N={}) vs (L={}, N={})",
                self.len, self.num_tags, other.len, other.num_tags
            )));
        }
        Ok(())
    }

    /// Quantize every entry through f32, matching the on-disk cache precision.
    pub fn quantize_f32(&self) -> ScoreLattice {
        ScoreLattice {
            len: self.len,
            num_tags: self.num_tags,
            start: self.start.iter().map(|&v| v as f32 as f64).collect(),
            pair: self.pair.iter().map(|&v| v as f32 as f64).collect(),
        }
    }
}

/// A tag sequence; `tags[l]` is the tag index at position `l+1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TagSequence(pub Vec<usize>);

impl TagSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, lattice: &ScoreLattice) -> Result<()> {
        if self.0.len() != lattice.len() {
            return Err(Error::InvalidInput(format!(
                "tag sequence length {} does not match lattice length {}",
                self.0.len(),
                lattice.len()
            )));
        }
        if let Some(&bad) = self.0.iter().find(|&&t| t >= lattice.num_tags()) {
            return Err(Error::InvalidInput(format!(
                "tag index {bad} out of range for {} tags",
                lattice.num_tags()
            )));
        }
        Ok(())
    }
}

/// Posterior marginals of the start tag and of every adjacent tag pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMarginalTable {
    len: usize,
    num_tags: usize,
    /// Marginal of the tag at position 1.
    pub start_marg: Vec<f64>,
    /// Row-major `(L-1) x N x N`; `p(y_{l+1}=i, y_{l+2}=j | x)`.
    pub pair_marg: Vec<f64>,
}

impl PairMarginalTable {
    pub fn new(len: usize, num_tags: usize, start_marg: Vec<f64>, pair_marg: Vec<f64>) -> Self {
        debug_assert_eq!(start_marg.len(), num_tags);
        debug_assert_eq!(pair_marg.len(), len.saturating_sub(1) * num_tags * num_tags);
        Self {
            len,
            num_tags,
            start_marg,
            pair_marg,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    #[inline]
    pub fn pair_at(&self, pos: usize, from: usize, to: usize) -> f64 {
        self.pair_marg[(pos * self.num_tags + from) * self.num_tags + to]
    }

    /// Check the normalization and chain-consistency invariants.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.num_tags;
        if self.start_marg.len() != n || self.pair_marg.len() != (self.len - 1) * n * n {
            return Err(Error::ShapeMismatch("marginal table shape".into()));
        }
        let in_range = |v: f64| (-tol..=1.0 + tol).contains(&v);
        if !self.start_marg.iter().all(|&v| in_range(v))
            || !self.pair_marg.iter().all(|&v| in_range(v))
        {
            return Err(Error::InvalidInput(
                "marginal entries must lie in [0, 1]".into(),
            ));
        }
        let s: f64 = self.start_marg.iter().sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "start marginals sum to {s}, expected 1"
            )));
        }
        for pos in 0..self.len - 1 {
            let base = pos * n * n;
            let s: f64 = self.pair_marg[base..base + n * n].iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "pair marginals at position {pos} sum to {s}, expected 1"
                )));
            }
        }
        // p(y_{l+1} = j) computed from slice l must match slice l+1.
        for pos in 0..self.len.saturating_sub(2) {
            for j in 0..n {
                let from_left: f64 = (0..n).map(|i| self.pair_at(pos, i, j)).sum();
                let from_right: f64 = (0..n).map(|k| self.pair_at(pos + 1, j, k)).sum();
                if (from_left - from_right).abs() > tol {
                    return Err(Error::InvalidInput(format!(
                        "inconsistent marginals for tag {j} at position {}",
                        pos + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Partial derivatives of a scalar loss w.r.t. every lattice entry.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGrad {
    len: usize,
    num_tags: usize,
    pub d_start: Vec<f64>,
    pub d_pair: Vec<f64>,
}

impl LatticeGrad {
    pub fn zeros(len: usize, num_tags: usize) -> Self {
        Self {
            len,
            num_tags,
            d_start: vec![0.0; num_tags],
            d_pair: vec![0.0; len.saturating_sub(1) * num_tags * num_tags],
        }
    }

    pub fn zeros_like(lattice: &ScoreLattice) -> Self {
        Self::zeros(lattice.len(), lattice.num_tags())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    #[inline]
    pub fn d_pair_at_mut(&mut self, pos: usize, from: usize, to: usize) -> &mut f64 {
        &mut self.d_pair[(pos * self.num_tags + from) * self.num_tags + to]
    }

    pub fn matches_shape(&self, lattice: &ScoreLattice) -> bool {
        self.len == lattice.len() && self.num_tags == lattice.num_tags()
    }

    /// `self += scale * other`, used for batch accumulation.
    pub fn axpy(&mut self, scale: f64, other: &LatticeGrad) {
        debug_assert_eq!(self.d_start.len(), other.d_start.len());
        debug_assert_eq!(self.d_pair.len(), other.d_pair.len());
        for (a, b) in self.d_start.iter_mut().zip(&other.d_start) {
            *a += scale * b;
        }
        for (a, b) in self.d_pair.iter_mut().zip(&other.d_pair) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.d_start.iter_mut().for_each(|v| *v *= s);
        self.d_pair.iter_mut().for_each(|v| *v *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substructure_count() {
        let lat = ScoreLattice::zeros(4, 3);
        assert_eq!(lat.num_substructures(), 3 + 3 * 9);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(ScoreLattice::new(0, 2, vec![], vec![]).is_err());
        assert!(ScoreLattice::new(1, 2, vec![f64::NAN, 0.0], vec![]).is_err());
        assert!(ScoreLattice::new(1, 2, vec![f64::INFINITY, 0.0], vec![]).is_err());
    }

    #[test]
    fn rejects_shape_mismatch() {
        assert!(ScoreLattice::new(2, 2, vec![0.0; 2], vec![0.0; 3]).is_err());
        let lat = ScoreLattice::zeros(2, 2);
        assert!(TagSequence(vec![0]).validate(&lat).is_err());
        assert!(TagSequence(vec![0, 2]).validate(&lat).is_err());
        assert!(TagSequence(vec![0, 1]).validate(&lat).is_ok());
    }

    #[test]
    fn single_position_lattice_has_no_pairs() {
        let lat = ScoreLattice::zeros(1, 3);
        assert!(lat.pair.is_empty());
        assert_eq!(lat.num_substructures(), 3);
    }
}
