//! Linear-chain CRF sequence labeling with sub-structure knowledge distillation.
//!
//! The crate is organized around [`lattice::ScoreLattice`], the per-sentence
//! table of sub-structure scores (start scores plus adjacent-tag pair scores).
//! Everything else consumes it:
//!
//! - [`crf`] — exact inference: sequence scoring, log-partition, pairwise
//!   marginals, Viterbi, K-best, plus a brute-force enumeration oracle.
//! - [`losses`] — training objectives (CRF NLL, exact KD, K-best KD,
//!   factorized structural KD, sub-structure L2 KD) with analytic gradients
//!   w.r.t. lattice entries.
//! - [`model`] — desk-scale teacher/student taggers (windowed embedding +
//!   tanh MLP encoder, transition/start parameters), manual backprop, Adam.
//! - [`data`] — CoNLL ingestion, synthetic HMM corpora, batching, and the
//!   teacher score cache.
//! - [`eval`] — conlleval-style entity P/R/F1 and token accuracy.
//! - [`bench`] — per-epoch phase timing (teacher forward / student forward /
//!   student backward) for each distillation method.
//! - [`pipeline`] — the train-teacher / cache-scores / distill / suite
//!   orchestration behind the CLI.

// Dynamic programs and backprop here walk several same-length tables with a
// shared position index; the indexed form mirrors the recurrences.
#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod counters;
pub mod crf;
pub mod data;
pub mod eval;
pub mod lattice;
pub mod losses;
pub mod model;
pub mod pipeline;

pub use lattice::{LatticeGrad, PairMarginalTable, ScoreLattice, TagSequence};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("enumeration oracle too large: N^L = {states}^{len} exceeds {limit}")]
    OracleTooLarge {
        states: usize,
        len: usize,
        limit: usize,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("stale cache: {0}")]
    StaleCache(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
