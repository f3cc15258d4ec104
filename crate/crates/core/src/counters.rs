//! Process-wide instrumentation counters.
//!
//! The pipeline asserts its efficiency contracts against these: an
//! efficient-KD epoch with a prebuilt cache must perform zero teacher
//! encoder passes, and a lambda=1 epoch must perform zero student
//! normalization DPs. Callers snapshot before/after a region and compare.

use std::sync::atomic::{AtomicU64, Ordering};

/// Incremented once per encoder forward pass (any model).
pub static ENCODER_FORWARDS: AtomicU64 = AtomicU64::new(0);

/// Incremented once per normalization DP (log-partition or forward-backward).
pub static DP_NORMALIZATIONS: AtomicU64 = AtomicU64::new(0);

pub fn encoder_forwards() -> u64 {
    ENCODER_FORWARDS.load(Ordering::Relaxed)
}

pub fn dp_normalizations() -> u64 {
    DP_NORMALIZATIONS.load(Ordering::Relaxed)
}
