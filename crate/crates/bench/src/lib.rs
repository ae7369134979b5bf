//! Benchmark-only crate; see `benches/pipeline.rs`.
//!
//! Prepared inputs live here so the bench harness and any future profiling
//! binaries share them.

use tpjoin_core::model::TpRelation;
use tpjoin_core::synth;
use tpjoin_core::theta::Theta;

/// A shifted pair of version-history-shaped relations plus the equality
/// condition the experiments use.
pub struct PreparedPair {
    pub left: TpRelation,
    pub right: TpRelation,
    pub theta: Theta,
}

pub fn prepared_pair(n: usize, seed: u64) -> PreparedPair {
    let left = synth::webkit_like(n, seed);
    let right = left
        .generate_shifted(seed.wrapping_add(1), "s")
        .expect("shiftable synthetic data");
    let theta = Theta::parse("l.path = r.path", left.schema(), right.schema())
        .expect("fixed condition");
    PreparedPair { left, right, theta }
}
