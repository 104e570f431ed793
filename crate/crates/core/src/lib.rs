//! Weak and strong regularity decompositions of real matrices under the
//! spectral and cut norms, with graph-level consequences (compression,
//! Szemerédi-type partitions) and exact reference oracles for small inputs.

// `!(x > y)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cutalg;
pub mod engine;
pub mod error;
pub mod graphreg;
pub mod matcore;
pub mod oracle;
pub mod report;

pub use cutalg::{CutAtom, CutDecomposition, IndexSet};
pub use engine::{
    Bound, DecompositionTrace, GrowthFunction, HaltingCertificate, RegularityResult, SearchMode,
};
pub use error::{Error, Result};
pub use graphreg::{CompressedGraph, Graph, Partition};
pub use matcore::Matrix;

/// Splitmix64 finalizer; derives independent stream seeds from one user seed.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
