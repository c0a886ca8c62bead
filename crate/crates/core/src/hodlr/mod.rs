//! Hierarchically off-diagonal low-rank (HODLR) matrices.
//!
//! A [`ClusterTree`] bisects an index range; a [`HodlrMatrix`] built on it
//! stores dense blocks at the leaves and one [`LowRankFactor`] for every
//! off-diagonal block at every level. Arithmetic lives in [`crate::algebra`].

mod lowrank;
mod matrix;
mod tree;

pub use lowrank::{compress_block, truncate_factor, LowRankFactor, Tolerance};
pub use matrix::{Branch, HodlrMatrix, Payload};
pub use tree::{ClusterTree, DEFAULT_LEAF_SIZE};
