use std::sync::Arc;

use crate::error::{AcrError, Result};

/// Default threshold below which a cluster is not split further.
pub const DEFAULT_LEAF_SIZE: usize = 32;

/// Recursive bisection of an index range `[lo, hi)`.
///
/// A node is a leaf iff its length is at most `leaf_size`; otherwise it has
/// exactly two children split at `⌊(lo + hi) / 2⌋`. Every HODLR block built on
/// a tree uses the diagonal clusters as its recursive 2×2 partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterTree {
    lo: usize,
    hi: usize,
    leaf_size: usize,
    children: Option<[Arc<ClusterTree>; 2]>,
}

impl ClusterTree {
    /// Builds the cluster tree for `[0, n)`.
    pub fn new(n: usize, leaf_size: usize) -> Result<Arc<Self>> {
        if n == 0 {
            return Err(AcrError::invalid(
                "cluster tree dimension must be at least 1",
            ));
        }
        if leaf_size == 0 {
            return Err(AcrError::invalid("leaf_size must be at least 1"));
        }
        Ok(Arc::new(Self::build(0, n, leaf_size)))
    }

    fn build(lo: usize, hi: usize, leaf_size: usize) -> Self {
        let children = if hi - lo <= leaf_size {
            None
        } else {
            let mid = (lo + hi) / 2;
            Some([
                Arc::new(Self::build(lo, mid, leaf_size)),
                Arc::new(Self::build(mid, hi, leaf_size)),
            ])
        };
        ClusterTree {
            lo,
            hi,
            leaf_size,
            children,
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.lo..self.hi
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn children(&self) -> Option<(&Arc<ClusterTree>, &Arc<ClusterTree>)> {
        self.children.as_ref().map(|[a, b]| (a, b))
    }

    /// Length of the longest root-to-leaf path (0 for a single leaf).
    pub fn depth(&self) -> usize {
        match self.children() {
            None => 0,
            Some((a, b)) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Leaf ranges in index order.
    pub fn leaves(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<std::ops::Range<usize>>) {
        match self.children() {
            None => out.push(self.range()),
            Some((a, b)) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// Number of internal nodes, i.e. of off-diagonal block pairs.
    pub fn branch_count(&self) -> usize {
        match self.children() {
            None => 0,
            Some((a, b)) => 1 + a.branch_count() + b.branch_count(),
        }
    }

    /// Same partition: pointer equality first, structural equality otherwise.
    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || **self == **other
    }
}
