use std::sync::Arc;

use nalgebra::{DMatrix, DMatrixView};

use super::lowrank::{compress_block, LowRankFactor, Tolerance};
use super::tree::ClusterTree;
use crate::error::{AcrError, Result};

/// Square matrix in HODLR form over a [`ClusterTree`].
///
/// Leaves of the tree hold dense diagonal blocks. Every internal node holds the
/// two diagonal children recursively and the two off-diagonal blocks as
/// [`LowRankFactor`]s (weak admissibility: every off-diagonal block at every
/// level is low-rank).
#[derive(Debug, Clone)]
pub struct HodlrMatrix {
    tree: Arc<ClusterTree>,
    payload: Payload,
}

#[derive(Debug, Clone)]
pub enum Payload {
    DenseLeaf(DMatrix<f64>),
    Branch(Box<Branch>),
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub diag11: HodlrMatrix,
    pub diag22: HodlrMatrix,
    /// Upper-right block, `|range₁| × |range₂|`.
    pub off12: LowRankFactor,
    /// Lower-left block, `|range₂| × |range₁|`.
    pub off21: LowRankFactor,
}

impl HodlrMatrix {
    pub(crate) fn leaf(tree: Arc<ClusterTree>, block: DMatrix<f64>) -> Self {
        debug_assert!(tree.is_leaf());
        debug_assert_eq!(block.shape(), (tree.len(), tree.len()));
        HodlrMatrix {
            tree,
            payload: Payload::DenseLeaf(block),
        }
    }

    pub(crate) fn branch(
        tree: Arc<ClusterTree>,
        diag11: HodlrMatrix,
        diag22: HodlrMatrix,
        off12: LowRankFactor,
        off21: LowRankFactor,
    ) -> Self {
        debug_assert!(!tree.is_leaf());
        debug_assert_eq!(off12.nrows(), diag11.dim());
        debug_assert_eq!(off12.ncols(), diag22.dim());
        debug_assert_eq!(off21.nrows(), diag22.dim());
        debug_assert_eq!(off21.ncols(), diag11.dim());
        HodlrMatrix {
            tree,
            payload: Payload::Branch(Box::new(Branch {
                diag11,
                diag22,
                off12,
                off21,
            })),
        }
    }

    pub fn tree(&self) -> &Arc<ClusterTree> {
        &self.tree
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn dim(&self) -> usize {
        self.tree.len()
    }

    /// Compresses a dense square matrix: dense blocks at the leaves, truncated
    /// SVDs of every off-diagonal block.
    pub fn compress_dense(
        m: &DMatrix<f64>,
        tree: &Arc<ClusterTree>,
        tol: &Tolerance,
    ) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(AcrError::invalid(format!(
                "compress_dense needs a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() != tree.len() {
            return Err(AcrError::DimensionMismatch {
                context: "compress_dense",
                expected: tree.len(),
                actual: m.nrows(),
            });
        }
        Ok(Self::compress_view(m.as_view(), tree, tol))
    }

    fn compress_view(m: DMatrixView<'_, f64>, tree: &Arc<ClusterTree>, tol: &Tolerance) -> Self {
        match tree.children() {
            None => Self::leaf(tree.clone(), m.into_owned()),
            Some((t1, t2)) => {
                let (n1, n2) = (t1.len(), t2.len());
                let (d11, d22) = rayon::join(
                    || Self::compress_view(m.view((0, 0), (n1, n1)), t1, tol),
                    || Self::compress_view(m.view((n1, n1), (n2, n2)), t2, tol),
                );
                let off12 = compress_block(m.view((0, n1), (n1, n2)), tol);
                let off21 = compress_block(m.view((n1, 0), (n2, n1)), tol);
                Self::branch(tree.clone(), d11, d22, off12, off21)
            }
        }
    }

    /// Exact HODLR form of a tridiagonal matrix. Every off-diagonal block has
    /// a single nonzero corner entry, so its factor has rank 1 (rank 0 when
    /// that coupling entry is zero).
    pub fn from_tridiagonal(
        sub: &[f64],
        diag: &[f64],
        sup: &[f64],
        tree: &Arc<ClusterTree>,
    ) -> Result<Self> {
        let n = tree.len();
        if diag.len() != n {
            return Err(AcrError::DimensionMismatch {
                context: "from_tridiagonal diagonal",
                expected: n,
                actual: diag.len(),
            });
        }
        for (side, v) in [
            ("from_tridiagonal sub-diagonal", sub),
            ("from_tridiagonal super-diagonal", sup),
        ] {
            if v.len() != n - 1 {
                return Err(AcrError::DimensionMismatch {
                    context: side,
                    expected: n - 1,
                    actual: v.len(),
                });
            }
        }
        Ok(Self::tridiag_node(sub, diag, sup, tree))
    }

    fn tridiag_node(sub: &[f64], diag: &[f64], sup: &[f64], tree: &Arc<ClusterTree>) -> Self {
        let (lo, hi) = (tree.lo(), tree.hi());
        match tree.children() {
            None => {
                let len = hi - lo;
                let mut block = DMatrix::zeros(len, len);
                for i in 0..len {
                    block[(i, i)] = diag[lo + i];
                    if i + 1 < len {
                        block[(i + 1, i)] = sub[lo + i];
                        block[(i, i + 1)] = sup[lo + i];
                    }
                }
                Self::leaf(tree.clone(), block)
            }
            Some((t1, t2)) => {
                let (n1, n2) = (t1.len(), t2.len());
                // The only coupling across the split is between indices mid-1 and mid.
                let corner = t1.hi() - 1;
                let off12 = single_entry(n1, n2, n1 - 1, 0, sup[corner]);
                let off21 = single_entry(n2, n1, 0, n1 - 1, sub[corner]);
                Self::branch(
                    tree.clone(),
                    Self::tridiag_node(sub, diag, sup, t1),
                    Self::tridiag_node(sub, diag, sup, t2),
                    off12,
                    off21,
                )
            }
        }
    }

    /// Exact HODLR form of `diag(d)`; all off-diagonal ranks are 0.
    pub fn from_diagonal(d: &[f64], tree: &Arc<ClusterTree>) -> Result<Self> {
        if d.len() != tree.len() {
            return Err(AcrError::DimensionMismatch {
                context: "from_diagonal",
                expected: tree.len(),
                actual: d.len(),
            });
        }
        let zeros = vec![0.0; d.len().saturating_sub(1)];
        Ok(Self::tridiag_node(&zeros, d, &zeros, tree))
    }

    pub fn identity(tree: &Arc<ClusterTree>) -> Self {
        Self::from_diagonal(&vec![1.0; tree.len()], tree).expect("length matches tree")
    }

    pub fn zeros(tree: &Arc<ClusterTree>) -> Self {
        Self::from_diagonal(&vec![0.0; tree.len()], tree).expect("length matches tree")
    }

    /// Assembles the represented matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        self.write_dense(&mut out, 0);
        out
    }

    fn write_dense(&self, out: &mut DMatrix<f64>, offset: usize) {
        match &self.payload {
            Payload::DenseLeaf(block) => {
                let len = block.nrows();
                out.view_mut((offset, offset), (len, len)).copy_from(block);
            }
            Payload::Branch(b) => {
                let (n1, n2) = (b.diag11.dim(), b.diag22.dim());
                b.diag11.write_dense(out, offset);
                b.diag22.write_dense(out, offset + n1);
                if b.off12.rank() > 0 {
                    out.view_mut((offset, offset + n1), (n1, n2))
                        .copy_from(&b.off12.to_dense());
                }
                if b.off21.rank() > 0 {
                    out.view_mut((offset + n1, offset), (n2, n1))
                        .copy_from(&b.off21.to_dense());
                }
            }
        }
    }

    /// Bytes of stored scalars over all dense leaves and low-rank factors.
    pub fn storage_bytes(&self) -> usize {
        self.stored_scalars() * std::mem::size_of::<f64>()
    }

    fn stored_scalars(&self) -> usize {
        match &self.payload {
            Payload::DenseLeaf(block) => block.len(),
            Payload::Branch(b) => {
                b.diag11.stored_scalars()
                    + b.diag22.stored_scalars()
                    + b.off12.stored_scalars()
                    + b.off21.stored_scalars()
            }
        }
    }

    /// Largest off-diagonal rank anywhere in the hierarchy (0 for a leaf).
    pub fn max_rank(&self) -> usize {
        match &self.payload {
            Payload::DenseLeaf(_) => 0,
            Payload::Branch(b) => b
                .off12
                .rank()
                .max(b.off21.rank())
                .max(b.diag11.max_rank())
                .max(b.diag22.max_rank()),
        }
    }

    /// Visits every off-diagonal factor with its depth (root branch = 0).
    pub fn for_each_factor(&self, mut f: impl FnMut(usize, &LowRankFactor)) {
        self.visit_factors(0, &mut f);
    }

    fn visit_factors(&self, depth: usize, f: &mut impl FnMut(usize, &LowRankFactor)) {
        if let Payload::Branch(b) = &self.payload {
            f(depth, &b.off12);
            f(depth, &b.off21);
            b.diag11.visit_factors(depth + 1, f);
            b.diag22.visit_factors(depth + 1, f);
        }
    }

    pub fn is_finite(&self) -> bool {
        match &self.payload {
            Payload::DenseLeaf(block) => block.iter().all(|x| x.is_finite()),
            Payload::Branch(b) => {
                b.off12.is_finite()
                    && b.off21.is_finite()
                    && b.diag11.is_finite()
                    && b.diag22.is_finite()
            }
        }
    }

    pub(crate) fn check_same_tree(&self, other: &HodlrMatrix) -> Result<()> {
        if self.tree.same_as(&other.tree) {
            Ok(())
        } else {
            Err(AcrError::TreeMismatch)
        }
    }
}

fn single_entry(m: usize, k: usize, i: usize, j: usize, value: f64) -> LowRankFactor {
    if value == 0.0 {
        return LowRankFactor::zeros(m, k);
    }
    let mut u = DMatrix::zeros(m, 1);
    let mut v = DMatrix::zeros(k, 1);
    u[(i, 0)] = value;
    v[(j, 0)] = 1.0;
    LowRankFactor::from_parts(u, v)
}
