use nalgebra::{DMatrix, DVector};

use crate::algebra::{self, Sign};
use crate::dense::checked_inverse;
use crate::error::{AcrError, Result};
use crate::hodlr::{HodlrMatrix, Tolerance};

/// The block operations cyclic reduction needs. Implemented once for
/// hierarchical blocks (truncated arithmetic) and once for plain dense blocks
/// (exact arithmetic), so both solvers share one control flow.
pub trait BlockArithmetic: Sync {
    type Block: Clone + Send + Sync;

    fn invert(&self, block: &Self::Block) -> Result<Self::Block>;

    fn multiply(&self, a: &Self::Block, b: &Self::Block) -> Self::Block;

    /// `base ± ab·c`, with a missing `base` meaning zero.
    fn add_product(
        &self,
        base: Option<&Self::Block>,
        ab: &Self::Block,
        c: &Self::Block,
        sign: Sign,
    ) -> Self::Block;

    fn apply(&self, block: &Self::Block, x: &DVector<f64>) -> DVector<f64>;

    fn to_dense(&self, block: &Self::Block) -> DMatrix<f64>;

    fn storage_bytes(&self, block: &Self::Block) -> usize;
}

const SAME_TREE: &str = "all blocks of a level share one cluster tree";

/// HODLR blocks under one global truncation tolerance.
#[derive(Debug, Clone, Copy)]
pub struct HodlrArithmetic {
    pub tol: Tolerance,
}

impl BlockArithmetic for HodlrArithmetic {
    type Block = HodlrMatrix;

    fn invert(&self, block: &HodlrMatrix) -> Result<HodlrMatrix> {
        algebra::invert(block, &self.tol)
    }

    fn multiply(&self, a: &HodlrMatrix, b: &HodlrMatrix) -> HodlrMatrix {
        algebra::multiply(a, b, &self.tol).expect(SAME_TREE)
    }

    fn add_product(
        &self,
        base: Option<&HodlrMatrix>,
        ab: &HodlrMatrix,
        c: &HodlrMatrix,
        sign: Sign,
    ) -> HodlrMatrix {
        let p = algebra::scale(&self.multiply(ab, c), sign.value());
        match base {
            Some(s) => algebra::add(s, &p, &self.tol).expect(SAME_TREE),
            None => p,
        }
    }

    fn apply(&self, block: &HodlrMatrix, x: &DVector<f64>) -> DVector<f64> {
        algebra::matvec(block, x).expect("segment length equals block dimension")
    }

    fn to_dense(&self, block: &HodlrMatrix) -> DMatrix<f64> {
        block.to_dense()
    }

    fn storage_bytes(&self, block: &HodlrMatrix) -> usize {
        block.storage_bytes()
    }
}

/// Dense blocks, no truncation: plain block cyclic reduction.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseArithmetic;

impl BlockArithmetic for DenseArithmetic {
    type Block = DMatrix<f64>;

    fn invert(&self, block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        checked_inverse(block).ok_or(AcrError::SingularMatrix { dim: block.nrows() })
    }

    fn multiply(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a * b
    }

    fn add_product(
        &self,
        base: Option<&DMatrix<f64>>,
        ab: &DMatrix<f64>,
        c: &DMatrix<f64>,
        sign: Sign,
    ) -> DMatrix<f64> {
        let p = ab * c;
        match base {
            Some(s) => s + p * sign.value(),
            None => p * sign.value(),
        }
    }

    fn apply(&self, block: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
        block * x
    }

    fn to_dense(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        block.clone()
    }

    fn storage_bytes(&self, block: &DMatrix<f64>) -> usize {
        block.len() * std::mem::size_of::<f64>()
    }
}
