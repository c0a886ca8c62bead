use nalgebra::DVector;

use super::sparse::CooMatrix;
use crate::error::{AcrError, Result};

/// Tridiagonal block stored by its three diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalBlock {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TridiagonalBlock {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            y[i] += acc;
        }
    }
}

/// `tridiag(E_i, D_i, F_i)`: row-block `i` reads
/// `E_i·u_{i−1} + D_i·u_i + F_i·u_{i+1} = f_i`.
///
/// `lower[i]` is the diagonal of `E_{i+1}` (row `i+1`, column `i`) and
/// `upper[i]` is the diagonal of `F_i` (row `i`, column `i+1`); both have
/// `n_blocks − 1` entries. The right-hand side is stored block-row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagSystem {
    block_dim: usize,
    diag: Vec<TridiagonalBlock>,
    lower: Vec<Vec<f64>>,
    upper: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl BlockTridiagSystem {
    pub fn new(
        diag: Vec<TridiagonalBlock>,
        lower: Vec<Vec<f64>>,
        upper: Vec<Vec<f64>>,
        rhs: Vec<f64>,
    ) -> Result<Self> {
        let m = diag.len();
        if m == 0 {
            return Err(AcrError::invalid(
                "a block tridiagonal system needs at least one block",
            ));
        }
        let n = diag[0].dim();
        if n == 0 {
            return Err(AcrError::invalid("blocks must have positive dimension"));
        }
        for d in &diag {
            if d.dim() != n || d.sub.len() != n - 1 || d.sup.len() != n - 1 {
                return Err(AcrError::DimensionMismatch {
                    context: "tridiagonal block",
                    expected: n,
                    actual: d.dim(),
                });
            }
        }
        for (what, v) in [("lower couplings", &lower), ("upper couplings", &upper)] {
            if v.len() != m - 1 {
                return Err(AcrError::DimensionMismatch {
                    context: what,
                    expected: m - 1,
                    actual: v.len(),
                });
            }
            if let Some(bad) = v.iter().find(|c| c.len() != n) {
                return Err(AcrError::DimensionMismatch {
                    context: what,
                    expected: n,
                    actual: bad.len(),
                });
            }
        }
        if rhs.len() != m * n {
            return Err(AcrError::DimensionMismatch {
                context: "right-hand side",
                expected: m * n,
                actual: rhs.len(),
            });
        }
        Ok(BlockTridiagSystem {
            block_dim: n,
            diag,
            lower,
            upper,
            rhs,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Total number of unknowns.
    pub fn dim(&self) -> usize {
        self.n_blocks() * self.block_dim
    }

    pub fn diag_blocks(&self) -> &[TridiagonalBlock] {
        &self.diag
    }

    pub fn lower_blocks(&self) -> &[Vec<f64>] {
        &self.lower
    }

    pub fn upper_blocks(&self) -> &[Vec<f64>] {
        &self.upper
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn rhs_block(&self, i: usize) -> &[f64] {
        &self.rhs[i * self.block_dim..(i + 1) * self.block_dim]
    }

    pub fn with_rhs(mut self, rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != self.dim() {
            return Err(AcrError::DimensionMismatch {
                context: "right-hand side",
                expected: self.dim(),
                actual: rhs.len(),
            });
        }
        self.rhs = rhs;
        Ok(self)
    }

    /// Reverses the block order, i.e. applies the block permutation
    /// `i ↦ m−1−i` to rows and columns; couplings swap roles.
    pub fn reversed(&self) -> Self {
        let n = self.block_dim;
        let m = self.n_blocks();
        let rhs = (0..m)
            .rev()
            .flat_map(|i| self.rhs_block(i).to_vec())
            .collect();
        BlockTridiagSystem {
            block_dim: n,
            diag: self.diag.iter().rev().cloned().collect(),
            lower: self.upper.iter().rev().cloned().collect(),
            upper: self.lower.iter().rev().cloned().collect(),
            rhs,
        }
    }

    /// `A·u` using the exact block structure.
    pub fn apply(&self, u: &[f64]) -> Result<DVector<f64>> {
        if u.len() != self.dim() {
            return Err(AcrError::DimensionMismatch {
                context: "apply",
                expected: self.dim(),
                actual: u.len(),
            });
        }
        let n = self.block_dim;
        let mut y = vec![0.0; self.dim()];
        for (i, d) in self.diag.iter().enumerate() {
            let yi = &mut y[i * n..(i + 1) * n];
            d.apply_into(&u[i * n..(i + 1) * n], yi);
            if i > 0 {
                for (k, e) in self.lower[i - 1].iter().enumerate() {
                    yi[k] += e * u[(i - 1) * n + k];
                }
            }
            if i + 1 < self.n_blocks() {
                for (k, f) in self.upper[i].iter().enumerate() {
                    yi[k] += f * u[(i + 1) * n + k];
                }
            }
        }
        Ok(DVector::from_vec(y))
    }

    /// The assembled `N×N` matrix in triplet form, explicit zeros omitted.
    pub fn assemble_full(&self) -> CooMatrix {
        let n = self.block_dim;
        let size = self.dim();
        let mut entries = Vec::with_capacity(5 * size);
        for (i, d) in self.diag.iter().enumerate() {
            let base = i * n;
            for k in 0..n {
                let row = base + k;
                if i > 0 {
                    entries.push((row, row - n, self.lower[i - 1][k]));
                }
                if k > 0 {
                    entries.push((row, row - 1, d.sub[k - 1]));
                }
                entries.push((row, row, d.diag[k]));
                if k + 1 < n {
                    entries.push((row, row + 1, d.sup[k]));
                }
                if i + 1 < self.n_blocks() {
                    entries.push((row, row + n, self.upper[i][k]));
                }
            }
        }
        entries.retain(|e| e.2 != 0.0);
        CooMatrix::new(size, size, entries).expect("indices are in range by construction")
    }
}
