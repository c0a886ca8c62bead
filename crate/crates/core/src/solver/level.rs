use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::arithmetic::BlockArithmetic;
use crate::algebra::Sign;
use crate::error::{AcrError, Result};
use crate::hodlr::{ClusterTree, HodlrMatrix};
use crate::problems::BlockTridiagSystem;

/// Execution order of the independent even-block inversions in a level.
///
/// Every choice yields the same blocks; the non-parallel variants exist to
/// check exactly that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InversionSchedule {
    #[default]
    Parallel,
    Sequential,
    Reversed,
    Shuffled {
        seed: u64,
    },
}

impl InversionSchedule {
    fn order(self, count: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..count).collect();
        match self {
            InversionSchedule::Parallel | InversionSchedule::Sequential => {}
            InversionSchedule::Reversed => order.reverse(),
            InversionSchedule::Shuffled { seed } => {
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed))
            }
        }
        order
    }
}

/// One level of the block tridiagonal system:
/// `lower[i]` couples row `i+1` to column `i`, `upper[i]` couples row `i`
/// to column `i+1`. There is no storage for any other block position.
#[derive(Debug, Clone)]
pub struct BlockTridiagLevel<B> {
    level: usize,
    diag: Vec<B>,
    lower: Vec<B>,
    upper: Vec<B>,
    rhs: Vec<DVector<f64>>,
}

/// A level whose blocks are HODLR matrices.
pub type HBlockTridiag = BlockTridiagLevel<HodlrMatrix>;

impl<B> BlockTridiagLevel<B> {
    pub fn new(
        level: usize,
        diag: Vec<B>,
        lower: Vec<B>,
        upper: Vec<B>,
        rhs: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let m = diag.len();
        if m == 0 {
            return Err(AcrError::invalid("a level needs at least one block"));
        }
        for (what, len, expected) in [
            ("lower couplings", lower.len(), m - 1),
            ("upper couplings", upper.len(), m - 1),
            ("right-hand side segments", rhs.len(), m),
        ] {
            if len != expected {
                return Err(AcrError::DimensionMismatch {
                    context: what,
                    expected,
                    actual: len,
                });
            }
        }
        Ok(BlockTridiagLevel {
            level,
            diag,
            lower,
            upper,
            rhs,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[B] {
        &self.diag
    }

    pub fn lower(&self) -> &[B] {
        &self.lower
    }

    pub fn upper(&self) -> &[B] {
        &self.upper
    }

    pub fn rhs(&self) -> &[DVector<f64>] {
        &self.rhs
    }

    pub fn blocks(&self) -> impl Iterator<Item = &B> {
        self.diag.iter().chain(&self.lower).chain(&self.upper)
    }

    /// Assembles the level's full matrix.
    pub fn to_dense<A: BlockArithmetic<Block = B>>(&self, arith: &A) -> DMatrix<f64> {
        let blocks: Vec<DMatrix<f64>> = self.diag.iter().map(|b| arith.to_dense(b)).collect();
        let n = blocks[0].nrows();
        let m = self.n_blocks();
        let mut out = DMatrix::zeros(m * n, m * n);
        for i in 0..m {
            out.view_mut((i * n, i * n), (n, n)).copy_from(&blocks[i]);
            if i > 0 {
                out.view_mut((i * n, (i - 1) * n), (n, n))
                    .copy_from(&arith.to_dense(&self.lower[i - 1]));
            }
            if i + 1 < m {
                out.view_mut((i * n, (i + 1) * n), (n, n))
                    .copy_from(&arith.to_dense(&self.upper[i]));
            }
        }
        out
    }

    pub fn rhs_concatenated(&self) -> DVector<f64> {
        let data: Vec<f64> = self.rhs.iter().flat_map(|r| r.iter().copied()).collect();
        DVector::from_vec(data)
    }
}

/// Exact hierarchical form of a model system: every `D_i` through
/// [`HodlrMatrix::from_tridiagonal`], every coupling through
/// [`HodlrMatrix::from_diagonal`]. Nothing is truncated.
pub fn lift_system(sys: &BlockTridiagSystem, leaf_size: usize) -> Result<HBlockTridiag> {
    let tree = ClusterTree::new(sys.block_dim(), leaf_size)?;
    let diag = sys
        .diag_blocks()
        .par_iter()
        .map(|d| HodlrMatrix::from_tridiagonal(&d.sub, &d.diag, &d.sup, &tree))
        .collect::<Result<Vec<_>>>()?;
    let lower = sys
        .lower_blocks()
        .par_iter()
        .map(|e| HodlrMatrix::from_diagonal(e, &tree))
        .collect::<Result<Vec<_>>>()?;
    let upper = sys
        .upper_blocks()
        .par_iter()
        .map(|f| HodlrMatrix::from_diagonal(f, &tree))
        .collect::<Result<Vec<_>>>()?;
    BlockTridiagLevel::new(0, diag, lower, upper, rhs_segments(sys))
}

/// Dense counterpart of [`lift_system`].
pub fn lift_dense(sys: &BlockTridiagSystem) -> Result<BlockTridiagLevel<DMatrix<f64>>> {
    let n = sys.block_dim();
    let diag = sys
        .diag_blocks()
        .iter()
        .map(|d| {
            DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    d.diag[i]
                } else if i == j + 1 {
                    d.sub[j]
                } else if j == i + 1 {
                    d.sup[i]
                } else {
                    0.0
                }
            })
        })
        .collect();
    let diagonal = |v: &Vec<f64>| DMatrix::from_diagonal(&DVector::from_column_slice(v));
    let lower = sys.lower_blocks().iter().map(diagonal).collect();
    let upper = sys.upper_blocks().iter().map(diagonal).collect();
    BlockTridiagLevel::new(0, diag, lower, upper, rhs_segments(sys))
}

fn rhs_segments(sys: &BlockTridiagSystem) -> Vec<DVector<f64>> {
    (0..sys.n_blocks())
        .map(|i| DVector::from_column_slice(sys.rhs_block(i)))
        .collect()
}

/// What back-substitution needs about one eliminated (even) row-block.
#[derive(Debug, Clone)]
pub struct EliminatedBlock<B> {
    /// Index of the block within its level.
    pub index: usize,
    pub inverse: B,
    /// `E_i`, coupling to block `i−1` (absent for `i = 0`).
    pub lower: Option<B>,
    /// `F_i`, coupling to block `i+1` (absent for the last block).
    pub upper: Option<B>,
    pub rhs: DVector<f64>,
}

/// Record of one reduction level.
#[derive(Debug, Clone)]
pub struct EliminationStep<B> {
    pub level: usize,
    pub n_blocks: usize,
    pub eliminated: Vec<EliminatedBlock<B>>,
}

impl<B> EliminationStep<B> {
    pub fn storage_bytes<A: BlockArithmetic<Block = B>>(&self, arith: &A) -> usize {
        self.eliminated
            .iter()
            .map(|e| {
                arith.storage_bytes(&e.inverse)
                    + e.lower.as_ref().map_or(0, |b| arith.storage_bytes(b))
                    + e.upper.as_ref().map_or(0, |b| arith.storage_bytes(b))
                    + e.rhs.len() * std::mem::size_of::<f64>()
            })
            .sum()
    }
}

/// Reduction levels in execution order; append-only while reducing.
#[derive(Debug, Clone)]
pub struct EliminationRecord<B> {
    steps: Vec<EliminationStep<B>>,
}

impl<B> Default for EliminationRecord<B> {
    fn default() -> Self {
        EliminationRecord { steps: Vec::new() }
    }
}

impl<B> EliminationRecord<B> {
    pub fn push(&mut self, step: EliminationStep<B>) {
        self.steps.push(step);
    }

    pub fn steps(&self) -> &[EliminationStep<B>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

struct Pivot<B> {
    inverse: B,
    /// `D⁻¹·f` for the eliminated block.
    solved_rhs: DVector<f64>,
}

/// One step of cyclic reduction: eliminates the even-indexed blocks
/// `0, 2, 4, …` and returns the Schur complement on the odd ones, which is
/// again block tridiagonal with `⌊m/2⌋` blocks. For a kept block `j`:
///
/// ```text
/// D'_j = D_j − E_j D_{j−1}⁻¹ F_{j−1} − F_j D_{j+1}⁻¹ E_{j+1}
/// E'_j = −E_j D_{j−1}⁻¹ E_{j−1}
/// F'_j = −F_j D_{j+1}⁻¹ F_{j+1}
/// f'_j = f_j − E_j D_{j−1}⁻¹ f_{j−1} − F_j D_{j+1}⁻¹ f_{j+1}
/// ```
///
/// with terms involving missing neighbours dropped.
pub fn reduce_level<A: BlockArithmetic>(
    arith: &A,
    level: BlockTridiagLevel<A::Block>,
    schedule: InversionSchedule,
) -> Result<(BlockTridiagLevel<A::Block>, EliminationStep<A::Block>)> {
    let m = level.n_blocks();
    if m < 2 {
        return Err(AcrError::invalid("reduce_level needs at least two blocks"));
    }
    let evens: Vec<usize> = (0..m).step_by(2).collect();
    let invert_one = |i: usize| -> Result<Pivot<A::Block>> {
        let inverse = arith
            .invert(&level.diag[i])
            .map_err(|source| AcrError::SingularPivot {
                level: level.level,
                block: i,
                source: Box::new(source),
            })?;
        let solved_rhs = arith.apply(&inverse, &level.rhs[i]);
        Ok(Pivot {
            inverse,
            solved_rhs,
        })
    };

    let pivots: Vec<Pivot<A::Block>> = match schedule {
        InversionSchedule::Parallel => evens
            .par_iter()
            .map(|&i| invert_one(i))
            .collect::<Result<_>>()?,
        _ => {
            let mut slots: Vec<Option<Pivot<A::Block>>> = (0..evens.len()).map(|_| None).collect();
            for slot in schedule.order(evens.len()) {
                slots[slot] = Some(invert_one(evens[slot])?);
            }
            slots
                .into_iter()
                .map(|p| p.expect("every slot scheduled"))
                .collect()
        }
    };
    // pivot for even block i lives at pivots[i / 2]
    let pivot = |i: usize| &pivots[i / 2];

    let kept: Vec<usize> = (1..m).step_by(2).collect();
    let update = |&j: &usize| {
        // E_j·D_{j−1}⁻¹ and F_j·D_{j+1}⁻¹ each feed two of the new blocks
        let left = pivot(j - 1);
        let e_j = &level.lower[j - 1];
        let e_dinv = arith.multiply(e_j, &left.inverse);
        let mut d = arith.add_product(
            Some(&level.diag[j]),
            &e_dinv,
            &level.upper[j - 1],
            Sign::Minus,
        );
        let mut f = &level.rhs[j] - arith.apply(e_j, &left.solved_rhs);
        let new_lower =
            (j >= 3).then(|| arith.add_product(None, &e_dinv, &level.lower[j - 2], Sign::Minus));
        let mut new_upper = None;
        if j + 1 < m {
            let right = pivot(j + 1);
            let f_j = &level.upper[j];
            let f_dinv = arith.multiply(f_j, &right.inverse);
            d = arith.add_product(Some(&d), &f_dinv, &level.lower[j], Sign::Minus);
            f -= arith.apply(f_j, &right.solved_rhs);
            if j + 2 < m {
                new_upper =
                    Some(arith.add_product(None, &f_dinv, &level.upper[j + 1], Sign::Minus));
            }
        }
        (d, new_lower, new_upper, f)
    };
    let updates: Vec<_> = match schedule {
        InversionSchedule::Parallel => kept.par_iter().map(update).collect(),
        _ => kept.iter().map(update).collect(),
    };

    let mut diag = Vec::with_capacity(kept.len());
    let mut lower = Vec::with_capacity(kept.len().saturating_sub(1));
    let mut upper = Vec::with_capacity(kept.len().saturating_sub(1));
    let mut rhs = Vec::with_capacity(kept.len());
    for (d, l, u, f) in updates {
        diag.push(d);
        lower.extend(l);
        upper.extend(u);
        rhs.push(f);
    }

    let BlockTridiagLevel {
        level: index,
        lower: old_lower,
        upper: old_upper,
        rhs: old_rhs,
        ..
    } = level;
    let eliminated = evens
        .iter()
        .zip(pivots)
        .map(|(&i, p)| EliminatedBlock {
            index: i,
            inverse: p.inverse,
            lower: (i > 0).then(|| old_lower[i - 1].clone()),
            upper: (i + 1 < m).then(|| old_upper[i].clone()),
            rhs: old_rhs[i].clone(),
        })
        .collect();

    let next = BlockTridiagLevel::new(index + 1, diag, lower, upper, rhs)?;
    Ok((
        next,
        EliminationStep {
            level: index,
            n_blocks: m,
            eliminated,
        },
    ))
}

/// Recovers the eliminated unknowns level by level, deepest first:
/// `u_i = D_i⁻¹ (f_i − E_i u_{i−1} − F_i u_{i+1})` for every even `i`.
pub fn backsubstitute<A: BlockArithmetic>(
    arith: &A,
    record: &EliminationRecord<A::Block>,
    u_final: Vec<DVector<f64>>,
) -> Result<Vec<DVector<f64>>> {
    let mut u = u_final;
    for step in record.steps().iter().rev() {
        let m = step.n_blocks;
        if u.len() != m / 2 {
            return Err(AcrError::DimensionMismatch {
                context: "back-substitution segments",
                expected: m / 2,
                actual: u.len(),
            });
        }
        // kept block j = 2k+1 holds u[k]
        let odd = |j: usize| &u[(j - 1) / 2];
        let recovered: Vec<DVector<f64>> = step
            .eliminated
            .par_iter()
            .map(|e| {
                let mut r = e.rhs.clone();
                if let Some(lower) = &e.lower {
                    r -= arith.apply(lower, odd(e.index - 1));
                }
                if let Some(upper) = &e.upper {
                    r -= arith.apply(upper, odd(e.index + 1));
                }
                arith.apply(&e.inverse, &r)
            })
            .collect();
        let mut full = Vec::with_capacity(m);
        let mut evens = recovered.into_iter();
        let mut odds = u.into_iter();
        for i in 0..m {
            full.push(
                if i % 2 == 0 {
                    evens.next()
                } else {
                    odds.next()
                }
                .expect("segment counts match"),
            );
        }
        u = full;
    }
    Ok(u)
}

/// Assembles the final level and solves it with dense LU.
pub fn solve_directly<A: BlockArithmetic>(
    arith: &A,
    level: &BlockTridiagLevel<A::Block>,
) -> Result<Vec<DVector<f64>>> {
    let a = level.to_dense(arith);
    let f = level.rhs_concatenated();
    let u =
        crate::dense::checked_solve(&a, &f).ok_or(AcrError::SingularMatrix { dim: a.nrows() })?;
    let n = a.nrows() / level.n_blocks();
    Ok((0..level.n_blocks())
        .map(|i| DVector::from_column_slice(&u.as_slice()[i * n..(i + 1) * n]))
        .collect())
}
