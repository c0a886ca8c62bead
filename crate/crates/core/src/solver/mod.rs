//! Accelerated cyclic reduction.
//!
//! The solver lifts a [`BlockTridiagSystem`] into HODLR blocks, repeatedly
//! eliminates the even-indexed row-blocks (each level halves the block count
//! and stays block tridiagonal), solves the last few blocks densely and then
//! back-substitutes through the recorded levels. [`dense_bcr_solve`] runs the
//! same control flow with dense blocks and exact arithmetic.

mod arithmetic;
mod level;

use std::time::Instant;

use nalgebra::DVector;

pub use arithmetic::{BlockArithmetic, DenseArithmetic, HodlrArithmetic};
pub use level::{
    backsubstitute, lift_dense, lift_system, reduce_level, solve_directly, BlockTridiagLevel,
    EliminatedBlock, EliminationRecord, EliminationStep, HBlockTridiag, InversionSchedule,
};

use crate::algebra::RankProfile;
use crate::error::{AcrError, Result};
use crate::hodlr::{Tolerance, DEFAULT_LEAF_SIZE};
use crate::oracles::relative_residual;
use crate::problems::BlockTridiagSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcrOptions {
    pub tol: Tolerance,
    /// Reduction stops once the level has at most this many blocks.
    pub cutoff_blocks: usize,
    pub leaf_size: usize,
    pub schedule: InversionSchedule,
}

impl AcrOptions {
    pub fn new(eps: f64) -> Result<Self> {
        Ok(AcrOptions {
            tol: Tolerance::new(eps)?,
            cutoff_blocks: 1,
            leaf_size: DEFAULT_LEAF_SIZE,
            schedule: InversionSchedule::Parallel,
        })
    }

    pub fn cutoff_blocks(self, cutoff_blocks: usize) -> Self {
        AcrOptions {
            cutoff_blocks,
            ..self
        }
    }

    pub fn leaf_size(self, leaf_size: usize) -> Self {
        AcrOptions { leaf_size, ..self }
    }

    pub fn schedule(self, schedule: InversionSchedule) -> Self {
        AcrOptions { schedule, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimings {
    pub lift_ms: f64,
    pub reduce_ms: f64,
    pub direct_ms: f64,
    pub backsub_ms: f64,
}

impl PhaseTimings {
    pub fn total_ms(&self) -> f64 {
        self.lift_ms + self.reduce_ms + self.direct_ms + self.backsub_ms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `‖Au − f‖₂ / ‖f‖₂` against the original (uncompressed) system.
    pub residual: f64,
    /// False when `f = 0` and `residual` is absolute.
    pub residual_is_relative: bool,
    /// One profile per level system, from the lifted system to the one solved
    /// directly.
    pub rank_profiles: Vec<RankProfile>,
    pub max_rank: usize,
    /// Bytes held by the elimination record plus the final level.
    pub storage_bytes: usize,
    pub timings: PhaseTimings,
    /// Level systems visited, counting the directly solved one.
    pub levels: usize,
    pub reduction_levels: usize,
    /// Dimension of the final dense solve.
    pub cutoff_dim: usize,
    pub threads: usize,
}

/// Number of reduction levels cyclic reduction performs on `m` blocks.
pub fn reduction_level_count(m: usize, cutoff_blocks: usize) -> usize {
    let mut m = m;
    let mut levels = 0;
    while m > cutoff_blocks.max(1) {
        m /= 2;
        levels += 1;
    }
    levels
}

struct Trace {
    profiles: Vec<RankProfile>,
    storage_bytes: usize,
    reduce_ms: f64,
    direct_ms: f64,
    backsub_ms: f64,
    reduction_levels: usize,
    cutoff_dim: usize,
}

fn cyclic_reduction<A: BlockArithmetic>(
    arith: &A,
    level0: BlockTridiagLevel<A::Block>,
    cutoff_blocks: usize,
    schedule: InversionSchedule,
    mut observe: impl FnMut(&BlockTridiagLevel<A::Block>) -> RankProfile,
) -> Result<(Vec<DVector<f64>>, Trace)> {
    if cutoff_blocks == 0 {
        return Err(AcrError::invalid("cutoff_blocks must be at least 1"));
    }
    let mut profiles = vec![observe(&level0)];
    let mut record = EliminationRecord::default();
    let mut level = level0;

    let start = Instant::now();
    while level.n_blocks() > cutoff_blocks {
        let (next, step) = reduce_level(arith, level, schedule)?;
        record.push(step);
        profiles.push(observe(&next));
        level = next;
    }
    let reduce_ms = ms(start);

    let start = Instant::now();
    let u_final = solve_directly(arith, &level).map_err(|source| AcrError::SingularPivot {
        level: level.level(),
        block: 0,
        source: Box::new(source),
    })?;
    let direct_ms = ms(start);
    let cutoff_dim = u_final.iter().map(|s| s.len()).sum();

    let storage_bytes = record
        .steps()
        .iter()
        .map(|s| s.storage_bytes(arith))
        .sum::<usize>()
        + level
            .blocks()
            .map(|b| arith.storage_bytes(b))
            .sum::<usize>();

    let start = Instant::now();
    let u = backsubstitute(arith, &record, u_final)?;
    let backsub_ms = ms(start);

    Ok((
        u,
        Trace {
            profiles,
            storage_bytes,
            reduce_ms,
            direct_ms,
            backsub_ms,
            reduction_levels: record.len(),
            cutoff_dim,
        },
    ))
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn flatten(segments: Vec<DVector<f64>>) -> Vec<f64> {
    segments
        .into_iter()
        .flat_map(|s| Vec::from(s.data))
        .collect()
}

/// Solves `sys` with accelerated cyclic reduction.
pub fn acr_solve(sys: &BlockTridiagSystem, opts: &AcrOptions) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let lifted = lift_system(sys, opts.leaf_size)?;
    let lift_ms = ms(start);

    let arith = HodlrArithmetic { tol: opts.tol };
    let (segments, trace) =
        cyclic_reduction(&arith, lifted, opts.cutoff_blocks, opts.schedule, |level| {
            RankProfile::of(level.blocks())
        })?;
    let u = flatten(segments);
    let residual = relative_residual(sys, &u)?;
    let max_rank = trace
        .profiles
        .iter()
        .map(RankProfile::max_rank)
        .max()
        .unwrap_or(0);
    let report = SolveReport {
        residual: residual.value,
        residual_is_relative: residual.relative,
        max_rank,
        storage_bytes: trace.storage_bytes,
        timings: PhaseTimings {
            lift_ms,
            reduce_ms: trace.reduce_ms,
            direct_ms: trace.direct_ms,
            backsub_ms: trace.backsub_ms,
        },
        levels: trace.profiles.len(),
        rank_profiles: trace.profiles,
        reduction_levels: trace.reduction_levels,
        cutoff_dim: trace.cutoff_dim,
        threads: rayon::current_num_threads(),
    };
    Ok((u, report))
}

/// Plain block cyclic reduction with dense blocks, reduced to a single block.
pub fn dense_bcr_solve(sys: &BlockTridiagSystem) -> Result<Vec<f64>> {
    let level0 = lift_dense(sys)?;
    let (segments, _) = cyclic_reduction(
        &DenseArithmetic,
        level0,
        1,
        InversionSchedule::Sequential,
        |_| RankProfile::default(),
    )?;
    Ok(flatten(segments))
}
