//! Arithmetic on [`HodlrMatrix`]: products with vectors and dense panels,
//! addition, multiplication and inversion with eager recompression.
//!
//! Every operation is pure and takes its operands by reference. Whenever
//! low-rank contributions are accumulated into an off-diagonal block, the
//! concatenated factor is immediately recompressed with [`truncate_factor`],
//! so intermediate ranks stay bounded by what the tolerance allows.
//!
//! Inversion uses the 2×2 block inverse on the HODLR split:
//!
//! ```text
//! [A B]⁻¹   [A⁻¹ + A⁻¹B S⁻¹C A⁻¹   −A⁻¹B S⁻¹]
//! [C D]   = [−S⁻¹C A⁻¹                S⁻¹   ],   S = D − C A⁻¹ B
//! ```
//!
//! where `B` and `C` are low-rank, so every correction is a low-rank update
//! of a hierarchical block.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};

use crate::dense::checked_inverse;
use crate::error::{AcrError, Result};
use crate::hodlr::{truncate_factor, HodlrMatrix, LowRankFactor, Payload, Tolerance};

/// `H·x`.
pub fn matvec(h: &HodlrMatrix, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != h.dim() {
        return Err(AcrError::DimensionMismatch {
            context: "matvec",
            expected: h.dim(),
            actual: x.len(),
        });
    }
    let mut y = DMatrix::zeros(h.dim(), 1);
    gemm_into(h, x.as_view(), &mut y.as_view_mut());
    Ok(DVector::from_column_slice(y.as_slice()))
}

/// `H·X` for a dense panel `X` with `dim(H)` rows.
pub fn mul_dense(h: &HodlrMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(
        x.nrows(),
        h.dim(),
        "mul_dense: row count must match dimension"
    );
    let mut y = DMatrix::zeros(h.dim(), x.ncols());
    if x.ncols() > 0 {
        gemm_into(h, x.as_view(), &mut y.as_view_mut());
    }
    y
}

/// `Hᵀ·X` for a dense panel `X` with `dim(H)` rows.
pub fn tr_mul_dense(h: &HodlrMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(
        x.nrows(),
        h.dim(),
        "tr_mul_dense: row count must match dimension"
    );
    let mut y = DMatrix::zeros(h.dim(), x.ncols());
    if x.ncols() > 0 {
        gemm_tr_into(h, x.as_view(), &mut y.as_view_mut());
    }
    y
}

// y += H·x
fn gemm_into(h: &HodlrMatrix, x: DMatrixView<'_, f64>, y: &mut DMatrixViewMut<'_, f64>) {
    match h.payload() {
        Payload::DenseLeaf(block) => y.gemm(1.0, block, &x, 1.0),
        Payload::Branch(b) => {
            let (n1, n2) = (b.diag11.dim(), b.diag22.dim());
            let c = x.ncols();
            let (x1, x2) = (x.rows(0, n1), x.rows(n1, n2));
            {
                let mut y1 = y.view_mut((0, 0), (n1, c));
                gemm_into(&b.diag11, x1, &mut y1);
                b.off12.apply_view_into(x2, &mut y1);
            }
            let mut y2 = y.view_mut((n1, 0), (n2, c));
            gemm_into(&b.diag22, x2, &mut y2);
            b.off21.apply_view_into(x1, &mut y2);
        }
    }
}

// y += Hᵀ·x
fn gemm_tr_into(h: &HodlrMatrix, x: DMatrixView<'_, f64>, y: &mut DMatrixViewMut<'_, f64>) {
    match h.payload() {
        Payload::DenseLeaf(block) => y.gemm_tr(1.0, block, &x, 1.0),
        Payload::Branch(b) => {
            let (n1, n2) = (b.diag11.dim(), b.diag22.dim());
            let c = x.ncols();
            let (x1, x2) = (x.rows(0, n1), x.rows(n1, n2));
            {
                // (Hᵀ)₁₂ = (H₂₁)ᵀ
                let mut y1 = y.view_mut((0, 0), (n1, c));
                gemm_tr_into(&b.diag11, x1, &mut y1);
                if b.off21.rank() > 0 {
                    let coeff = b.off21.u().tr_mul(&x2);
                    y1.gemm(1.0, b.off21.v(), &coeff, 1.0);
                }
            }
            let mut y2 = y.view_mut((n1, 0), (n2, c));
            gemm_tr_into(&b.diag22, x2, &mut y2);
            if b.off12.rank() > 0 {
                let coeff = b.off12.u().tr_mul(&x1);
                y2.gemm(1.0, b.off12.v(), &coeff, 1.0);
            }
        }
    }
}

/// `α·H`, exact.
pub fn scale(h: &HodlrMatrix, alpha: f64) -> HodlrMatrix {
    match h.payload() {
        Payload::DenseLeaf(block) => HodlrMatrix::leaf(h.tree().clone(), block * alpha),
        Payload::Branch(b) => HodlrMatrix::branch(
            h.tree().clone(),
            scale(&b.diag11, alpha),
            scale(&b.diag22, alpha),
            b.off12.scaled(alpha),
            b.off21.scaled(alpha),
        ),
    }
}

/// Sum of two factors followed by recompression; a zero operand is passed
/// through without touching the other factor.
fn add_factors(a: &LowRankFactor, b: &LowRankFactor, tol: &Tolerance) -> LowRankFactor {
    match (a.rank(), b.rank()) {
        (_, 0) => a.clone(),
        (0, _) => b.clone(),
        _ => truncate_factor(&a.concat(b), tol),
    }
}

/// `A + B` with truncation of every off-diagonal sum.
pub fn add(a: &HodlrMatrix, b: &HodlrMatrix, tol: &Tolerance) -> Result<HodlrMatrix> {
    a.check_same_tree(b)?;
    Ok(add_unchecked(a, b, tol))
}

fn add_unchecked(a: &HodlrMatrix, b: &HodlrMatrix, tol: &Tolerance) -> HodlrMatrix {
    match (a.payload(), b.payload()) {
        (Payload::DenseLeaf(x), Payload::DenseLeaf(y)) => {
            HodlrMatrix::leaf(a.tree().clone(), x + y)
        }
        (Payload::Branch(x), Payload::Branch(y)) => {
            let (d11, d22) = rayon::join(
                || add_unchecked(&x.diag11, &y.diag11, tol),
                || add_unchecked(&x.diag22, &y.diag22, tol),
            );
            HodlrMatrix::branch(
                a.tree().clone(),
                d11,
                d22,
                add_factors(&x.off12, &y.off12, tol),
                add_factors(&x.off21, &y.off21, tol),
            )
        }
        _ => unreachable!("trees were checked to match"),
    }
}

/// `H + U·Vᵀ` for a full-size low-rank term.
pub fn add_low_rank(h: &HodlrMatrix, f: &LowRankFactor, tol: &Tolerance) -> HodlrMatrix {
    debug_assert_eq!((f.nrows(), f.ncols()), (h.dim(), h.dim()));
    if f.rank() == 0 {
        return h.clone();
    }
    match h.payload() {
        Payload::DenseLeaf(block) => HodlrMatrix::leaf(h.tree().clone(), block + f.to_dense()),
        Payload::Branch(b) => {
            let (n1, n) = (b.diag11.dim(), h.dim());
            let (d11, d22) = rayon::join(
                || add_low_rank(&b.diag11, &f.restrict(0..n1, 0..n1), tol),
                || add_low_rank(&b.diag22, &f.restrict(n1..n, n1..n), tol),
            );
            HodlrMatrix::branch(
                h.tree().clone(),
                d11,
                d22,
                add_factors(&b.off12, &f.restrict(0..n1, n1..n), tol),
                add_factors(&b.off21, &f.restrict(n1..n, 0..n1), tol),
            )
        }
    }
}

/// `(U₁V₁ᵀ)·(U₂V₂ᵀ) = U₁·(V₁ᵀU₂)·V₂ᵀ`
fn factor_product(a: &LowRankFactor, b: &LowRankFactor) -> LowRankFactor {
    if a.rank() == 0 || b.rank() == 0 {
        return LowRankFactor::zeros(a.nrows(), b.ncols());
    }
    let core = a.v().tr_mul(b.u());
    LowRankFactor::new(a.u() * core, b.v().clone()).expect("ranks agree")
}

/// `H·(UVᵀ) = (H·U)·Vᵀ`
fn hodlr_times_factor(h: &HodlrMatrix, f: &LowRankFactor) -> LowRankFactor {
    if f.rank() == 0 {
        return LowRankFactor::zeros(h.dim(), f.ncols());
    }
    LowRankFactor::new(mul_dense(h, f.u()), f.v().clone()).expect("ranks agree")
}

/// `(UVᵀ)·H = U·(Hᵀ·V)ᵀ`
fn factor_times_hodlr(f: &LowRankFactor, h: &HodlrMatrix) -> LowRankFactor {
    if f.rank() == 0 {
        return LowRankFactor::zeros(f.nrows(), h.dim());
    }
    LowRankFactor::new(f.u().clone(), tr_mul_dense(h, f.v())).expect("ranks agree")
}

/// `A·B` by recursive 2×2 block multiplication.
pub fn multiply(a: &HodlrMatrix, b: &HodlrMatrix, tol: &Tolerance) -> Result<HodlrMatrix> {
    a.check_same_tree(b)?;
    Ok(multiply_unchecked(a, b, tol))
}

fn multiply_unchecked(a: &HodlrMatrix, b: &HodlrMatrix, tol: &Tolerance) -> HodlrMatrix {
    match (a.payload(), b.payload()) {
        (Payload::DenseLeaf(x), Payload::DenseLeaf(y)) => {
            HodlrMatrix::leaf(a.tree().clone(), x * y)
        }
        (Payload::Branch(x), Payload::Branch(y)) => {
            let ((c11, c22), (c12, c21)) = rayon::join(
                || {
                    rayon::join(
                        || {
                            let p = multiply_unchecked(&x.diag11, &y.diag11, tol);
                            add_low_rank(&p, &factor_product(&x.off12, &y.off21), tol)
                        },
                        || {
                            let p = multiply_unchecked(&x.diag22, &y.diag22, tol);
                            add_low_rank(&p, &factor_product(&x.off21, &y.off12), tol)
                        },
                    )
                },
                || {
                    let c12 = add_factors(
                        &hodlr_times_factor(&x.diag11, &y.off12),
                        &factor_times_hodlr(&x.off12, &y.diag22),
                        tol,
                    );
                    let c21 = add_factors(
                        &factor_times_hodlr(&x.off21, &y.diag11),
                        &hodlr_times_factor(&x.diag22, &y.off21),
                        tol,
                    );
                    (c12, c21)
                },
            );
            HodlrMatrix::branch(a.tree().clone(), c11, c22, c12, c21)
        }
        _ => unreachable!("trees were checked to match"),
    }
}

/// `H⁻¹` by recursive block inversion. A leaf whose LU meets a roundoff-level
/// pivot reports [`AcrError::SingularLeaf`] with its index range.
pub fn invert(h: &HodlrMatrix, tol: &Tolerance) -> Result<HodlrMatrix> {
    match h.payload() {
        Payload::DenseLeaf(block) => {
            let inv = checked_inverse(block).ok_or(AcrError::SingularLeaf {
                lo: h.tree().lo(),
                hi: h.tree().hi(),
            })?;
            Ok(HodlrMatrix::leaf(h.tree().clone(), inv))
        }
        Payload::Branch(b) => {
            let a_inv = invert(&b.diag11, tol)?;
            // S = D − C·A⁻¹·B with B = U₁₂V₁₂ᵀ, C = U₂₁V₂₁ᵀ
            let ainv_u12 = mul_dense(&a_inv, b.off12.u());
            let schur = if b.off12.rank() > 0 && b.off21.rank() > 0 {
                let core = b.off21.v().tr_mul(&ainv_u12);
                let update = LowRankFactor::new(-(b.off21.u() * core), b.off12.v().clone())
                    .expect("ranks agree");
                add_low_rank(&b.diag22, &update, tol)
            } else {
                b.diag22.clone()
            };
            let s_inv = invert(&schur, tol)?;

            let ainv_t_v21 = tr_mul_dense(&a_inv, b.off21.v());
            let sinv_u21 = mul_dense(&s_inv, b.off21.u());
            let sinv_t_v12 = tr_mul_dense(&s_inv, b.off12.v());

            let off12 = truncate_factor(
                &LowRankFactor::new(-&ainv_u12, sinv_t_v12).expect("ranks agree"),
                tol,
            );
            let off21 = truncate_factor(
                &LowRankFactor::new(-&sinv_u21, ainv_t_v21.clone()).expect("ranks agree"),
                tol,
            );
            let d11 = if b.off12.rank() > 0 && b.off21.rank() > 0 {
                let core = b.off12.v().tr_mul(&sinv_u21);
                let update = LowRankFactor::new(&ainv_u12 * core, ainv_t_v21).expect("ranks agree");
                add_low_rank(&a_inv, &update, tol)
            } else {
                a_inv
            };
            Ok(HodlrMatrix::branch(
                h.tree().clone(),
                d11,
                s_inv,
                off12,
                off21,
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `S ± A·B⁻¹·C`, the matrix update behind every Schur step. `binv` is the
/// already inverted middle factor.
pub fn add_triple_product(
    s: &HodlrMatrix,
    a: &HodlrMatrix,
    binv: &HodlrMatrix,
    c: &HodlrMatrix,
    sign: Sign,
    tol: &Tolerance,
) -> Result<HodlrMatrix> {
    s.check_same_tree(a)?;
    s.check_same_tree(binv)?;
    s.check_same_tree(c)?;
    let ab = multiply_unchecked(a, binv, tol);
    let abc = multiply_unchecked(&ab, c, tol);
    Ok(add_unchecked(s, &scale(&abc, sign.value()), tol))
}

/// Off-diagonal rank statistics for one tree depth.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DepthRanks {
    pub max: usize,
    pub mean: f64,
    pub count: usize,
}

/// Per-depth maximum and mean off-diagonal rank over a set of blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankProfile {
    pub depths: Vec<DepthRanks>,
}

impl RankProfile {
    pub fn of<'a>(blocks: impl IntoIterator<Item = &'a HodlrMatrix>) -> Self {
        let mut sums: Vec<(usize, usize, usize)> = Vec::new();
        for h in blocks {
            h.for_each_factor(|depth, f| {
                if sums.len() <= depth {
                    sums.resize(depth + 1, (0, 0, 0));
                }
                let entry = &mut sums[depth];
                entry.0 = entry.0.max(f.rank());
                entry.1 += f.rank();
                entry.2 += 1;
            });
        }
        RankProfile {
            depths: sums
                .into_iter()
                .map(|(max, total, count)| DepthRanks {
                    max,
                    mean: if count == 0 {
                        0.0
                    } else {
                        total as f64 / count as f64
                    },
                    count,
                })
                .collect(),
        }
    }

    pub fn max_rank(&self) -> usize {
        self.depths.iter().map(|d| d.max).max().unwrap_or(0)
    }

    /// Maximum rank per depth, root first.
    pub fn max_by_depth(&self) -> Vec<usize> {
        self.depths.iter().map(|d| d.max).collect()
    }
}
