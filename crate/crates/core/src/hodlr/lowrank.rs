use nalgebra::{DMatrix, DMatrixView, DVector};

use crate::error::{AcrError, Result};

/// Truncation control shared by compression and all hierarchical arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    eps: f64,
    max_rank_cap: Option<usize>,
}

impl Tolerance {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(AcrError::invalid(format!(
                "eps must be positive and finite, got {eps}"
            )));
        }
        Ok(Tolerance {
            eps,
            max_rank_cap: None,
        })
    }

    pub fn with_max_rank(self, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(AcrError::invalid("max_rank_cap must be positive"));
        }
        Ok(Tolerance {
            max_rank_cap: Some(cap),
            ..self
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn max_rank_cap(&self) -> Option<usize> {
        self.max_rank_cap
    }

    /// Number of leading singular values to keep: those with `σᵢ ≥ eps·σ₁`,
    /// further limited by the rank cap. The threshold depends only on `σ₁`,
    /// which truncation preserves, so truncating twice keeps the same rank.
    /// `sigma` must be sorted in non-increasing order.
    pub(crate) fn kept_rank(&self, sigma: &[f64]) -> usize {
        let Some(&s1) = sigma.first() else {
            return 0;
        };
        if !(s1 > 0.0) {
            return 0;
        }
        let floor = self.eps * s1;
        let k = sigma.iter().take_while(|&&s| s >= floor).count();
        match self.max_rank_cap {
            Some(cap) => k.min(cap),
            None => k,
        }
    }
}

/// Low-rank block `U·Vᵀ` with `U: m×r`, `V: k×r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactor {
    u: DMatrix<f64>,
    v: DMatrix<f64>,
}

impl LowRankFactor {
    pub fn new(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(AcrError::DimensionMismatch {
                context: "low-rank factor columns",
                expected: u.ncols(),
                actual: v.ncols(),
            });
        }
        Ok(LowRankFactor { u, v })
    }

    pub(crate) fn from_parts(u: DMatrix<f64>, v: DMatrix<f64>) -> Self {
        debug_assert_eq!(u.ncols(), v.ncols());
        LowRankFactor { u, v }
    }

    /// The `m×k` zero block, stored with no columns.
    pub fn zeros(m: usize, k: usize) -> Self {
        LowRankFactor {
            u: DMatrix::zeros(m, 0),
            v: DMatrix::zeros(k, 0),
        }
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        if self.rank() == 0 {
            return DMatrix::zeros(self.nrows(), self.ncols());
        }
        &self.u * self.v.transpose()
    }

    pub fn stored_scalars(&self) -> usize {
        self.u.len() + self.v.len()
    }

    pub fn transpose(&self) -> Self {
        LowRankFactor {
            u: self.v.clone(),
            v: self.u.clone(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        LowRankFactor {
            u: &self.u * alpha,
            v: self.v.clone(),
        }
    }

    /// `(U·Vᵀ)·x`
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.rank() == 0 {
            return DVector::zeros(self.nrows());
        }
        &self.u * (self.v.tr_mul(x))
    }

    /// `y += (U·Vᵀ)·x` restricted to views.
    pub(crate) fn apply_view_into(
        &self,
        x: DMatrixView<'_, f64>,
        y: &mut nalgebra::DMatrixViewMut<'_, f64>,
    ) {
        if self.rank() == 0 {
            return;
        }
        let coeff = self.v.tr_mul(&x);
        y.gemm(1.0, &self.u, &coeff, 1.0);
    }

    /// Column-wise concatenation `[U₁ U₂]·[V₁ V₂]ᵀ`, i.e. the exact sum.
    pub fn concat(&self, other: &LowRankFactor) -> Self {
        debug_assert_eq!(self.nrows(), other.nrows());
        debug_assert_eq!(self.ncols(), other.ncols());
        LowRankFactor {
            u: hcat(&self.u, &other.u),
            v: hcat(&self.v, &other.v),
        }
    }

    /// Row/column restriction of the block.
    pub(crate) fn restrict(
        &self,
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
    ) -> Self {
        LowRankFactor {
            u: self.u.rows(rows.start, rows.len()).into_owned(),
            v: self.v.rows(cols.start, cols.len()).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

pub(crate) fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Recompresses `U·Vᵀ`: thin QR of both factors, SVD of the small core
/// `R_u·R_vᵀ`, then singular-value truncation under `tol`.
pub fn truncate_factor(factor: &LowRankFactor, tol: &Tolerance) -> LowRankFactor {
    let (m, k, r) = (factor.nrows(), factor.ncols(), factor.rank());
    if r == 0 || m == 0 || k == 0 {
        return LowRankFactor::zeros(m, k);
    }
    let qr_u = factor.u.clone().qr();
    let qr_v = factor.v.clone().qr();
    let ru = qr_u.r();
    let rv = qr_v.r();
    let core = &ru * rv.transpose();

    let (sigma, w, zt) = thin_svd(&core);

    // Cancellation below roundoff of the inputs is an exact zero block.
    let scale = ru.norm() * rv.norm();
    if sigma
        .first()
        .is_none_or(|&s| s <= (r as f64) * f64::EPSILON * scale)
    {
        return LowRankFactor::zeros(m, k);
    }

    let keep = tol.kept_rank(&sigma);
    if keep == 0 {
        return LowRankFactor::zeros(m, k);
    }
    let mut ws = w.columns(0, keep).into_owned();
    for (j, s) in sigma.iter().take(keep).enumerate() {
        ws.column_mut(j).scale_mut(*s);
    }
    let u = qr_u.q() * ws;
    let v = qr_v.q() * zt.rows(0, keep).transpose();
    LowRankFactor { u, v }
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Truncated SVD of a dense block, returned as `(U·Σ, V)`.
pub fn compress_block(block: DMatrixView<'_, f64>, tol: &Tolerance) -> LowRankFactor {
    let (m, k) = block.shape();
    if m == 0 || k == 0 || block.iter().all(|&x| x == 0.0) {
        return LowRankFactor::zeros(m, k);
    }
    let (sigma, w, zt) = thin_svd(&block.into_owned());
    let keep = tol.kept_rank(&sigma);
    if keep == 0 {
        return LowRankFactor::zeros(m, k);
    }
    let mut ws = w.columns(0, keep).into_owned();
    for (j, s) in sigma.iter().take(keep).enumerate() {
        ws.column_mut(j).scale_mut(*s);
    }
    LowRankFactor {
        u: ws,
        v: zt.rows(0, keep).transpose(),
    }
}

/// Thin SVD `(σ, W, Zᵀ)` with singular values in non-increasing order.
///
/// nalgebra's bidiagonal SVD is fast but returns inaccurate singular vectors
/// on some exactly rank-deficient inputs. Its result is accepted only when it
/// passes an a-posteriori check; otherwise the factorization is redone by faer.
fn thin_svd(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    if let Some(svd) = checked_nalgebra_svd(m) {
        return svd;
    }
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    match to_faer(m).thin_svd() {
        Ok(svd) => {
            let s = svd.S().column_vector();
            let (u, v) = (svd.U(), svd.V());
            (
                (0..k).map(|i| s[i]).collect(),
                DMatrix::from_fn(rows, k, |i, j| u[(i, j)]),
                DMatrix::from_fn(k, cols, |i, j| v[(j, i)]),
            )
        }
        // non-finite input: let the caller see NaNs rather than panic here
        Err(_) => (
            vec![f64::NAN; k],
            DMatrix::zeros(rows, k),
            DMatrix::zeros(k, cols),
        ),
    }
}

fn checked_nalgebra_svd(m: &DMatrix<f64>) -> Option<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let k = m.nrows().min(m.ncols());
    let svd = m.clone().try_svd(true, true, f64::EPSILON, 200)?;
    let (u, vt) = (svd.u?, svd.v_t?);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let w = u.select_columns(&order);
    let zt = vt.select_rows(&order);

    let tol = 64.0 * f64::EPSILON * (k as f64).sqrt();
    let id = DMatrix::<f64>::identity(k, k);
    let orthonormal =
        (w.tr_mul(&w) - &id).amax() <= tol && (&zt * zt.transpose() - &id).amax() <= tol;
    let mut ws = w.clone();
    for (j, s) in sigma.iter().enumerate() {
        ws.column_mut(j).scale_mut(*s);
    }
    let exact = (&ws * &zt - m).amax() <= tol * sigma.first().copied().unwrap_or(0.0);
    (orthonormal && exact && sigma.iter().all(|s| s.is_finite())).then_some((sigma, w, zt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn tol(eps: f64) -> Tolerance {
        Tolerance::new(eps).unwrap()
    }

    fn orthonormal(m: usize, r: usize, seed: u64) -> DMatrix<f64> {
        // deterministic pseudo-random matrix, orthonormalised by QR
        let mut state = seed;
        let a = DMatrix::from_fn(m, r, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        });
        a.qr().q().columns(0, r).into_owned()
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(Tolerance::new(0.0).is_err());
        assert!(Tolerance::new(-1.0).is_err());
        assert!(Tolerance::new(f64::NAN).is_err());
        assert!(tol(1e-3).with_max_rank(0).is_err());
    }

    #[test]
    fn duplicated_columns_collapse_to_rank_one() {
        let u0 = DMatrix::from_column_slice(5, 1, &[1.0, 2.0, -1.0, 0.5, 3.0]);
        let v0 = DMatrix::from_column_slice(4, 1, &[0.3, -2.0, 1.0, 1.5]);
        let f = LowRankFactor::new(hcat(&u0, &u0), hcat(&v0, &v0)).unwrap();
        let t = truncate_factor(&f, &tol(1e-10));
        assert_eq!(t.rank(), 1);
        assert!((t.to_dense() - f.to_dense()).norm() <= 1e-12 * f.to_dense().norm());
    }

    #[test]
    fn rank_zero_stays_rank_zero() {
        let f = LowRankFactor::zeros(6, 3);
        let t = truncate_factor(&f, &tol(1e-10));
        assert_eq!(t.rank(), 0);
        assert_eq!((t.nrows(), t.ncols()), (6, 3));
    }

    #[test]
    fn prescribed_spectrum_drops_only_tiny_value() {
        // M = W·diag(1, 1e-3, 1e-9)·Zᵀ with orthonormal W, Z; the dense SVD of M
        // is known by construction.
        let w = orthonormal(12, 3, 7);
        let z = orthonormal(9, 3, 11);
        let s = [1.0, 1e-3, 1e-9];
        let mut ws = w.clone();
        for j in 0..3 {
            ws.column_mut(j).scale_mut(s[j]);
        }
        let f = LowRankFactor::new(ws, z).unwrap();
        let dense = f.to_dense();
        let t = truncate_factor(&f, &tol(1e-6));
        assert_eq!(t.rank(), 2);
        let err = (t.to_dense() - &dense).norm();
        assert!(err <= 1e-9 * dense.norm() * (1.0 + 1e-6), "err = {err:e}");

        // cross-check against an independent dense SVD of the product
        let sv = dense.singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert!((sv[0] - 1.0).abs() < 1e-12 && (sv[1] - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn rank_cap_is_honoured() {
        let w = orthonormal(10, 4, 3);
        let z = orthonormal(10, 4, 5);
        let f = LowRankFactor::new(w, z).unwrap();
        let t = truncate_factor(&f, &tol(1e-12).with_max_rank(2).unwrap());
        assert_eq!(t.rank(), 2);
    }

    #[test]
    fn exact_cancellation_is_zero() {
        let u0 = orthonormal(8, 2, 1);
        let v0 = orthonormal(8, 2, 2);
        let a = LowRankFactor::new(u0.clone(), v0.clone()).unwrap();
        let neg = LowRankFactor::new(-u0, v0).unwrap();
        assert_eq!(truncate_factor(&a.concat(&neg), &tol(1e-12)).rank(), 0);
    }

    #[test]
    fn kept_rank_thresholds_relative_to_largest() {
        let t = tol(1e-2);
        assert_eq!(t.kept_rank(&[1.0, 0.009, 0.009]), 1);
        assert_eq!(t.kept_rank(&[1.0, 0.5, 0.01, 0.001]), 3);
        assert_eq!(t.kept_rank(&[0.0, 0.0]), 0);
        assert_eq!(t.kept_rank(&[]), 0);
    }

    #[test]
    fn compress_block_zero_and_rank_one() {
        let z = DMatrix::<f64>::zeros(4, 5);
        assert_eq!(compress_block(z.as_view(), &tol(1e-12)).rank(), 0);
        let u = DMatrix::from_fn(4, 1, |i, _| i as f64 + 1.0);
        let v = DMatrix::from_fn(5, 1, |i, _| 1.0 / (i as f64 + 1.0));
        let m = &u * v.transpose();
        let c = compress_block(m.as_view(), &tol(1e-12));
        assert_eq!(c.rank(), 1);
        assert!((c.to_dense() - m).norm() < 1e-14);
    }

    #[test]
    fn thin_svd_is_accurate_on_rank_deficient_inputs() {
        for (n, r) in [(6, 3), (12, 5), (9, 1)] {
            let m = orthonormal(n, r, 3) * orthonormal(n, r, 4).transpose() * 2.0;
            let (sigma, w, zt) = thin_svd(&m);
            let id = DMatrix::<f64>::identity(n, n);
            assert!((w.tr_mul(&w) - &id).amax() < 1e-13);
            assert!((&zt * zt.transpose() - &id).amax() < 1e-13);
            assert!(sigma.windows(2).all(|p| p[0] >= p[1]));
            let ws = &w * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sigma.clone()));
            assert!((ws * &zt - &m).amax() < 1e-13);
            assert!(sigma[..r].iter().all(|s| (s - 2.0).abs() < 1e-12));
        }
    }
}
