//! Small dense helpers shared by leaf arithmetic, the dense baseline and the oracles.

use nalgebra::{DMatrix, DVector};

/// LU with partial pivoting, rejecting pivots at roundoff level.
pub(crate) fn checked_lu(
    m: &DMatrix<f64>,
) -> Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let scale = m.amax();
    if n == 0 {
        return Some(m.clone().lu());
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let lu = m.clone().lu();
    let threshold = n as f64 * f64::EPSILON * scale;
    let u = lu.u();
    let singular = u.diagonal().iter().any(|p| !(p.abs() > threshold));
    if singular {
        None
    } else {
        Some(lu)
    }
}

pub(crate) fn checked_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    checked_lu(m)?.try_inverse()
}

pub(crate) fn checked_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    checked_lu(m)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(checked_inverse(&m).is_none());
        assert!(checked_inverse(&DMatrix::zeros(3, 3)).is_none());
    }

    #[test]
    fn inverts_regular() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let inv = checked_inverse(&m).unwrap();
        assert!((inv * &m - DMatrix::identity(2, 2)).norm() < 1e-15);
    }
}
