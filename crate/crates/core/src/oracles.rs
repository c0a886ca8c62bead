//! Ground truth for the solvers: dense LU, exact residuals and small
//! symmetric spectra. These deliberately avoid every hierarchical code path.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dense::checked_solve;
use crate::error::{AcrError, Result};
use crate::problems::BlockTridiagSystem;

/// Largest dimension accepted by [`spectrum_small`].
pub const SPECTRUM_MAX_DIM: usize = 4096;

/// Dense LU with partial pivoting.
pub fn dense_lu_solve(a: &DMatrix<f64>, f: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != a.ncols() {
        return Err(AcrError::invalid(format!(
            "dense_lu_solve needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if f.len() != a.nrows() {
        return Err(AcrError::DimensionMismatch {
            context: "dense_lu_solve",
            expected: a.nrows(),
            actual: f.len(),
        });
    }
    checked_solve(a, f).ok_or(AcrError::SingularMatrix { dim: a.nrows() })
}

/// Assembles the system and solves it with dense LU.
pub fn dense_lu_solve_system(sys: &BlockTridiagSystem) -> Result<DVector<f64>> {
    dense_lu_solve(
        &sys.assemble_full().to_dense(),
        &DVector::from_column_slice(sys.rhs()),
    )
}

/// `‖Au − f‖₂ / ‖f‖₂`, or the absolute residual when `f = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    /// False when the right-hand side vanished and `value` is absolute.
    pub relative: bool,
}

pub fn relative_residual(sys: &BlockTridiagSystem, u: &[f64]) -> Result<Residual> {
    let au = sys.apply(u)?;
    let f = DVector::from_column_slice(sys.rhs());
    let abs = (au - &f).norm();
    let fnorm = f.norm();
    Ok(if fnorm > 0.0 {
        Residual {
            value: abs / fnorm,
            relative: true,
        }
    } else {
        Residual {
            value: abs,
            relative: false,
        }
    })
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn spectrum_small(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(AcrError::invalid("spectrum_small needs a square matrix"));
    }
    if n > SPECTRUM_MAX_DIM {
        return Err(AcrError::invalid(format!(
            "spectrum_small is limited to dimension {SPECTRUM_MAX_DIM}, got {n}"
        )));
    }
    let asymmetry = (a - a.transpose()).amax();
    if asymmetry > 1e-12 * a.amax() {
        return Err(AcrError::NotSymmetric { asymmetry });
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `‖a − b‖₂ / ‖b‖₂` (absolute when `b = 0`).
pub fn relative_difference(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if norm > 0.0 {
        diff / norm
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{poisson2d, CoefficientField, Grid2D};

    #[test]
    fn lu_small_cases() {
        let f = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(dense_lu_solve(&DMatrix::identity(3, 3), &f).unwrap(), f);
        let u = dense_lu_solve(
            &DMatrix::from_element(1, 1, 2.0),
            &DVector::from_element(1, 4.0),
        )
        .unwrap();
        assert_eq!(u[0], 2.0);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let u = dense_lu_solve(&a, &DVector::from_vec(vec![3.0, 3.0])).unwrap();
        assert!((u - DVector::from_vec(vec![1.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn lu_rejects_singular_and_bad_shapes() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            dense_lu_solve(&a, &DVector::from_element(2, 1.0)),
            Err(AcrError::SingularMatrix { dim: 2 })
        ));
        assert!(dense_lu_solve(&DMatrix::zeros(2, 3), &DVector::zeros(2)).is_err());
        assert!(dense_lu_solve(&DMatrix::identity(2, 2), &DVector::zeros(3)).is_err());
    }

    #[test]
    fn residual_cases() {
        let g = Grid2D::new(5).unwrap();
        let sys = poisson2d(&g, &CoefficientField::default()).unwrap();
        let u = dense_lu_solve_system(&sys).unwrap();
        assert!(relative_residual(&sys, u.as_slice()).unwrap().value <= 1e-12);
        let zero = vec![0.0; sys.dim()];
        let r = relative_residual(&sys, &zero).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(r.relative);

        // residual of u + δ is ‖Aδ‖/‖f‖
        let delta: Vec<f64> = (0..sys.dim()).map(|i| 1e-6 * (i as f64).cos()).collect();
        let perturbed: Vec<f64> = u.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let r = relative_residual(&sys, &perturbed).unwrap().value;
        let expected =
            sys.apply(&delta).unwrap().norm() / DVector::from_column_slice(sys.rhs()).norm();
        assert!((r - expected).abs() <= 1e-6 * expected);

        let homogeneous = sys.clone().with_rhs(vec![0.0; sys.dim()]).unwrap();
        let r = relative_residual(&homogeneous, &delta).unwrap();
        assert!(!r.relative);
        assert!(relative_residual(&sys, &[0.0; 3]).is_err());
    }

    #[test]
    fn spectrum_cases() {
        let ev =
            spectrum_small(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))).unwrap();
        assert_eq!(ev, vec![-1.0, 1.0]);

        // 1D Dirichlet Laplacian, n = 3, h = 1/4: 16·(2 − 2cos(kπ/4))
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[32.0, -16.0, 0.0, -16.0, 32.0, -16.0, 0.0, -16.0, 32.0],
        );
        let ev = spectrum_small(&a).unwrap();
        for (k, l) in ev.iter().enumerate() {
            let exact = 16.0 * (2.0 - 2.0 * ((k as f64 + 1.0) * std::f64::consts::PI / 4.0).cos());
            assert!((l - exact).abs() < 1e-12);
        }

        let nonsym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            spectrum_small(&nonsym),
            Err(AcrError::NotSymmetric { .. })
        ));
    }
}
