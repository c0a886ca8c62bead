#![allow(dead_code)]

use std::f64::consts::PI;

use acr::oracles::dense_lu_solve_system;
use acr::problems::{BlockTridiagSystem, CoefficientField, Grid2D, ModelProblem};

/// The four operators used for cross-solver agreement checks.
pub fn oracle_suite() -> Vec<(&'static str, ModelProblem)> {
    vec![
        (
            "poisson const",
            ModelProblem::Poisson(CoefficientField::Constant(1.0)),
        ),
        (
            "poisson checkerboard",
            ModelProblem::Poisson(CoefficientField::checkerboard()),
        ),
        ("helmholtz k=1", ModelProblem::Helmholtz { k: 1.0 }),
        (
            "convdiff alpha=100",
            ModelProblem::ConvDiff { alpha: 100.0 },
        ),
    ]
}

/// `u = sin πx · sin πy` and the source term each operator maps it to.
pub fn manufactured_source(problem: &ModelProblem) -> impl Fn(f64, f64) -> f64 + '_ {
    move |x, y| {
        let u = (PI * x).sin() * (PI * y).sin();
        let lap = -2.0 * PI * PI * u;
        match problem {
            ModelProblem::Poisson(_) => -lap,
            ModelProblem::Helmholtz { k } => lap + k * k * u,
            ModelProblem::ConvDiff { alpha } => {
                let (bx, by) = ((8.0 * PI * x).cos(), (8.0 * PI * y).sin());
                let ux = PI * (PI * x).cos() * (PI * y).sin();
                let uy = PI * (PI * x).sin() * (PI * y).cos();
                -lap + alpha * (bx * ux + by * uy)
            }
        }
    }
}

/// Max-norm discretization error for the manufactured solution, dense LU.
pub fn manufactured_error(problem: &ModelProblem, n: usize) -> f64 {
    let grid = Grid2D::new(n).unwrap();
    let sys: BlockTridiagSystem = problem
        .build(&grid)
        .unwrap()
        .with_rhs(grid.sample(manufactured_source(problem)))
        .unwrap();
    let u = dense_lu_solve_system(&sys).unwrap();
    let exact = grid.sample(|x, y| (PI * x).sin() * (PI * y).sin());
    u.iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
