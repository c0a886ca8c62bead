mod common;

use acr::hodlr::Tolerance;
use acr::oracles::{dense_lu_solve_system, relative_difference, relative_residual};
use acr::problems::{poisson2d, CoefficientField, Grid2D, ModelProblem};
use acr::solver::{acr_solve, dense_bcr_solve, AcrOptions, InversionSchedule};
use common::{loglog_slope, manufactured_error, oracle_suite};

#[test]
fn three_solvers_agree_on_small_grids() {
    for n in [8, 16] {
        for (name, problem) in oracle_suite() {
            let sys = problem.build(&Grid2D::new(n).unwrap()).unwrap();
            let lu = dense_lu_solve_system(&sys).unwrap();
            let bcr = dense_bcr_solve(&sys).unwrap();
            let (acr, report) =
                acr_solve(&sys, &AcrOptions::new(1e-12).unwrap().leaf_size(4)).unwrap();
            let lu = lu.as_slice();
            for (pair, d) in [
                ("acr/lu", relative_difference(&acr, lu)),
                ("bcr/lu", relative_difference(&bcr, lu)),
                ("acr/bcr", relative_difference(&acr, &bcr)),
            ] {
                assert!(d <= 1e-8, "{name} n={n} {pair}: {d:e}");
            }
            assert!(report.residual >= 0.0 && report.levels >= 1);
        }
    }
}

#[test]
fn odd_block_counts_and_cutoffs() {
    let sys = poisson2d(&Grid2D::new(13).unwrap(), &CoefficientField::checkerboard()).unwrap();
    let lu = dense_lu_solve_system(&sys).unwrap();
    for cutoff in [1, 2, 3, 5, 13] {
        let opts = AcrOptions::new(1e-12)
            .unwrap()
            .leaf_size(3)
            .cutoff_blocks(cutoff);
        let (u, report) = acr_solve(&sys, &opts).unwrap();
        assert!(
            relative_difference(&u, lu.as_slice()) <= 1e-8,
            "cutoff {cutoff}"
        );
        assert!(report.cutoff_dim <= cutoff * 13);
    }
}

#[test]
fn eps_controls_residual() {
    let sys = poisson2d(&Grid2D::new(32).unwrap(), &CoefficientField::Constant(1.0)).unwrap();
    let mut previous = f64::INFINITY;
    for eps in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
        let (_, report) = acr_solve(&sys, &AcrOptions::new(eps).unwrap().leaf_size(8)).unwrap();
        assert!(report.residual <= 2.0 * previous, "eps {eps:e}");
        previous = report.residual;
    }
    assert!(previous <= 1e-8);
}

#[test]
fn report_is_consistent() {
    let sys = poisson2d(&Grid2D::new(32).unwrap(), &CoefficientField::Constant(1.0)).unwrap();
    let (u, report) = acr_solve(&sys, &AcrOptions::new(1e-8).unwrap().leaf_size(8)).unwrap();
    let r = relative_residual(&sys, &u).unwrap();
    assert_eq!(report.residual, r.value);
    assert_eq!(report.rank_profiles.len(), report.levels);
    assert_eq!(report.reduction_levels, 5);
    assert_eq!(report.cutoff_dim, 32);
    assert!(report.storage_bytes > 0);
    let top = report
        .rank_profiles
        .iter()
        .map(|p| p.max_rank())
        .max()
        .unwrap();
    assert_eq!(top, report.max_rank);
    // lifted blocks are rank 1, later levels grow but stay small
    assert_eq!(report.rank_profiles[0].max_rank(), 1);
    assert!(report.max_rank < 16);
}

#[test]
fn results_are_deterministic_across_schedules() {
    let sys = ModelProblem::ConvDiff { alpha: 10.0 }
        .build(&Grid2D::new(16).unwrap())
        .unwrap();
    let base = AcrOptions::new(1e-8).unwrap().leaf_size(4);
    let (u0, _) = acr_solve(&sys, &base.schedule(InversionSchedule::Sequential)).unwrap();
    for s in [
        InversionSchedule::Parallel,
        InversionSchedule::Reversed,
        InversionSchedule::Shuffled { seed: 11 },
    ] {
        let (u, _) = acr_solve(&sys, &base.schedule(s)).unwrap();
        assert!(relative_difference(&u, &u0) <= 1e-12);
    }
}

#[test]
fn rank_cap_limits_ranks() {
    let sys = poisson2d(&Grid2D::new(32).unwrap(), &CoefficientField::Constant(1.0)).unwrap();
    let tol = Tolerance::new(1e-12).unwrap().with_max_rank(2).unwrap();
    let opts = AcrOptions {
        tol,
        ..AcrOptions::new(1e-12).unwrap().leaf_size(4)
    };
    let (_, report) = acr_solve(&sys, &opts).unwrap();
    assert!(report.max_rank <= 2);
}

#[test]
fn singular_system_is_reported() {
    // Helmholtz at the lowest Dirichlet eigenvalue of the discrete Laplacian
    let n = 7;
    let h = 1.0 / (n as f64 + 1.0);
    let lambda = 2.0 * (4.0 / (h * h)) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    let sys = ModelProblem::Helmholtz { k: lambda.sqrt() }
        .build(&Grid2D::new(n).unwrap())
        .unwrap();
    match acr_solve(&sys, &AcrOptions::new(1e-12).unwrap().leaf_size(2)) {
        Err(e) => assert!(e.is_singular()),
        Ok((_, report)) => assert!(
            report.residual > 1e-6,
            "resonant system solved to {:e}",
            report.residual
        ),
    }
}

#[test]
fn all_operators_converge_at_second_order() {
    let problems = [
        ModelProblem::Poisson(CoefficientField::Constant(1.0)),
        ModelProblem::Helmholtz { k: 2.0 },
        ModelProblem::ConvDiff { alpha: 1.0 },
    ];
    for p in &problems {
        for n in [7, 15] {
            let ratio = manufactured_error(p, n) / manufactured_error(p, 2 * n + 1);
            assert!(
                (3.5..=4.5).contains(&ratio),
                "{} n={n}: ratio {ratio}",
                p.name()
            );
        }
    }
}

#[test]
fn slope_helper_recovers_exponent() {
    let x = [1.0, 2.0, 4.0, 8.0];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.25)).collect();
    assert!((loglog_slope(&x, &y) - 1.25).abs() < 1e-12);
}

#[test]
fn variable_coefficient_poisson_converges_at_second_order() {
    use std::f64::consts::PI;
    // κ = 1 + xy, u = sin πx sin πy: −∇·κ∇u = κ·2π²u − (y·u_x + x·u_y)
    let kappa = CoefficientField::Function(std::sync::Arc::new(|x, y| 1.0 + x * y));
    let error = |n: usize| {
        let grid = Grid2D::new(n).unwrap();
        let f = grid.sample(|x, y| {
            let (sx, cx, sy, cy) = (
                (PI * x).sin(),
                (PI * x).cos(),
                (PI * y).sin(),
                (PI * y).cos(),
            );
            (1.0 + x * y) * 2.0 * PI * PI * sx * sy - PI * (y * cx * sy + x * sx * cy)
        });
        let sys = poisson2d(&grid, &kappa).unwrap().with_rhs(f).unwrap();
        let u = dense_lu_solve_system(&sys).unwrap();
        let exact = grid.sample(|x, y| (PI * x).sin() * (PI * y).sin());
        u.iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    for n in [7, 15] {
        let ratio = error(n) / error(2 * n + 1);
        assert!((3.5..=4.5).contains(&ratio), "n={n}: ratio {ratio}");
    }
}
