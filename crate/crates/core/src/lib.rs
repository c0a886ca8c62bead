//! Fast direct solver for block tridiagonal systems whose blocks are
//! compressible in hierarchical low-rank form.
//!
//! Block cyclic reduction eliminates half of the row-blocks per level through
//! Schur complements. Here every block is a HODLR matrix and every block
//! operation uses truncated hierarchical arithmetic, which brings the cost
//! of a 2D elliptic solve down to `O(N log² N)` with `O(N log N)` memory.
//!
//! ```
//! use acr::problems::{poisson2d, CoefficientField, Grid2D};
//! use acr::solver::{acr_solve, AcrOptions};
//!
//! let grid = Grid2D::new(32).unwrap();
//! let sys = poisson2d(&grid, &CoefficientField::Constant(1.0)).unwrap();
//! let (u, report) = acr_solve(&sys, &AcrOptions::new(1e-8).unwrap()).unwrap();
//! assert_eq!(u.len(), 32 * 32);
//! assert!(report.residual < 1e-6);
//! ```
//!
//! Module map:
//!
//! - [`hodlr`]: cluster trees, HODLR storage, compression and truncation.
//! - [`algebra`]: HODLR matvec, add, multiply, invert.
//! - [`problems`]: finite-difference model problems.
//! - [`solver`]: cyclic reduction over HODLR or dense blocks.
//! - [`oracles`]: dense reference solvers and residuals.
//! - [`mm`]: Matrix Market export/import.
//!
//! A longer walkthrough lives in the `book/` directory of the repository; its
//! code listings are compiled and run as doc-tests of this crate.

pub mod algebra;
mod dense;
pub mod error;
pub mod hodlr;
pub mod mm;
pub mod oracles;
pub mod problems;
pub mod solver;

pub use error::{AcrError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/hodlr.md")]
    mod hodlr {}
    #[doc = include_str!("../../../book/src/arithmetic.md")]
    mod arithmetic {}
    #[doc = include_str!("../../../book/src/cyclic_reduction.md")]
    mod cyclic_reduction {}
    #[doc = include_str!("../../../book/src/model_problems.md")]
    mod model_problems {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
