//! Second-order finite-difference model problems on the unit square with
//! homogeneous Dirichlet boundary conditions.
//!
//! Unknowns are ordered lexicographically with `x` fastest: block `j` is the
//! horizontal grid line `y = (j+1)h` and entry `i` within it is
//! `x = (i+1)h`. With this ordering the 5-point stencil gives tridiagonal
//! diagonal blocks and diagonal coupling blocks.

mod sparse;
mod system;

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

pub use sparse::CooMatrix;
pub use system::{BlockTridiagSystem, TridiagonalBlock};

use crate::error::{AcrError, Result};

/// Uniform interior grid with `n` points per dimension, `h = 1/(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    n: usize,
    h: f64,
}

impl Grid2D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(AcrError::invalid(format!(
                "grid needs at least 2 interior points per dimension, got {n}"
            )));
        }
        Ok(Grid2D {
            n,
            h: 1.0 / (n as f64 + 1.0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of unknowns `n²`.
    pub fn unknowns(&self) -> usize {
        self.n * self.n
    }

    /// Coordinate of grid index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h
    }

    /// Samples `f(x, y)` at the interior points in block-row-major order.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.unknowns());
        for j in 0..self.n {
            for i in 0..self.n {
                out.push(f(self.coord(i), self.coord(j)));
            }
        }
        out
    }
}

/// Diffusion coefficient `κ(x, y)`.
#[derive(Clone)]
pub enum CoefficientField {
    Constant(f64),
    /// `cells × cells` checkerboard on the unit square alternating between
    /// 1 and `contrast`, starting with 1 in the cell at the origin.
    Checkerboard {
        cells: usize,
        contrast: f64,
    },
    /// Piecewise-constant table; `values[r * cells + c]` covers the cell in
    /// row `r` (y direction) and column `c` (x direction).
    Piecewise {
        cells: usize,
        values: Vec<f64>,
    },
    Function(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientField::Constant(c) => write!(f, "Constant({c})"),
            CoefficientField::Checkerboard { cells, contrast } => {
                write!(f, "Checkerboard {{ cells: {cells}, contrast: {contrast} }}")
            }
            CoefficientField::Piecewise { cells, .. } => {
                write!(f, "Piecewise {{ cells: {cells} }}")
            }
            CoefficientField::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl Default for CoefficientField {
    fn default() -> Self {
        CoefficientField::Constant(1.0)
    }
}

fn cell_index(t: f64, cells: usize) -> usize {
    ((t * cells as f64).floor().max(0.0) as usize).min(cells - 1)
}

impl CoefficientField {
    /// The high-contrast stress field, κ ∈ {1, 10³} on a 4×4 board.
    pub fn checkerboard() -> Self {
        CoefficientField::Checkerboard {
            cells: 4,
            contrast: 1e3,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            CoefficientField::Constant(c) => *c,
            CoefficientField::Checkerboard { cells, contrast } => {
                let (cx, cy) = (cell_index(x, *cells), cell_index(y, *cells));
                if (cx + cy) % 2 == 0 {
                    1.0
                } else {
                    *contrast
                }
            }
            CoefficientField::Piecewise { cells, values } => {
                values[cell_index(y, *cells) * cells + cell_index(x, *cells)]
            }
            CoefficientField::Function(f) => f(x, y),
        }
    }

    /// Reads a square whitespace-separated table of κ values; line `r` holds
    /// row `r` of cells counted from `y = 0`.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| AcrError::Io {
            path: display.clone(),
            source,
        })?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| tok.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| AcrError::Parse {
                    path: display.clone(),
                    line: lineno + 1,
                    message: e.to_string(),
                })?;
            rows.push(row);
        }
        let cells = rows.len();
        if cells == 0 || rows.iter().any(|r| r.len() != cells) {
            return Err(AcrError::Parse {
                path: display,
                line: 0,
                message: "kappa table must be a non-empty square grid".into(),
            });
        }
        Ok(CoefficientField::Piecewise {
            cells,
            values: rows.into_iter().flatten().collect(),
        })
    }
}

/// `f(x, y) = 100·exp(−100·((x−½)² + (y−½)²))` at the interior points.
pub fn gaussian_rhs(grid: &Grid2D) -> Vec<f64> {
    grid.sample(gaussian)
}

pub fn gaussian(x: f64, y: f64) -> f64 {
    100.0 * (-100.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp()
}

/// Builds a system from a per-node stencil `(west, east, south, north, centre)`.
fn assemble(
    grid: &Grid2D,
    stencil: impl Fn(usize, usize) -> [f64; 5],
) -> Result<BlockTridiagSystem> {
    let n = grid.n();
    let mut diag = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n - 1);
    let mut upper = Vec::with_capacity(n - 1);
    for j in 0..n {
        let mut block = TridiagonalBlock {
            sub: vec![0.0; n - 1],
            diag: vec![0.0; n],
            sup: vec![0.0; n - 1],
        };
        let mut south = vec![0.0; n];
        let mut north = vec![0.0; n];
        for i in 0..n {
            let [w, e, s, nn, c] = stencil(i, j);
            block.diag[i] = c;
            if i > 0 {
                block.sub[i - 1] = w;
            }
            if i + 1 < n {
                block.sup[i] = e;
            }
            south[i] = s;
            north[i] = nn;
        }
        diag.push(block);
        if j > 0 {
            lower.push(south);
        }
        if j + 1 < n {
            upper.push(north);
        }
    }
    BlockTridiagSystem::new(diag, lower, upper, gaussian_rhs(grid))
}

/// `−∇·κ∇u = f` with the conservative 5-point stencil; each edge uses κ at
/// the edge midpoint, so the matrix is symmetric for any positive κ.
pub fn poisson2d(grid: &Grid2D, kappa: &CoefficientField) -> Result<BlockTridiagSystem> {
    let n = grid.n();
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let sample = |x: f64, y: f64| -> Result<f64> {
        let v = kappa.eval(x, y);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(AcrError::NonPositiveKappa { x, y, value: v })
        }
    };
    // Edge coefficients: horizontal edges (i-½ .. i+½ along x) and vertical ones.
    let mut kx = vec![0.0; (n + 1) * n]; // edge west of (i, j) for i in 0..=n
    let mut ky = vec![0.0; n * (n + 1)]; // edge south of (i, j) for j in 0..=n
    for j in 0..n {
        for i in 0..=n {
            kx[j * (n + 1) + i] = sample((i as f64 + 0.5) * h, grid.coord(j))?;
        }
    }
    for j in 0..=n {
        for i in 0..n {
            ky[j * n + i] = sample(grid.coord(i), (j as f64 + 0.5) * h)?;
        }
    }
    assemble(grid, |i, j| {
        let kw = kx[j * (n + 1) + i];
        let ke = kx[j * (n + 1) + i + 1];
        let ks = ky[j * n + i];
        let kn = ky[(j + 1) * n + i];
        [
            -kw * inv_h2,
            -ke * inv_h2,
            -ks * inv_h2,
            -kn * inv_h2,
            (kw + ke + ks + kn) * inv_h2,
        ]
    })
}

/// `∇²u + k²u = f`, sign as written: centre `−4/h² + k²`, neighbours `+1/h²`.
pub fn helmholtz2d(grid: &Grid2D, k: f64) -> Result<BlockTridiagSystem> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(AcrError::invalid(format!(
            "wavenumber must be non-negative, got {k}"
        )));
    }
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let centre = -4.0 * inv_h2 + k * k;
    assemble(grid, |_, _| [inv_h2, inv_h2, inv_h2, inv_h2, centre])
}

/// Recirculating velocity field `b = (cos 8πx, sin 8πy)`.
pub fn recirculating_flow(x: f64, y: f64) -> (f64, f64) {
    ((8.0 * PI * x).cos(), (8.0 * PI * y).sin())
}

/// `−∇²u + α·b·∇u = f` with centered differences for the convection term;
/// `b` is evaluated at the node.
pub fn convdiff2d(grid: &Grid2D, alpha: f64) -> Result<BlockTridiagSystem> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(AcrError::invalid(format!(
            "alpha must be non-negative, got {alpha}"
        )));
    }
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let c = alpha / (2.0 * h);
    assemble(grid, |i, j| {
        let (bx, by) = recirculating_flow(grid.coord(i), grid.coord(j));
        [
            -inv_h2 - c * bx,
            -inv_h2 + c * bx,
            -inv_h2 - c * by,
            -inv_h2 + c * by,
            4.0 * inv_h2,
        ]
    })
}

/// Which model operator, with its single parameter.
#[derive(Debug, Clone)]
pub enum ModelProblem {
    Poisson(CoefficientField),
    Helmholtz { k: f64 },
    ConvDiff { alpha: f64 },
}

impl ModelProblem {
    pub fn build(&self, grid: &Grid2D) -> Result<BlockTridiagSystem> {
        match self {
            ModelProblem::Poisson(kappa) => poisson2d(grid, kappa),
            ModelProblem::Helmholtz { k } => helmholtz2d(grid, *k),
            ModelProblem::ConvDiff { alpha } => convdiff2d(grid, *alpha),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelProblem::Poisson(_) => "poisson",
            ModelProblem::Helmholtz { .. } => "helmholtz",
            ModelProblem::ConvDiff { .. } => "convdiff",
        }
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};

    use super::*;
    use crate::oracles::{dense_lu_solve, spectrum_small};

    fn dense(sys: &BlockTridiagSystem) -> DMatrix<f64> {
        sys.assemble_full().to_dense()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid2D::new(1).is_err());
        let g = Grid2D::new(3).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.unknowns(), 9);
        assert_eq!(g.coord(0), 0.25);
    }

    #[test]
    fn constant_poisson_blocks() {
        let g = Grid2D::new(3).unwrap();
        let s = poisson2d(&g, &CoefficientField::Constant(1.0)).unwrap();
        for d in s.diag_blocks() {
            assert_eq!(d.diag, vec![64.0; 3]);
            assert_eq!(d.sub, vec![-16.0; 2]);
            assert_eq!(d.sup, vec![-16.0; 2]);
        }
        for c in s.lower_blocks().iter().chain(s.upper_blocks()) {
            assert_eq!(c, &vec![-16.0; 3]);
        }
        assert_eq!(s.assemble_full().nnz(), 33);
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let g = Grid2D::new(4).unwrap();
        let s = poisson2d(&g, &CoefficientField::default())
            .unwrap()
            .with_rhs(vec![0.0; 16])
            .unwrap();
        let u = dense_lu_solve(&dense(&s), &DVector::from_column_slice(s.rhs())).unwrap();
        assert_eq!(u.amax(), 0.0);
    }

    #[test]
    fn rejects_non_positive_kappa() {
        let g = Grid2D::new(3).unwrap();
        let bad = CoefficientField::Function(Arc::new(|x, _| x - 0.5));
        assert!(matches!(
            poisson2d(&g, &bad),
            Err(AcrError::NonPositiveKappa { .. })
        ));
        assert!(helmholtz2d(&g, -1.0).is_err());
        assert!(convdiff2d(&g, -1.0).is_err());
    }

    #[test]
    fn variable_kappa_poisson_is_symmetric() {
        let g = Grid2D::new(9).unwrap();
        for kappa in [
            CoefficientField::checkerboard(),
            CoefficientField::Function(Arc::new(|x, y| 1.0 + x * x + (3.0 * y).sin().abs())),
        ] {
            let a = dense(&poisson2d(&g, &kappa).unwrap());
            assert_eq!(a, a.transpose());
        }
    }

    #[test]
    fn interior_row_sums_vanish() {
        let g = Grid2D::new(7).unwrap();
        let kappa = CoefficientField::Function(Arc::new(|x, y| 2.0 + x * y));
        let a = dense(&poisson2d(&g, &kappa).unwrap());
        let row = 3 * 7 + 3;
        let sum: f64 = a.row(row).iter().sum();
        assert!(sum.abs() < 1e-10 * a[(row, row)]);
    }

    #[test]
    fn helmholtz_relations() {
        let g = Grid2D::new(5).unwrap();
        let p = dense(&poisson2d(&g, &CoefficientField::default()).unwrap());
        let h0 = dense(&helmholtz2d(&g, 0.0).unwrap());
        assert_eq!(h0, -p);
        let k = 3.7;
        let hk = dense(&helmholtz2d(&g, k).unwrap());
        assert!((hk - &h0 - DMatrix::identity(25, 25) * (k * k)).amax() < 1e-12);
    }

    #[test]
    fn helmholtz_becomes_indefinite() {
        let g = Grid2D::new(15).unwrap();
        let a = dense(&helmholtz2d(&g, 2.0 * PI).unwrap());
        assert_eq!(a, a.transpose());
        let ev = spectrum_small(&a).unwrap();
        assert!(ev.first().unwrap() < &0.0 && ev.last().unwrap() > &0.0);
        // below the first Dirichlet eigenvalue the operator is negative definite
        let a = dense(&helmholtz2d(&g, 1.0).unwrap());
        assert!(spectrum_small(&a).unwrap().iter().all(|&l| l < 0.0));
    }

    #[test]
    fn helmholtz_below_resonance_zero_rhs() {
        let g = Grid2D::new(7).unwrap();
        let s = helmholtz2d(&g, 1.0)
            .unwrap()
            .with_rhs(vec![0.0; 49])
            .unwrap();
        let u = dense_lu_solve(&dense(&s), &DVector::from_column_slice(s.rhs())).unwrap();
        assert_eq!(u.amax(), 0.0);
    }

    #[test]
    fn convdiff_structure() {
        let g = Grid2D::new(6).unwrap();
        let p = dense(&poisson2d(&g, &CoefficientField::default()).unwrap());
        let c0 = dense(&convdiff2d(&g, 0.0).unwrap());
        assert_eq!(c0, p);
        let c1 = dense(&convdiff2d(&g, 1.5).unwrap());
        let c2 = dense(&convdiff2d(&g, 3.0).unwrap());
        let (d1, d2) = (&c1 - &c0, &c2 - &c0);
        assert!((&d2 - &d1 * 2.0).amax() < 1e-9);
        // the convection part is skew: its symmetric part vanishes up to the
        // variation of b between neighbouring nodes, and A ≠ Aᵀ
        assert!((&c1 - c1.transpose()).norm() > 0.0);
        let skew1 = (&c1 - c1.transpose()).norm();
        let skew2 = (&c2 - c2.transpose()).norm();
        assert!((skew2 / skew1 - 2.0).abs() < 1e-12);
        // the diagonal is untouched by convection
        for i in 0..36 {
            assert_eq!(d1[(i, i)], 0.0);
        }
    }

    #[test]
    fn gaussian_values() {
        let g = Grid2D::new(3).unwrap();
        let f = gaussian_rhs(&g);
        assert_eq!(f[4], 100.0); // (0.5, 0.5)
        assert!((f[0] - 100.0 * (-12.5f64).exp()).abs() < 1e-15);
        let g = Grid2D::new(8).unwrap();
        let f = gaussian_rhs(&g);
        for j in 0..8 {
            for i in 0..8 {
                let mirrored = f[(7 - j) * 8 + (7 - i)];
                assert!((f[j * 8 + i] - mirrored).abs() <= 1e-12 * f[j * 8 + i]);
            }
        }
    }

    fn manufactured_error(n: usize, problem: &ModelProblem) -> f64 {
        let g = Grid2D::new(n).unwrap();
        let exact = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
        let forcing = |x: f64, y: f64| {
            let lap = 2.0 * PI * PI * exact(x, y);
            match problem {
                ModelProblem::ConvDiff { alpha } => {
                    let (bx, by) = recirculating_flow(x, y);
                    let ux = PI * (PI * x).cos() * (PI * y).sin();
                    let uy = PI * (PI * x).sin() * (PI * y).cos();
                    lap + alpha * (bx * ux + by * uy)
                }
                _ => lap,
            }
        };
        let s = problem
            .build(&g)
            .unwrap()
            .with_rhs(g.sample(forcing))
            .unwrap();
        let u = dense_lu_solve(&dense(&s), &DVector::from_column_slice(s.rhs())).unwrap();
        let ue = DVector::from_vec(g.sample(exact));
        (u - ue).amax()
    }

    #[test]
    fn poisson_second_order_convergence() {
        let p = ModelProblem::Poisson(CoefficientField::default());
        let ratio = manufactured_error(7, &p) / manufactured_error(15, &p);
        assert!((3.6..=4.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn kappa_table_file() {
        let dir = std::env::temp_dir().join(format!("acr-kappa-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("kappa.txt");
        std::fs::write(&path, "# two by two\n1 2\n3 4\n").unwrap();
        let k = CoefficientField::from_table_file(&path).unwrap();
        assert_eq!(k.eval(0.1, 0.1), 1.0);
        assert_eq!(k.eval(0.9, 0.1), 2.0);
        assert_eq!(k.eval(0.1, 0.9), 3.0);
        std::fs::write(&path, "1 2\n3\n").unwrap();
        assert!(CoefficientField::from_table_file(&path).is_err());
        assert!(CoefficientField::from_table_file(&dir.join("missing.txt")).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
