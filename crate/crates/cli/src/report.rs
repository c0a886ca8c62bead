use std::io::Write;

use acr::solver::SolveReport;
use serde::Serialize;

use crate::config::RunConfig;

/// The record written for one solve.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub problem: String,
    pub n: usize,
    pub unknowns: usize,
    pub eps: f64,
    pub param: String,
    pub leaf_size: usize,
    pub cutoff_blocks: usize,
    pub threads: usize,
    pub levels: usize,
    pub reduction_levels: usize,
    pub cutoff_dim: usize,
    pub max_rank: usize,
    /// Largest off-diagonal rank of each level system.
    pub max_rank_per_level: Vec<usize>,
    pub storage_bytes: usize,
    pub lift_ms: f64,
    pub reduce_ms: f64,
    pub direct_ms: f64,
    pub backsub_ms: f64,
    pub residual: f64,
    pub residual_is_relative: bool,
    pub max_residual: f64,
    pub passed: bool,
}

impl RunReport {
    pub fn new(cfg: &RunConfig, report: &SolveReport) -> Self {
        let n = cfg.problem.n;
        RunReport {
            problem: cfg.problem.name().to_string(),
            n,
            unknowns: n * n,
            eps: cfg.eps,
            param: cfg.problem.param.to_string(),
            leaf_size: cfg.leaf_size,
            cutoff_blocks: cfg.cutoff_blocks,
            threads: report.threads,
            levels: report.levels,
            reduction_levels: report.reduction_levels,
            cutoff_dim: report.cutoff_dim,
            max_rank: report.max_rank,
            max_rank_per_level: report
                .rank_profiles
                .iter()
                .map(|p| p.depths.iter().map(|d| d.max).max().unwrap_or(0))
                .collect(),
            storage_bytes: report.storage_bytes,
            lift_ms: report.timings.lift_ms,
            reduce_ms: report.timings.reduce_ms,
            direct_ms: report.timings.direct_ms,
            backsub_ms: report.timings.backsub_ms,
            residual: report.residual,
            residual_is_relative: report.residual_is_relative,
            max_residual: cfg.max_residual,
            passed: report.residual <= cfg.max_residual,
        }
    }

    pub fn total_ms(&self) -> f64 {
        self.lift_ms + self.reduce_ms + self.direct_ms + self.backsub_ms
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    problem: &'a str,
    n: usize,
    #[serde(rename = "N")]
    unknowns: usize,
    eps: f64,
    param: &'a str,
    levels: usize,
    max_rank: usize,
    storage_bytes: usize,
    reduce_ms: f64,
    backsub_ms: f64,
    residual: f64,
}

impl<'a> From<&'a RunReport> for CsvRow<'a> {
    fn from(r: &'a RunReport) -> Self {
        CsvRow {
            problem: &r.problem,
            n: r.n,
            unknowns: r.unknowns,
            eps: r.eps,
            param: &r.param,
            levels: r.levels,
            max_rank: r.max_rank,
            storage_bytes: r.storage_bytes,
            reduce_ms: r.reduce_ms,
            backsub_ms: r.backsub_ms,
            residual: r.residual,
        }
    }
}

/// Writes the fixed-schema CSV table, header first.
pub fn write_csv<W: Write>(w: W, rows: &[RunReport]) -> std::io::Result<W> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record([
            "problem",
            "n",
            "N",
            "eps",
            "param",
            "levels",
            "max_rank",
            "storage_bytes",
            "reduce_ms",
            "backsub_ms",
            "residual",
        ])?;
    }
    for r in rows {
        out.serialize(CsvRow::from(r))?;
    }
    out.into_inner().map_err(|e| e.into_error())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fitted_exponent(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|v| v.is_nan() || *v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            problem: "poisson".into(),
            n: 4,
            unknowns: 16,
            eps: 1e-8,
            param: "kappa=const:1".into(),
            leaf_size: 32,
            cutoff_blocks: 1,
            threads: 1,
            levels: 3,
            reduction_levels: 2,
            cutoff_dim: 4,
            max_rank: 1,
            max_rank_per_level: vec![1, 1, 0],
            storage_bytes: 1024,
            lift_ms: 0.1,
            reduce_ms: 0.5,
            direct_ms: 0.1,
            backsub_ms: 0.25,
            residual: 1e-15,
            residual_is_relative: true,
            max_residual: 1e-6,
            passed: true,
        }
    }

    #[test]
    fn csv_header_is_stable() {
        let bytes = write_csv(Vec::new(), &[sample()]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some(
                "problem,n,N,eps,param,levels,max_rank,storage_bytes,reduce_ms,backsub_ms,residual"
            )
        );
        assert!(lines.next().unwrap().starts_with("poisson,4,16,"));
        let empty = String::from_utf8(write_csv(Vec::new(), &[]).unwrap()).unwrap();
        assert_eq!(empty.lines().next(), text.lines().next());
    }

    #[test]
    fn exponent_of_a_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.25)).collect();
        assert!((fitted_exponent(&x, &y).unwrap() - 1.25).abs() < 1e-12);
        assert_eq!(fitted_exponent(&[1.0], &[1.0]), None);
        assert_eq!(fitted_exponent(&[1.0, 2.0], &[0.0, 1.0]), None);
    }

    #[test]
    fn total_adds_phases() {
        assert!((sample().total_ms() - 0.95).abs() < 1e-12);
    }
}
