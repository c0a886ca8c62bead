//! Matrix Market (coordinate, real, general) and plain-text vector I/O.
//!
//! Values are written with Rust's shortest round-trip float formatting, so an
//! export followed by an import reproduces every entry bit for bit.

use std::io::{BufRead, Write};

use crate::error::{AcrError, Result};
use crate::problems::CooMatrix;

pub const MATRIX_MARKET_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Writes 1-based coordinate entries in stored order.
pub fn write_matrix_market<W: Write>(mut w: W, a: &CooMatrix) -> std::io::Result<()> {
    writeln!(w, "{MATRIX_MARKET_HEADER}")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for &(i, j, v) in a.entries() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    w.flush()
}

pub fn read_matrix_market<R: BufRead>(r: R, source: &str) -> Result<CooMatrix> {
    let parse_err = |line: usize, message: String| AcrError::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let header = header.map_err(|e| parse_err(1, e.to_string()))?;
    if !header.trim().eq_ignore_ascii_case(MATRIX_MARKET_HEADER) {
        return Err(parse_err(1, format!("unsupported header `{header}`")));
    }
    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| parse_err(lineno, e.to_string()))
        };
        match size {
            None => size = Some((int(fields[0])?, int(fields[1])?, int(fields[2])?)),
            Some((m, n, _)) => {
                let (i, j) = (int(fields[0])?, int(fields[1])?);
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(parse_err(lineno, format!("index ({i}, {j}) out of range")));
                }
                let v = fields[2]
                    .parse::<f64>()
                    .map_err(|e| parse_err(lineno, e.to_string()))?;
                entries.push((i - 1, j - 1, v));
            }
        }
    }
    let (m, n, nnz) = size.ok_or_else(|| parse_err(2, "missing size line".into()))?;
    if entries.len() != nnz {
        return Err(parse_err(
            0,
            format!("header announces {nnz} entries, found {}", entries.len()),
        ));
    }
    CooMatrix::new(m, n, entries)
}

/// One value per line.
pub fn write_vector<W: Write>(mut w: W, v: &[f64]) -> std::io::Result<()> {
    for x in v {
        writeln!(w, "{x:e}")?;
    }
    w.flush()
}

pub fn read_vector<R: BufRead>(r: R, source: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line.map_err(|e| AcrError::Parse {
            path: source.into(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse::<f64>().map_err(|e| AcrError::Parse {
            path: source.into(),
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{poisson2d, CoefficientField, Grid2D};

    #[test]
    fn poisson_round_trip_is_exact() {
        let g = Grid2D::new(8).unwrap();
        let sys = poisson2d(&g, &CoefficientField::checkerboard()).unwrap();
        let a = sys.assemble_full();
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
        let back = read_matrix_market(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, a);

        let mut vbuf = Vec::new();
        write_vector(&mut vbuf, sys.rhs()).unwrap();
        assert_eq!(read_vector(vbuf.as_slice(), "mem").unwrap(), sys.rhs());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(read_matrix_market("".as_bytes(), "mem").is_err());
        assert!(read_matrix_market(
            "%%MatrixMarket matrix array real general\n".as_bytes(),
            "mem"
        )
        .is_err());
        let bad_index = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(read_matrix_market(bad_index.as_bytes(), "mem").is_err());
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_matrix_market(short.as_bytes(), "mem").is_err());
        assert!(read_vector("1.0\nabc\n".as_bytes(), "mem").is_err());
    }
}
