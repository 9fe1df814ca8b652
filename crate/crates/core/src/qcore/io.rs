//! Plain-text matrix files.
//!
//! ```text
//! dim=4
//! 0 0 0.5 0
//! 0 3 0.5 0
//! 3 0 0.5 0
//! 3 3 0.5 0
//! ```
//!
//! One `<row> <col> <re> <im>` line per entry, zero-based indices; omitted entries
//! are zero.

use std::fmt::Write as _;
use std::path::Path;

use super::matrix::{ComplexMatrix, C64, ZERO};
use super::state::{DensityMatrix, PartyLabel};
use crate::error::{Error, Result};

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (first_no, first) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty matrix file".into() })?;
    let dim: usize = first
        .trim()
        .strip_prefix("dim=")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse { line: first_no + 1, msg: "expected `dim=<d>`".into() })?;
    let mut m = ComplexMatrix::zeros(dim, dim);
    let mut seen = vec![false; dim * dim];
    for (no, line) in lines {
        let line_no = no + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse { line: line_no, msg: "expected `<row> <col> <re> <im>`".into() });
        }
        let parse_idx = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .ok()
                .filter(|&i| i < dim)
                .ok_or_else(|| Error::Parse { line: line_no, msg: format!("index `{s}` out of range for dim {dim}") })
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse { line: line_no, msg: format!("`{s}` is not a finite number") })
        };
        let (r, c) = (parse_idx(fields[0])?, parse_idx(fields[1])?);
        if std::mem::replace(&mut seen[r * dim + c], true) {
            return Err(Error::Parse { line: line_no, msg: format!("entry ({r}, {c}) given twice") });
        }
        m[(r, c)] = C64::new(parse_f(fields[2])?, parse_f(fields[3])?);
    }
    Ok(m)
}

/// Parse and validate a density matrix; parties are numbered `1..=log2(dim)`.
pub fn parse_density_matrix(text: &str) -> Result<DensityMatrix> {
    let m = parse_matrix(text)?;
    let dim = m.rows();
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Shape(format!("dimension {dim} is not a power of two")));
    }
    let n = dim.trailing_zeros() as usize;
    DensityMatrix::new(m, (1..=n).collect::<Vec<PartyLabel>>())
}

pub fn load_density_matrix(path: &Path) -> Result<DensityMatrix> {
    parse_density_matrix(&std::fs::read_to_string(path)?)
}

/// Every nonzero entry, 17 significant digits.
pub fn format_matrix(m: &ComplexMatrix) -> String {
    let mut out = format!("dim={}\n", m.rows());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let z = m[(r, c)];
            if z != ZERO {
                let _ = writeln!(out, "{r} {c} {:.16e} {:.16e}", z.re, z.im);
            }
        }
    }
    out
}

pub fn save_matrix(path: &Path, m: &ComplexMatrix) -> Result<()> {
    std::fs::write(path, format_matrix(m))?;
    Ok(())
}
