//! Plain-text matrix and spectrum formats.
//!
//! Matrix: first line is the order `n`, followed by `n` lines holding the
//! lower triangle (line `i` has `i + 1` whitespace-separated decimals).
//! Spectrum: comma-separated positive decimals.

use std::fmt::Write as _;

use super::sym::SymMatrix;
use crate::error::{Error, Result};

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("`{tok}` is not a number") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("`{tok}` is not finite") });
    }
    Ok(v)
}

pub fn parse_matrix(text: &str) -> Result<SymMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (first, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty matrix file".into() })?;
    let n: usize = header
        .parse()
        .map_err(|_| Error::Parse { line: first, message: format!("`{header}` is not a matrix order") })?;
    if n == 0 {
        return Err(Error::Parse { line: first, message: "matrix order must be at least 1".into() });
    }
    let mut packed = Vec::with_capacity(n * (n + 1) / 2);
    for row in 0..n {
        let (line, content) = lines
            .next()
            .ok_or(Error::Parse { line: first + row + 1, message: format!("missing row {row}") })?;
        let vals = content.split_whitespace().map(|t| parse_f64(t, line)).collect::<Result<Vec<_>>>()?;
        if vals.len() != row + 1 {
            return Err(Error::Parse { line, message: format!("row {row} has {} entries, expected {}", vals.len(), row + 1) });
        }
        packed.extend(vals);
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse { line, message: "trailing content after the last row".into() });
    }
    SymMatrix::from_packed(n, packed)
}

pub fn format_matrix(m: &SymMatrix) -> String {
    let mut out = format!("{}\n", m.order());
    for i in 0..m.order() {
        let row: Vec<String> = (0..=i).map(|j| format!("{:.16e}", m.get(i, j))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn parse_spectrum(text: &str) -> Result<Vec<f64>> {
    let vals = text
        .split(',')
        .map(|t| parse_f64(t.trim(), 1))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = vals.iter().find(|v| **v <= 0.0) {
        return Err(Error::Parse { line: 1, message: format!("eigenvalue {bad} is not positive") });
    }
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let m = SymMatrix::from_packed(3, vec![4.0, -1.0, 4.0, 0.5, -1.0, 4.0]).unwrap();
        assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
        let m2 = parse_matrix("2\n1\n0.5 2\n").unwrap();
        assert_eq!(m2.get(1, 0), 0.5);
    }

    #[test]
    fn malformed_matrices() {
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("x\n").is_err());
        assert!(matches!(parse_matrix("2\n1 2\n3 4\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_matrix("2\n1\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("1\n1\n2\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_matrix("1\nnan\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn spectra() {
        assert_eq!(parse_spectrum("1, 3,1e2").unwrap(), vec![1.0, 3.0, 100.0]);
        assert!(parse_spectrum("1,-3").is_err());
        assert!(parse_spectrum("1,,3").is_err());
        assert!(parse_spectrum("0").is_err());
    }
}
