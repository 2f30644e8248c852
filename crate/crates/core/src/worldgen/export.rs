//! Plain-text matrix dumps for inspecting generated grids.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Row-major, space-separated, one row per line.
pub fn matrix_to_string(values: &[f64], cols: usize) -> String {
    let mut out = String::with_capacity(values.len() * 8);
    for row in values.chunks(cols.max(1)) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:.6}");
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, values: &[f64], cols: usize) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(matrix_to_string(values, cols).as_bytes())?;
    Ok(())
}

/// Inverse of [`matrix_to_string`]; returns `(values, cols)`.
pub fn parse_matrix(text: &str) -> Result<(Vec<f64>, usize)> {
    let mut values = Vec::new();
    let mut cols = 0;
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let row = row.map_err(|e| crate::Error::config("matrix", format!("line {}: {e}", ln + 1)))?;
        if cols == 0 {
            cols = row.len();
        } else if row.len() != cols {
            return Err(crate::Error::config("matrix", format!("line {} has {} columns, expected {cols}", ln + 1, row.len())));
        }
        values.extend(row);
    }
    Ok((values, cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let v = vec![0.5, 1.25, -3.0, 4.0, 0.0, 2.125];
        let (back, cols) = parse_matrix(&matrix_to_string(&v, 3)).unwrap();
        assert_eq!(cols, 3);
        assert_eq!(back, v);
    }
}
