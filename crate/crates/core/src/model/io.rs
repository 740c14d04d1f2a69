//! Plain-text matrix files: a first line holding `N`, then `N` rows of `N`
//! whitespace-separated decimals. Blank lines and `#` comments are skipped.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn parse_matrix(text: &str, origin: &Path) -> Result<DMatrix<f64>> {
    let err = |line: usize, message: String| Error::Parse { path: origin.to_path_buf(), line, message };

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (first, header) = lines.next().ok_or_else(|| err(1, "empty matrix file".into()))?;
    let n: usize = header
        .parse()
        .map_err(|_| err(first, format!("expected matrix size, found {header:?}")))?;
    if n == 0 {
        return Err(err(first, "matrix size must be positive".into()));
    }

    let mut m = DMatrix::zeros(n, n);
    for row in 0..n {
        let (line, content) = lines
            .next()
            .ok_or_else(|| err(first, format!("expected {n} rows, found {row}")))?;
        let values = content
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(line, format!("invalid number {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != n {
            return Err(err(line, format!("expected {n} values, found {}", values.len())));
        }
        for (col, x) in values.into_iter().enumerate() {
            m[(row, col)] = x;
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(err(line, "trailing data after matrix rows".into()));
    }
    Ok(m)
}

pub fn read_matrix_file(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_matrix(&text, path)
}

/// Emits 17 significant digits, enough to round-trip any `f64`.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("{}\n", m.nrows());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_matrix_file(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, format_matrix(m)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
