//! Plain-CSV matrix/vector files and output-directory helpers. The matrix
//! format is row-major lines of comma-separated reals with no header.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hardthresh::{DenseMatrix, Vector};

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading matrix file {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .with_context(|| format!("{}:{}: bad number {tok:?}", path.display(), lineno + 1))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no rows", path.display());
    }
    DenseMatrix::from_rows(&rows)
        .map_err(|e| anyhow::anyhow!("{}: inconsistent rows: {e}", path.display()))
}

pub fn read_vector_csv(path: &Path) -> Result<Vector> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading vector file {}", path.display()))?;
    let mut vals = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        for tok in line.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            let v: f64 = tok
                .parse()
                .with_context(|| format!("{}:{}: bad number {tok:?}", path.display(), lineno + 1))?;
            vals.push(v);
        }
    }
    if vals.is_empty() {
        bail!("{}: no values", path.display());
    }
    Ok(Vector::from_raw(vals))
}

pub fn write_vector_csv(path: &Path, v: &Vector) -> Result<()> {
    let body: String = v.iter().map(|x| format!("{x:e}\n")).collect();
    write_text(path, &body)
}

/// Writes `text`, creating parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
