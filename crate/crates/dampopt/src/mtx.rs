//! MatrixMarket `array` and `coordinate` files with real entries.

use std::fs;
use std::io::Write;
use std::path::Path;

use dampopt_core::linalg::RMat;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

pub fn read_matrix_market(path: &Path) -> Result<RMat> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_matrix_market(&text).map_err(|msg| CliError::MatrixMarket { path: path.to_path_buf(), msg })
}

pub fn parse_matrix_market(text: &str) -> std::result::Result<RMat, String> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or("empty file")?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(format!("bad header line {header:?}"));
    }
    let dense = match fields[2].as_str() {
        "array" => true,
        "coordinate" => false,
        other => return Err(format!("unsupported format {other:?}")),
    };
    match fields[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(format!("unsupported field {other:?}")),
    }
    let sym = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(format!("unsupported symmetry {other:?}")),
    };
    let mut data = lines.filter(|(_, l)| !l.trim_start().starts_with('%') && !l.trim().is_empty());
    let (lno, size) = data.next().ok_or("missing size line")?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| format!("line {}: {e}", lno + 1)))
        .collect::<std::result::Result<_, _>>()?;
    let number = |tok: Option<&str>, lno: usize| -> std::result::Result<f64, String> {
        tok.ok_or(format!("line {}: missing value", lno + 1))?
            .parse::<f64>()
            .map_err(|e| format!("line {}: {e}", lno + 1))
    };
    let index = |tok: Option<&str>, bound: usize, lno: usize| -> std::result::Result<usize, String> {
        let i: usize = tok
            .ok_or(format!("line {}: missing index", lno + 1))?
            .parse()
            .map_err(|e| format!("line {}: {e}", lno + 1))?;
        if i == 0 || i > bound {
            return Err(format!("line {}: index {i} outside 1..{bound}", lno + 1));
        }
        Ok(i - 1)
    };

    if dense {
        let [rows, cols] = dims[..] else {
            return Err("array size line needs two integers".into());
        };
        let mut m = RMat::zeros(rows, cols);
        let mut slots = Vec::new();
        for j in 0..cols {
            let start = if sym == Symmetry::General { 0 } else if sym == Symmetry::Symmetric { j } else { j + 1 };
            for i in start..rows {
                slots.push((i, j));
            }
        }
        let mut it = slots.into_iter();
        for (lno, line) in data {
            for tok in line.split_whitespace() {
                let (i, j) = it.next().ok_or(format!("line {}: too many entries", lno + 1))?;
                let v = number(Some(tok), lno)?;
                place(&mut m, i, j, v, sym);
            }
        }
        if it.next().is_some() {
            return Err("too few entries".into());
        }
        Ok(m)
    } else {
        let [rows, cols, nnz] = dims[..] else {
            return Err("coordinate size line needs three integers".into());
        };
        let mut m = RMat::zeros(rows, cols);
        let mut count = 0;
        for (lno, line) in data {
            let mut toks = line.split_whitespace();
            let i = index(toks.next(), rows, lno)?;
            let j = index(toks.next(), cols, lno)?;
            let v = number(toks.next(), lno)?;
            place(&mut m, i, j, v, sym);
            count += 1;
        }
        if count != nnz {
            return Err(format!("expected {nnz} entries, found {count}"));
        }
        Ok(m)
    }
}

fn place(m: &mut RMat, i: usize, j: usize, v: f64, sym: Symmetry) {
    m[(i, j)] += v;
    if i != j {
        match sym {
            Symmetry::General => {}
            Symmetry::Symmetric => m[(j, i)] += v,
            Symmetry::SkewSymmetric => m[(j, i)] -= v,
        }
    }
}

/// Dense `array general` output with 17 significant digits.
pub fn write_matrix_market<W: Write>(m: &RMat, mut out: W) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            writeln!(out, "{:.16e}", m[(i, j)])?;
        }
    }
    Ok(())
}
