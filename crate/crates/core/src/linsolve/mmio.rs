//! Matrix Market coordinate format, complex general.

use std::io::{BufRead, Write};

use super::SparseComplexMatrix;
use crate::{Error, Result, C64};

pub fn write<W: Write>(a: &SparseComplexMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate complex general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {:.17e} {:.17e}", i + 1, j + 1, v.re, v.im)?;
        }
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("line {line}: malformed entry")))
}

/// Reads `coordinate` matrices with `real` or `complex` values and
/// `general` or `symmetric` structure.
pub fn read<R: BufRead>(input: R) -> Result<SparseComplexMatrix> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let header = header?.to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::Parse(format!("unsupported header '{header}'")));
    }
    let complex = match fields[3] {
        "complex" => true,
        "real" | "integer" => false,
        other => return Err(Error::Parse(format!("unsupported field type '{other}'"))),
    };
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse(format!("unsupported symmetry '{other}'"))),
    };
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (n, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut tok = line.split_whitespace();
        match size {
            None => {
                size = Some((parse(tok.next(), n + 1)?, parse(tok.next(), n + 1)?, parse(tok.next(), n + 1)?));
                triplets.reserve(size.unwrap().2);
            }
            Some((rows, cols, _)) => {
                let i: usize = parse(tok.next(), n + 1)?;
                let j: usize = parse(tok.next(), n + 1)?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(Error::Parse(format!("line {}: index out of range", n + 1)));
                }
                let re: f64 = parse(tok.next(), n + 1)?;
                let im: f64 = if complex { parse(tok.next(), n + 1)? } else { 0.0 };
                triplets.push((i - 1, j - 1, C64::new(re, im)));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, C64::new(re, im)));
                }
            }
        }
    }
    let (rows, cols, nnz) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {stored}")));
    }
    SparseComplexMatrix::from_triplets(rows, cols, &triplets)
}
