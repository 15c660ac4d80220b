//! Plain-text matrix blocks shared by the report writers.
//!
//! A block is a header line `# matrix <name> <rows> <cols>` followed by one
//! whitespace-separated line per row, values in `%.12e` form.

use std::io::{self, BufRead, Write};

use nalgebra::DMatrix;

use crate::scalar::Real;

pub fn write_matrix<T: Real>(out: &mut dyn Write, name: &str, m: &DMatrix<T>) -> io::Result<()> {
    writeln!(out, "# matrix {name} {} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)].to_f64_lossy())).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Reads every matrix block from `input`, skipping other lines.
pub fn read_matrices(input: &mut dyn BufRead) -> io::Result<Vec<(String, DMatrix<f64>)>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = input.lines();
    let mut out = Vec::new();
    while let Some(line) = lines.next() {
        let line = line?;
        let Some(rest) = line.strip_prefix("# matrix ") else { continue };
        let parts: Vec<&str> = rest.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(bad(format!("malformed matrix header: {line}")));
        }
        let rows: usize = parts[1].parse().map_err(|_| bad(format!("bad row count in: {line}")))?;
        let cols: usize = parts[2].parse().map_err(|_| bad(format!("bad column count in: {line}")))?;
        let mut m = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            let row = lines.next().ok_or_else(|| bad(format!("matrix {} truncated", parts[0])))??;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(format!("matrix {}: {e}", parts[0])))?;
            if vals.len() != cols {
                return Err(bad(format!("matrix {} row {i} has {} entries", parts[0], vals.len())));
            }
            for (j, v) in vals.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        out.push((parts[0].to_string(), m));
    }
    Ok(out)
}
