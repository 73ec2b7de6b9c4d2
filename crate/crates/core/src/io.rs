//! Text dumps of matrices and phase vectors.
//!
//! Matrix format: a `rows,cols` header line, a line with the two sizes, then
//! one line per row holding `re,im` pairs for each column.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::channel::PhaseConfig;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub fn write_matrix<W: Write>(mut out: W, m: &CMatrix) -> std::io::Result<()> {
    writeln!(out, "rows,cols")?;
    writeln!(out, "{},{}", m.nrows(), m.ncols())?;
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:.17e},{:.17e}", m[(r, c)].re, m[(r, c)].im))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("matrix dump line {line}: {msg}"))
}

pub fn read_matrix<R: BufRead>(input: R) -> Result<CMatrix> {
    let mut lines = input.lines().enumerate();
    let mut next = || -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(parse_err(i + 1, e)),
            None => Err(Error::Config("matrix dump ended early".into())),
        }
    };
    let (n, header) = next()?;
    if header.trim() != "rows,cols" {
        return Err(parse_err(n, "expected `rows,cols` header"));
    }
    let (n, sizes) = next()?;
    let sizes: Vec<usize> = sizes
        .trim()
        .split(',')
        .map(|s| s.trim().parse().map_err(|e| parse_err(n, e)))
        .collect::<Result<_>>()?;
    let [rows, cols] = sizes[..] else {
        return Err(parse_err(n, "expected two sizes"));
    };
    let mut m = CMatrix::zeros(rows, cols);
    for r in 0..rows {
        let (n, line) = next()?;
        let v: Vec<f64> = line
            .trim()
            .split(',')
            .map(|s| s.trim().parse().map_err(|e| parse_err(n, e)))
            .collect::<Result<_>>()?;
        if v.len() != 2 * cols {
            return Err(parse_err(n, format!("expected {} values, found {}", 2 * cols, v.len())));
        }
        for c in 0..cols {
            m[(r, c)] = Complex64::new(v[2 * c], v[2 * c + 1]);
        }
    }
    Ok(m)
}

/// `surface,index,phase_rad` rows; surface is 1 or 2.
pub fn write_phases<W: Write>(mut out: W, phases: &PhaseConfig) -> std::io::Result<()> {
    writeln!(out, "surface,index,phase_rad")?;
    for (surface, values) in [(1, phases.ris1()), (2, phases.ris2())] {
        for (i, t) in values.iter().enumerate() {
            writeln!(out, "{surface},{i},{t:.17e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = CMatrix::from_fn(3, 2, |r, c| Complex64::new(r as f64 / 3.0, -(c as f64) * 1e-13));
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn truncated_dump_rejected() {
        assert!(read_matrix("rows,cols\n2,1\n1,0\n".as_bytes()).is_err());
        assert!(read_matrix("rows,cols\n1,1\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn phase_dump_lists_both_surfaces() {
        let mut buf = Vec::new();
        write_phases(&mut buf, &PhaseConfig::zeros(2, 3)).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 6);
    }
}
