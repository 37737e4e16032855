//! Text format for (projector, value) sample files.
//!
//! Binary-free, line oriented, version tagged:
//!
//! ```text
//! qgleason-samples v1
//! dim 3
//! count 2
//! sample <rank> <value> <re> <im> ... (2·d² numbers, row-major)
//! sample ...
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! generated twice from the same seed is byte-identical.

use std::fmt::Write as _;

use num_complex::Complex64;
use qgleason::hilbert::{CMatrix, Projector};

use crate::CliError;

pub const SAMPLES_HEADER: &str = "qgleason-samples v1";

pub fn render_samples(dim: usize, samples: &[(Projector, f64)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SAMPLES_HEADER}");
    let _ = writeln!(out, "dim {dim}");
    let _ = writeln!(out, "count {}", samples.len());
    for (p, v) in samples {
        let _ = write!(out, "sample {} {}", p.rank(), v);
        let m = p.matrix();
        for i in 0..dim {
            for j in 0..dim {
                let z = m[(i, j)];
                let _ = write!(out, " {} {}", z.re, z.im);
            }
        }
        let _ = writeln!(out);
    }
    out
}

pub fn parse_samples(text: &str, path: &str) -> Result<(usize, Vec<(Projector, f64)>), CliError> {
    let bad = |msg: String| CliError::Usage(format!("{path}: {msg}"));
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| bad("empty sample file".into()))?;
    if header.trim() != SAMPLES_HEADER {
        return Err(bad(format!("unrecognized header `{header}`")));
    }
    let dim = expect_field(lines.next(), "dim", path)?;
    let count = expect_field(lines.next(), "count", path)?;

    let mut samples = Vec::with_capacity(count);
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        if parts.next() != Some("sample") {
            return Err(bad(format!("line {}: expected `sample`", lineno + 1)));
        }
        let rank: usize = parse_next(&mut parts, lineno, "rank", path)?;
        let value: f64 = parse_next(&mut parts, lineno, "value", path)?;
        let mut entries = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            let re: f64 = parse_next(&mut parts, lineno, "matrix entry", path)?;
            let im: f64 = parse_next(&mut parts, lineno, "matrix entry", path)?;
            entries.push(Complex64::new(re, im));
        }
        if parts.next().is_some() {
            return Err(bad(format!("line {}: trailing fields", lineno + 1)));
        }
        let matrix = CMatrix::from_fn(dim, dim, |i, j| entries[i * dim + j]);
        let projector = Projector::from_matrix(matrix, 1e-8)
            .map_err(|e| bad(format!("line {}: {e}", lineno + 1)))?;
        if projector.rank() != rank {
            return Err(bad(format!(
                "line {}: declared rank {rank} but the matrix has rank {}",
                lineno + 1,
                projector.rank()
            )));
        }
        samples.push((projector, value));
    }
    if samples.len() != count {
        return Err(bad(format!(
            "header declares {count} samples but {} were found",
            samples.len()
        )));
    }
    Ok((dim, samples))
}

fn expect_field(line: Option<(usize, &str)>, key: &str, path: &str) -> Result<usize, CliError> {
    let (lineno, text) =
        line.ok_or_else(|| CliError::Usage(format!("{path}: missing `{key}` line")))?;
    let mut parts = text.split_whitespace();
    if parts.next() != Some(key) {
        return Err(CliError::Usage(format!(
            "{path}: line {}: expected `{key} <n>`",
            lineno + 1
        )));
    }
    parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| CliError::Usage(format!("{path}: line {}: bad `{key}` value", lineno + 1)))
}

fn parse_next<'a, T: std::str::FromStr>(
    parts: &mut impl Iterator<Item = &'a str>,
    lineno: usize,
    what: &str,
    path: &str,
) -> Result<T, CliError> {
    parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| {
        CliError::Usage(format!(
            "{path}: line {}: missing or invalid {what}",
            lineno + 1
        ))
    })
}
