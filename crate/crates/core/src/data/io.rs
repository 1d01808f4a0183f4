//! Plain-text dataset formats. Lines starting with `#` and blank lines are
//! ignored everywhere.
//!
//! * complexes: one `k v0 .. vk` maximal simplex per line
//! * trajectories: `label idx:sign idx:sign ..` over edge indices
//! * imputation: a `order n` header, then `idx value known` with `known` in `{0, 1}`
//! * signals: one whitespace-separated row of floats per simplex

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{DataError, MdiInstance, TrajectoryInstance};
use crate::complex::SimplicialComplex;
use crate::dense::Matrix;

fn read(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|e| DataError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn write(path: &Path, text: &str) -> Result<(), DataError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| DataError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    }
    std::fs::write(path, text).map_err(|e| DataError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse<T: FromStr>(tok: &str, line: usize) -> Result<T, DataError>
where
    T::Err: std::fmt::Display,
{
    tok.parse().map_err(|e| DataError::Parse { line, message: format!("bad token {tok:?}: {e}") })
}

pub fn load_complex(path: &Path) -> Result<SimplicialComplex, DataError> {
    let text = read(path)?;
    if data_lines(&text).next().is_none() {
        return Err(DataError::EmptyInput);
    }
    Ok(SimplicialComplex::from_text(&text)?)
}

pub fn save_complex(path: &Path, complex: &SimplicialComplex) -> Result<(), DataError> {
    write(path, &complex.to_text())
}

pub fn save_trajectories(path: &Path, trajectories: &[TrajectoryInstance]) -> Result<(), DataError> {
    let mut out = String::from("# label edge:sign ...\n");
    for t in trajectories {
        let _ = write!(out, "{}", t.label);
        for (i, sign) in t.support() {
            let _ = write!(out, " {i}:{sign:+}");
        }
        out.push('\n');
    }
    write(path, &out)
}

/// Reads trajectories over a complex with `n_edges` edges.
pub fn load_trajectories(path: &Path, n_edges: usize) -> Result<Vec<TrajectoryInstance>, DataError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (line, l) in data_lines(&text) {
        let mut toks = l.split_whitespace();
        let label: usize = parse(toks.next().expect("non-empty line"), line)?;
        let mut signal = vec![0.0; n_edges];
        for tok in toks {
            let (idx, sign) = tok
                .split_once(':')
                .ok_or_else(|| DataError::Parse { line, message: format!("expected idx:sign, got {tok:?}") })?;
            let idx: usize = parse(idx, line)?;
            let sign: f64 = parse(sign, line)?;
            if idx >= n_edges {
                return Err(DataError::DimensionMismatch { expected: n_edges, actual: idx + 1 });
            }
            signal[idx] = sign;
        }
        out.push(TrajectoryInstance { signal, label });
    }
    if out.is_empty() {
        return Err(DataError::EmptyInput);
    }
    Ok(out)
}

pub fn save_mdi(path: &Path, instance: &MdiInstance) -> Result<(), DataError> {
    let mut out = format!("# order n / idx value known\n{} {}\n", instance.order, instance.len());
    for (i, (v, k)) in instance.values.iter().zip(&instance.known).enumerate() {
        let _ = writeln!(out, "{i} {v} {}", u8::from(*k));
    }
    write(path, &out)
}

pub fn load_mdi(path: &Path) -> Result<MdiInstance, DataError> {
    let text = read(path)?;
    let mut lines = data_lines(&text);
    let (hline, header) = lines.next().ok_or(DataError::EmptyInput)?;
    let h: Vec<usize> = header.split_whitespace().map(|t| parse(t, hline)).collect::<Result<_, _>>()?;
    let [order, n] = h[..] else {
        return Err(DataError::Parse { line: hline, message: "header must be `order n`".into() });
    };
    let mut values = vec![f64::NAN; n];
    let mut known = vec![false; n];
    let mut seen = 0;
    for (line, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let [i, v, k] = toks[..] else {
            return Err(DataError::Parse { line, message: "expected `idx value known`".into() });
        };
        let i: usize = parse(i, line)?;
        if i >= n {
            return Err(DataError::DimensionMismatch { expected: n, actual: i + 1 });
        }
        values[i] = parse(v, line)?;
        known[i] = match k {
            "0" => false,
            "1" => true,
            _ => return Err(DataError::Parse { line, message: format!("known flag must be 0 or 1, got {k:?}") }),
        };
        seen += 1;
    }
    if seen != n {
        return Err(DataError::DimensionMismatch { expected: n, actual: seen });
    }
    MdiInstance::new(order, values, known)
}

pub fn save_signals(path: &Path, signals: &Matrix) -> Result<(), DataError> {
    let mut out = String::new();
    for r in 0..signals.rows() {
        let row: Vec<String> = signals.row(r).iter().map(f64::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    write(path, &out)
}

/// Reads an `N × F` signal matrix; `expected_rows` checks `N`.
pub fn load_signals(path: &Path, expected_rows: Option<usize>) -> Result<Matrix, DataError> {
    let text = read(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, l) in data_lines(&text) {
        let row: Vec<f64> = l.split_whitespace().map(|t| parse(t, line)).collect::<Result<_, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(DataError::Parse {
                    line,
                    message: format!("row has {} values, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::EmptyInput);
    }
    if let Some(n) = expected_rows.filter(|&n| n != rows.len()) {
        return Err(DataError::DimensionMismatch { expected: n, actual: rows.len() });
    }
    Ok(Matrix::from_rows(&rows))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_manifest<T: Serialize>(path: &Path, manifest: &T) -> Result<(), DataError> {
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| DataError::Io { path: path.display().to_string(), message: e.to_string() })?;
    text.push('\n');
    write(path, &text)
}
