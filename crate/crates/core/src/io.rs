//! Edge-list and degree-sequence file formats.
//!
//! Degree files are CSV with header `index,kind,value`, one row per
//! coordinate, `kind` in `{out, in}`, zero-based `index`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Serializes `g` as `# nodes: n` followed by one `i j` line per edge.
pub fn write_edge_list(g: &DirectedGraph) -> String {
    let mut s = format!("# nodes: {}\n", g.n());
    for (i, j) in g.edges() {
        let _ = writeln!(s, "{i} {j}");
    }
    s
}

/// Writes a `2n` vector (out block then in block) as degree CSV.
pub fn write_degree_csv<T: std::fmt::Display>(values: &[T]) -> Result<String> {
    if values.is_empty() || !values.len().is_multiple_of(2) {
        return Err(Error::domain(format!("degree vector length must be even and positive, got {}", values.len())));
    }
    let n = values.len() / 2;
    let mut s = String::from("index,kind,value\n");
    for (c, v) in values.iter().enumerate() {
        let (idx, kind) = if c < n { (c, "out") } else { (c - n, "in") };
        let _ = writeln!(s, "{idx},{kind},{v}");
    }
    Ok(s)
}

/// Parses degree CSV into a `2n` vector. Rows may appear in any order but
/// every `(index, kind)` for `index < n` must appear exactly once.
pub fn read_degree_csv(text: &str) -> Result<Vec<f64>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let line_no = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != "index,kind,value" {
                return Err(Error::Parse { line: line_no, message: "expected header index,kind,value".into() });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse { line: line_no, message: format!("expected 3 fields, got {}", fields.len()) });
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| Error::Parse { line: line_no, message: format!("bad index {:?}", fields[0]) })?;
        let is_out = match fields[1] {
            "out" => true,
            "in" => false,
            other => return Err(Error::Parse { line: line_no, message: format!("bad kind {other:?}") }),
        };
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| Error::Parse { line: line_no, message: format!("bad value {:?}", fields[2]) })?;
        if !value.is_finite() {
            return Err(Error::Parse { line: line_no, message: "non-finite value".into() });
        }
        rows.push((index, is_out, value, line_no));
    }
    if !header_seen {
        return Err(Error::Parse { line: 1, message: "missing header index,kind,value".into() });
    }
    if rows.is_empty() || rows.len() % 2 != 0 {
        return Err(Error::domain(format!("expected 2n rows, got {}", rows.len())));
    }
    let n = rows.len() / 2;
    let mut out = vec![None; 2 * n];
    for (index, is_out, value, line) in rows {
        if index >= n {
            return Err(Error::Parse { line, message: format!("index {index} out of range for n={n}") });
        }
        let slot = if is_out { index } else { n + index };
        if out[slot].replace(value).is_some() {
            return Err(Error::Parse { line, message: "duplicate row".into() });
        }
    }
    Ok(out.into_iter().map(|v| v.expect("2n distinct slots filled")).collect())
}

/// Converts a real vector to integers, rejecting fractional entries.
pub fn to_integers(values: &[f64]) -> Result<Vec<i64>> {
    values
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && v.abs() < 9.0e15 {
                Ok(v as i64)
            } else {
                Err(Error::domain(format!("expected an integer degree, got {v}")))
            }
        })
        .collect()
}
