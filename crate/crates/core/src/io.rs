//! Graph, plan and matrix files.
//!
//! Matrix Market graphs are `coordinate` files with `real`, `integer` or
//! `pattern` fields. Off-diagonal values are read as adjacency weights when
//! positive; a file whose off-diagonals are all negative is read as a
//! Laplacian (`w_ij = -a_ij`). Diagonal entries are ignored. Edge lists have
//! one `i j [w]` per line, 0-based, with `w` defaulting to 1.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::disaggregate::DisaggregationPlan;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    MatrixMarket,
    EdgeList,
}

impl GraphFormat {
    /// `.mtx` / `.mm` files are Matrix Market, everything else an edge list.
    pub fn detect(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("mtx" | "mm") => GraphFormat::MatrixMarket,
            _ => GraphFormat::EdgeList,
        }
    }
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mm" | "mtx" | "matrix-market" => Ok(GraphFormat::MatrixMarket),
            "edges" | "edge-list" | "tsv" => Ok(GraphFormat::EdgeList),
            other => Err(Error::Domain(format!("unknown graph format `{other}`"))),
        }
    }
}

pub fn read_graph(path: &Path, format: Option<GraphFormat>) -> Result<WeightedGraph> {
    let text = fs::read_to_string(path)?;
    match format.unwrap_or_else(|| GraphFormat::detect(path)) {
        GraphFormat::MatrixMarket => parse_matrix_market(&text),
        GraphFormat::EdgeList => parse_edge_list(&text),
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} `{tok}`")))
}

pub fn parse_edge_list(text: &str) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut n = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') || body.starts_with('%') {
            continue;
        }
        let mut toks = body.split_whitespace();
        let i: usize = parse_field(toks.next(), line, "source vertex")?;
        let j: usize = parse_field(toks.next(), line, "target vertex")?;
        let w: f64 = match toks.next() {
            Some(t) => parse_field(Some(t), line, "weight")?,
            None => 1.0,
        };
        if toks.next().is_some() {
            return Err(parse_err(line, "expected `i j [w]`"));
        }
        if i == j {
            return Err(parse_err(line, format!("self-loop at {i}")));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(parse_err(
                line,
                format!("weight {w} must be positive and finite"),
            ));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(parse_err(line, format!("duplicate edge ({i}, {j})")));
        }
        n = n.max(i + 1).max(j + 1);
        edges.push((i, j, w));
    }
    WeightedGraph::new(n, edges)
}

pub fn parse_matrix_market(text: &str) -> Result<WeightedGraph> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let head: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if head.len() != 5 || head[0] != "%%matrixmarket" || head[1] != "matrix" {
        return Err(parse_err(
            1,
            "expected `%%MatrixMarket matrix coordinate <field> <symmetry>`",
        ));
    }
    if head[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported layout `{}`", head[2])));
    }
    let pattern = match head[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return Err(parse_err(1, format!("unsupported field `{other}`"))),
    };
    let symmetric = match head[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = body
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))?;
    let mut toks = size.split_whitespace();
    let rows: usize = parse_field(toks.next(), size_line, "row count")?;
    let cols: usize = parse_field(toks.next(), size_line, "column count")?;
    let nnz: usize = parse_field(toks.next(), size_line, "entry count")?;
    if rows != cols {
        return Err(parse_err(
            size_line,
            format!("matrix is {rows} x {cols}, not square"),
        ));
    }

    // (row, col) -> (value, line), 0-based.
    let mut entries: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    let mut count = 0;
    for (line, l) in body {
        count += 1;
        let mut toks = l.split_whitespace();
        let r: usize = parse_field(toks.next(), line, "row index")?;
        let c: usize = parse_field(toks.next(), line, "column index")?;
        let v: f64 = if pattern {
            1.0
        } else {
            parse_field(toks.next(), line, "value")?
        };
        if r == 0 || c == 0 || r > rows || c > cols {
            return Err(parse_err(
                line,
                format!("index ({r}, {c}) outside 1..={rows}"),
            ));
        }
        if !v.is_finite() {
            return Err(parse_err(line, format!("non-finite value {v}")));
        }
        let (r, c) = (r - 1, c - 1);
        if r == c {
            continue;
        }
        let key = if symmetric {
            (r.max(c), r.min(c))
        } else {
            (r, c)
        };
        if entries.insert(key, (v, line)).is_some() {
            return Err(parse_err(
                line,
                format!("duplicate entry ({}, {})", r + 1, c + 1),
            ));
        }
    }
    if count != nnz {
        return Err(parse_err(
            size_line,
            format!("declared {nnz} entries, found {count}"),
        ));
    }

    let mut pairs = Vec::new();
    for (&(r, c), &(v, line)) in &entries {
        if symmetric {
            pairs.push((r, c, v, line));
        } else if r > c {
            let mirror = entries.get(&(c, r)).map(|e| e.0).unwrap_or(0.0);
            if mirror != v {
                return Err(parse_err(
                    line,
                    format!("general matrix is not symmetric at ({}, {})", r + 1, c + 1),
                ));
            }
            pairs.push((r, c, v, line));
        } else if !entries.contains_key(&(c, r)) {
            return Err(parse_err(
                line,
                format!("general matrix is not symmetric at ({}, {})", r + 1, c + 1),
            ));
        }
    }
    let nonzero: Vec<_> = pairs.into_iter().filter(|p| p.2 != 0.0).collect();
    let laplacian = !nonzero.is_empty() && nonzero.iter().all(|p| p.2 < 0.0);
    let mut edges = Vec::with_capacity(nonzero.len());
    for (r, c, v, line) in nonzero {
        let w = if laplacian { -v } else { v };
        if w <= 0.0 {
            return Err(parse_err(
                line,
                format!("off-diagonal entries mix signs (value {v})"),
            ));
        }
        edges.push((c, r, w));
    }
    edges.sort_by_key(|e| (e.0, e.1));
    WeightedGraph::new(rows, edges)
}

pub fn format_edge_list(g: &WeightedGraph) -> String {
    let mut out = String::new();
    for e in g.edges() {
        let _ = writeln!(out, "{}\t{}\t{:.16e}", e.i, e.j, e.w);
    }
    out
}

pub fn format_matrix_market(g: &WeightedGraph) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(out, "{} {} {}", g.n(), g.n(), g.edge_count());
    for e in g.edges() {
        let _ = writeln!(
            out,
            "{} {} {:.16e}",
            e.i.max(e.j) + 1,
            e.i.min(e.j) + 1,
            e.w
        );
    }
    out
}

pub fn write_graph(path: &Path, g: &WeightedGraph, format: Option<GraphFormat>) -> Result<()> {
    let text = match format.unwrap_or_else(|| GraphFormat::detect(path)) {
        GraphFormat::MatrixMarket => format_matrix_market(g),
        GraphFormat::EdgeList => format_edge_list(g),
    };
    Ok(fs::write(path, text)?)
}

/// Nonzeros of a dense matrix as a general Matrix Market coordinate file.
pub fn format_triplets(m: &DMatrix<f64>) -> String {
    let nz: Vec<_> = (0..m.ncols())
        .flat_map(|c| (0..m.nrows()).map(move |r| (r, c)))
        .filter(|&(r, c)| m[(r, c)] != 0.0)
        .collect();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), nz.len());
    for (r, c) in nz {
        let _ = writeln!(out, "{} {} {:.16e}", r + 1, c + 1, m[(r, c)]);
    }
    out
}

pub fn read_plan(path: &Path) -> Result<DisaggregationPlan> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_plan(path: &Path, plan: &DisaggregationPlan) -> Result<()> {
    Ok(fs::write(path, serde_json::to_string_pretty(plan)?)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}
