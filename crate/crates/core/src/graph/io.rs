//! Plain-text graph and label formats.
//!
//! Edge lists hold one `u v [w]` entry per line (0-indexed, weight defaults to 1,
//! `#` starts a comment). An optional `%n <count>` header fixes the vertex count;
//! otherwise it is the largest index plus one. Repeated pairs sum their weights.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{GraphOptions, SparseGraph};
use crate::error::{Error, Result};
use crate::labeling::Labeling;
use crate::scalar::Real;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_index(source: &str, line: usize, token: &str) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| parse_err(source, line, format!("'{token}' is not a vertex index")))
}

fn parse_weight<T: Real>(source: &str, line: usize, token: &str) -> Result<T> {
    let w = token
        .parse::<T>()
        .map_err(|_| parse_err(source, line, format!("'{token}' is not a weight")))?;
    if !w.is_finite() || w < T::zero() {
        return Err(parse_err(source, line, format!("weight {token} must be finite and nonnegative")));
    }
    Ok(w)
}

/// Parses edge-list text; `source` names the input in error messages.
pub fn parse_edge_list<T: Real>(text: &str, source: &str, options: GraphOptions) -> Result<SparseGraph<T>> {
    let mut declared_n: Option<(usize, usize)> = None;
    let mut edges: Vec<(usize, usize, T)> = Vec::new();
    let mut edge_lines: Vec<usize> = Vec::new();
    let mut max_index: Option<usize> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix("%n") {
            let n = parse_index(source, line, rest.trim())?;
            declared_n = Some((n, line));
            continue;
        }
        let content = trimmed.split('#').next().unwrap_or("").trim();
        if content.is_empty() || content.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(parse_err(source, line, format!("expected 'u v [w]', got '{content}'")));
        }
        let u = parse_index(source, line, tokens[0])?;
        let v = parse_index(source, line, tokens[1])?;
        let w = match tokens.get(2) {
            Some(t) => parse_weight::<T>(source, line, t)?,
            None => T::one(),
        };
        max_index = Some(max_index.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v, w));
        edge_lines.push(line);
    }
    let n = match (declared_n, max_index) {
        (Some((n, line)), Some(m)) if m >= n => {
            let pos = edges.iter().position(|&(u, v, _)| u >= n || v >= n).unwrap();
            return Err(parse_err(
                source,
                edge_lines[pos].max(line),
                format!("vertex index {m} exceeds declared count {n}"),
            ));
        }
        (Some((n, _)), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };
    SparseGraph::from_edges(n, edges, options).map_err(|e| match e {
        Error::IsolatedVertex { vertex } => parse_err(
            source,
            last_line,
            format!("vertex {vertex} has no incident edges (enable unit self-loops to accept it)"),
        ),
        other => other,
    })
}

pub fn load_edge_list<T: Real>(path: impl AsRef<Path>, options: GraphOptions) -> Result<SparseGraph<T>> {
    let path = path.as_ref();
    parse_edge_list(&read(path)?, &path.display().to_string(), options)
}

/// Serialises `g` as `%n` header plus one `u v w` line per upper-triangle entry.
pub fn format_edge_list<T: Real>(g: &SparseGraph<T>) -> String {
    let mut out = String::with_capacity(16 * g.nnz());
    writeln!(out, "%n {}", g.n()).unwrap();
    for (u, v, w) in g.triplets() {
        writeln!(out, "{u} {v} {w}").unwrap();
    }
    out
}

pub fn save_edge_list<T: Real>(g: &SparseGraph<T>, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &format_edge_list(g))
}

/// Reads one cluster id per line; `k` is inferred as `max + 1`.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Labeling> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let text = read(path)?;
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        labels.push(
            content
                .parse::<usize>()
                .map_err(|_| parse_err(&source, i + 1, format!("'{content}' is not a cluster id")))?,
        );
    }
    Ok(Labeling::from_vec(labels))
}

pub fn format_labels(labels: &Labeling) -> String {
    let mut out = String::with_capacity(4 * labels.len());
    for &l in labels.as_slice() {
        writeln!(out, "{l}").unwrap();
    }
    out
}

pub fn save_labels(labels: &Labeling, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &format_labels(labels))
}

/// Reads a symmetric MatrixMarket coordinate file (1-indexed). `pattern` entries get weight 1.
pub fn parse_matrix_market<T: Real>(text: &str, source: &str, options: GraphOptions) -> Result<SparseGraph<T>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(source, 1, "empty MatrixMarket file"))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(parse_err(source, 1, "expected '%%MatrixMarket matrix coordinate <field> symmetric'"));
    }
    let pattern = match fields[3].as_str() {
        "pattern" => true,
        "real" | "integer" | "double" => false,
        other => return Err(parse_err(source, 1, format!("unsupported field '{other}'"))),
    };
    if fields[4] != "symmetric" {
        return Err(parse_err(source, 1, format!("unsupported symmetry '{}'", fields[4])));
    }
    let mut size: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match size {
            None => {
                if tokens.len() != 3 {
                    return Err(parse_err(source, line, "expected 'rows cols entries'"));
                }
                let rows = parse_index(source, line, tokens[0])?;
                let cols = parse_index(source, line, tokens[1])?;
                if rows != cols {
                    return Err(parse_err(source, line, "matrix is not square"));
                }
                size = Some((rows, line));
            }
            Some((n, _)) => {
                let expected = if pattern { 2 } else { 3 };
                if tokens.len() != expected {
                    return Err(parse_err(source, line, format!("expected {expected} fields")));
                }
                let u = parse_index(source, line, tokens[0])?;
                let v = parse_index(source, line, tokens[1])?;
                if u == 0 || v == 0 || u > n || v > n {
                    return Err(parse_err(source, line, format!("entry ({u}, {v}) out of range")));
                }
                let w = if pattern {
                    T::one()
                } else {
                    parse_weight::<T>(source, line, tokens[2])?
                };
                edges.push((u - 1, v - 1, w));
            }
        }
    }
    let (n, size_line) = size.ok_or_else(|| parse_err(source, 1, "missing size line"))?;
    SparseGraph::from_edges(n, edges, options).map_err(|e| match e {
        Error::IsolatedVertex { vertex } => parse_err(
            source,
            size_line,
            format!("vertex {} has no incident edges", vertex + 1),
        ),
        other => other,
    })
}

pub fn load_matrix_market<T: Real>(path: impl AsRef<Path>, options: GraphOptions) -> Result<SparseGraph<T>> {
    let path = path.as_ref();
    parse_matrix_market(&read(path)?, &path.display().to_string(), options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SparseGraph<f64>> {
        parse_edge_list(text, "test", GraphOptions::default())
    }

    #[test]
    fn path_from_text() {
        let g = parse("0 1\n1 2").unwrap();
        assert_eq!(g.degrees(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn repeated_lines_sum() {
        let g = parse("0 1 2.5\n0 1 0.5").unwrap();
        assert_eq!(g.weight(0, 1), 3.0);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn comments_and_header() {
        let g = parse("# a comment\n%n 3\n0 1 # trailing\n1 2\n").unwrap();
        assert_eq!(g.n(), 3);
    }

    #[test]
    fn header_with_isolated_vertex() {
        let err = parse("%n 4\n0 1\n1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let g: SparseGraph<f64> = parse_edge_list(
            "%n 4\n0 1\n1 2\n",
            "test",
            GraphOptions {
                self_loop_isolated: true,
            },
        )
        .unwrap();
        assert_eq!(g.weight(3, 3), 1.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(parse("0 1\n1 2 -3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("0 1\n\n1 x\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse("0 1.5\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("%n 2\n0 5\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let g = parse("0 1 0.1\n1 2 0.7\n2 2 1e-3\n0 2 3.333333333333333\n").unwrap();
        let h = parse(&format_edge_list(&g)).unwrap();
        assert_eq!(g.row_ptr(), h.row_ptr());
        assert_eq!(g.col_idx(), h.col_idx());
        assert_eq!(
            g.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            h.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn matrix_market_pattern() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n% c\n3 3 2\n2 1\n3 2\n";
        let g: SparseGraph<f64> = parse_matrix_market(text, "mm", GraphOptions::default()).unwrap();
        assert_eq!(g.degrees(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn matrix_market_real_and_errors() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 0.25\n";
        let g: SparseGraph<f64> = parse_matrix_market(text, "mm", GraphOptions::default()).unwrap();
        assert_eq!(g.weight(0, 1), 0.25);
        let bad = "%%MatrixMarket matrix coordinate real general\n2 2 1\n2 1 0.25\n";
        assert!(parse_matrix_market::<f64>(bad, "mm", GraphOptions::default()).is_err());
    }

    #[test]
    fn label_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.txt");
        let l = Labeling::new(vec![1, 0, 2, 2], 3).unwrap();
        save_labels(&l, &path).unwrap();
        assert_eq!(load_labels(&path).unwrap(), l);
    }
}
