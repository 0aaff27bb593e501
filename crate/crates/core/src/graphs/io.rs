//! Plain-text graph format.
//!
//! ```text
//! steklov-graph v1
//! vertices <n>
//! edges <m>
//! <v0> <v1> <length>     (m lines, 0-based, lengths with 17 significant digits)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::MetricGraph;
use crate::error::{Error, Result};

pub const GRAPH_HEADER: &str = "steklov-graph v1";

pub fn graph_to_string(g: &MetricGraph) -> String {
    let mut s = String::new();
    writeln!(s, "{GRAPH_HEADER}").unwrap();
    writeln!(s, "vertices {}", g.n_vertices()).unwrap();
    writeln!(s, "edges {}", g.edges().len()).unwrap();
    for (e, l) in g.edges().iter().zip(g.lengths()) {
        writeln!(s, "{} {} {l:.16e}", e[0], e[1]).unwrap();
    }
    s
}

pub fn write_graph(g: &MetricGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, graph_to_string(g)).map_err(|e| Error::io(path, e))
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<MetricGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_graph(&text)
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn parse_graph(text: &str) -> Result<MetricGraph> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| lines.next().ok_or_else(|| perr(0, format!("missing {what}")));
    let (n, h) = next("header")?;
    if h != GRAPH_HEADER {
        return Err(perr(n, format!("expected header `{GRAPH_HEADER}`")));
    }
    let count = |(n, l): (usize, &str), key: &str| -> Result<usize> {
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(perr(n, format!("expected `{key} <count>`")));
        }
        it.next().and_then(|t| t.parse().ok()).ok_or_else(|| perr(n, format!("bad {key} count")))
    };
    let nv = count(next("vertex count")?, "vertices")?;
    let ne = count(next("edge count")?, "edges")?;
    let mut edges = Vec::with_capacity(ne);
    let mut lengths = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (n, l) = next("edge")?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 3 {
            return Err(perr(n, "expected `v0 v1 length`"));
        }
        let a = t[0].parse().map_err(|_| perr(n, "bad vertex index"))?;
        let b = t[1].parse().map_err(|_| perr(n, "bad vertex index"))?;
        let len: f64 = t[2].parse().map_err(|_| perr(n, "bad length"))?;
        edges.push([a, b]);
        lengths.push(len);
    }
    if let Some((n, _)) = lines.next() {
        return Err(perr(n, "unexpected trailing content"));
    }
    MetricGraph::new(nv, edges, lengths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = MetricGraph::complete(4, vec![0.1, 1.0 / 3.0, 2.0, 5.5, 1e-3, 7.25]).unwrap();
        assert_eq!(parse_graph(&graph_to_string(&g)).unwrap(), g);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        write_graph(&g, &p).unwrap();
        assert_eq!(read_graph(&p).unwrap(), g);
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(parse_graph("steklov-graph v2"), Err(Error::Parse { line: 1, .. })));
        let bad = "steklov-graph v1\nvertices 2\nedges 1\n0 1 -1\n";
        assert!(matches!(parse_graph(bad), Err(Error::Validation(_))));
    }
}
