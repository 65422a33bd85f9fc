//! Edge-list file format.
//!
//! ```text
//! # comment lines start with '#'
//! n 8
//! 0 1
//! 0 2
//! ```
//!
//! The header gives the node count; every following non-comment line is one
//! undirected edge. Saving always writes edges sorted with `u < v`, so a
//! load/save round trip is byte-stable.

use super::{Graph, RealId};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected header 'n <count>'")]
    MissingHeader { path: String, line: usize },
    #[error("{path}:{line}: malformed edge line {text:?}")]
    MalformedLine {
        path: String,
        line: usize,
        text: String,
    },
    #[error("{path}:{line}: node id {id} out of range (n = {n})")]
    IdOutOfRange {
        path: String,
        line: usize,
        id: u64,
        n: usize,
    },
    #[error("{path}:{line}: self-loop on node {id}")]
    SelfLoop { path: String, line: usize, id: u64 },
}

/// A parsed graph plus non-fatal anomalies encountered while reading it.
#[derive(Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub warnings: Vec<String>,
}

/// Reads a graph from the edge-list format; duplicate edges collapse to one
/// with a recorded warning.
pub fn load_graph(path: &Path) -> Result<LoadedGraph, GraphIoError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| GraphIoError::Io {
        path: display.clone(),
        source,
    })?;
    let mut n: Option<usize> = None;
    let mut graph = Graph::new(0);
    let mut warnings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        if n.is_none() {
            let (Some("n"), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(GraphIoError::MissingHeader {
                    path: display.clone(),
                    line: line_no,
                });
            };
            let count: usize = count.parse().map_err(|_| GraphIoError::MissingHeader {
                path: display.clone(),
                line: line_no,
            })?;
            n = Some(count);
            graph = Graph::new(count);
            continue;
        }
        let malformed = || GraphIoError::MalformedLine {
            path: display.clone(),
            line: line_no,
            text: line.to_string(),
        };
        let (Some(u), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(malformed());
        };
        let u: u64 = u.parse().map_err(|_| malformed())?;
        let v: u64 = v.parse().map_err(|_| malformed())?;
        let n = n.unwrap();
        for id in [u, v] {
            if id >= n as u64 {
                return Err(GraphIoError::IdOutOfRange {
                    path: display.clone(),
                    line: line_no,
                    id,
                    n,
                });
            }
        }
        if u == v {
            return Err(GraphIoError::SelfLoop {
                path: display.clone(),
                line: line_no,
                id: u,
            });
        }
        if graph.has_edge(u as RealId, v as RealId) {
            warnings.push(format!("{display}:{line_no}: duplicate edge {u} {v}"));
        } else {
            graph.add_edge(u as RealId, v as RealId);
        }
    }
    if n.is_none() {
        return Err(GraphIoError::MissingHeader {
            path: display,
            line: text.lines().count() + 1,
        });
    }
    Ok(LoadedGraph { graph, warnings })
}

/// Writes `g` in the edge-list format with deterministic edge order.
pub fn save_graph(g: &Graph, path: &Path) -> Result<(), GraphIoError> {
    let mut out = format!("n {}\n", g.n());
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    fs::write(path, out).map_err(|source| GraphIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::super::generate_harary;
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("fcds-graph-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn save_load_round_trip_preserves_harary() {
        let g = generate_harary(8, 4).unwrap();
        let path = tmp("h84.txt");
        save_graph(&g, &path).unwrap();
        let loaded = load_graph(&path).unwrap();
        assert_eq!(loaded.graph, g);
        assert!(loaded.warnings.is_empty());
        // Saving again must be byte-identical.
        let bytes = fs::read(&path).unwrap();
        save_graph(&loaded.graph, &path).unwrap();
        assert_eq!(bytes, fs::read(&path).unwrap());
    }

    #[test]
    fn duplicate_edge_collapses_with_warning() {
        let path = tmp("dup.txt");
        fs::write(&path, "n 3\n0 1\n1 0\n1 2\n").unwrap();
        let loaded = load_graph(&path).unwrap();
        assert_eq!(loaded.graph.m(), 2);
        assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let path = tmp("comments.txt");
        fs::write(&path, "# header comment\n\nn 2\n# edge below\n0 1\n").unwrap();
        assert_eq!(load_graph(&path).unwrap().graph.m(), 1);
    }

    #[test]
    fn out_of_range_id_is_rejected() {
        let path = tmp("range.txt");
        fs::write(&path, "n 3\n0 3\n").unwrap();
        assert!(matches!(
            load_graph(&path),
            Err(GraphIoError::IdOutOfRange { id: 3, .. })
        ));
    }

    #[test]
    fn self_loop_is_rejected() {
        let path = tmp("loop.txt");
        fs::write(&path, "n 3\n1 1\n").unwrap();
        assert!(matches!(load_graph(&path), Err(GraphIoError::SelfLoop { id: 1, .. })));
    }

    #[test]
    fn missing_header_is_rejected() {
        let path = tmp("nohdr.txt");
        fs::write(&path, "0 1\n").unwrap();
        assert!(matches!(load_graph(&path), Err(GraphIoError::MissingHeader { .. })));
    }

    #[test]
    fn empty_edge_graph_round_trips() {
        let path = tmp("empty.txt");
        save_graph(&Graph::new(3), &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "n 3\n");
        let loaded = load_graph(&path).unwrap();
        assert_eq!(loaded.graph.n(), 3);
        assert_eq!(loaded.graph.m(), 0);
    }
}
