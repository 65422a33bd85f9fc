//! Simple undirected graphs over node ids `0..n`, plus the statistics the
//! protocol needs (degree, diameter, vertex connectivity).

mod connectivity;
mod generate;
mod io;

pub use connectivity::{brute_force_vertex_connectivity, vertex_connectivity};
pub use generate::{generate_harary, generate_random, generate_ring_clique, GenerateError};
pub use io::{load_graph, save_graph, GraphIoError, LoadedGraph};

use serde::Serialize;
use std::collections::VecDeque;

/// Real (base graph) node id.
pub type RealId = u32;

/// Undirected simple graph stored as sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<RealId>>,
}

impl Graph {
    /// Creates an empty graph on `n` nodes.
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an edge list; ignores duplicates and rejects
    /// self-loops and out-of-range endpoints via panic (callers validate).
    pub fn from_edges(n: usize, edges: &[(RealId, RealId)]) -> Self {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Inserts the undirected edge `{u, v}` if not already present.
    pub fn add_edge(&mut self, u: RealId, v: RealId) {
        assert!(u != v, "self-loop {u}");
        assert!((u as usize) < self.n() && (v as usize) < self.n(), "edge endpoint out of range");
        if let Err(pos) = self.adj[u as usize].binary_search(&v) {
            self.adj[u as usize].insert(pos, v);
            let pos_v = self.adj[v as usize].binary_search(&u).unwrap_err();
            self.adj[v as usize].insert(pos_v, u);
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn degree(&self, v: RealId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|a| a.len()).max().unwrap_or(0)
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: RealId) -> &[RealId] {
        &self.adj[v as usize]
    }

    pub fn has_edge(&self, u: RealId, v: RealId) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    /// All edges as `(u, v)` pairs with `u < v`, lexicographically sorted.
    pub fn edges(&self) -> Vec<(RealId, RealId)> {
        let mut out = Vec::with_capacity(self.m());
        for u in 0..self.n() as RealId {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// BFS distances from `src`; `None` marks unreachable nodes.
    pub fn bfs_distances(&self, src: RealId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        dist[src as usize] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize].unwrap();
            for &v in self.neighbors(u) {
                if dist[v as usize].is_none() {
                    dist[v as usize] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        if self.n() == 0 {
            return true;
        }
        self.bfs_distances(0).iter().all(|d| d.is_some())
    }

    /// Diameter; `None` is the infinity sentinel for disconnected graphs.
    pub fn diameter(&self) -> Option<u32> {
        let mut best = 0;
        for v in 0..self.n() as RealId {
            for d in self.bfs_distances(v) {
                best = best.max(d?);
            }
        }
        Some(best)
    }
}

/// Summary statistics of a base graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    pub max_degree: usize,
    /// `None` encodes an infinite diameter (disconnected graph).
    pub diameter: Option<u32>,
    pub vertex_connectivity: usize,
}

/// Computes all [`GraphStats`] fields; connectivity via the exact flow oracle.
pub fn graph_stats(g: &Graph) -> GraphStats {
    let kappa = if g.n() < 2 {
        0
    } else {
        vertex_connectivity(g)
    };
    let stats = GraphStats {
        n: g.n(),
        m: g.m(),
        max_degree: g.max_degree(),
        diameter: g.diameter(),
        vertex_connectivity: kappa,
    };
    debug_assert!(stats.n < 2 || stats.vertex_connectivity <= stats.max_degree);
    debug_assert!(stats.n == 0 || stats.max_degree <= stats.n - 1);
    stats
}
