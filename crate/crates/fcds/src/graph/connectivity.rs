//! Exact vertex connectivity.
//!
//! The primary routine reduces to vertex-capacitated max-flow and minimizes
//! over all non-adjacent source/sink pairs (Menger's theorem). A second,
//! purely exhaustive routine removes every vertex subset in ascending size
//! order; the two must agree and are cross-checked in tests.

use super::{Graph, RealId};
use std::collections::VecDeque;

const INF: u32 = u32::MAX / 2;

struct FlowEdge {
    to: usize,
    cap: u32,
    rev: usize,
}

struct FlowNet {
    adj: Vec<Vec<FlowEdge>>,
}

impl FlowNet {
    fn new(nodes: usize) -> Self {
        FlowNet {
            adj: (0..nodes).map(|_| Vec::new()).collect(),
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: u32) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(FlowEdge { to, cap, rev: rev_from });
        self.adj[to].push(FlowEdge { to: from, cap: 0, rev: rev_to });
    }

    /// Edmonds-Karp max flow; capacities here are tiny so BFS augmentation
    /// is plenty fast.
    fn max_flow(&mut self, s: usize, t: usize) -> u32 {
        let mut total = 0;
        loop {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::new();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for (i, e) in self.adj[u].iter().enumerate() {
                    if e.cap > 0 && prev[e.to].is_none() && e.to != s {
                        prev[e.to] = Some((u, i));
                        queue.push_back(e.to);
                    }
                }
            }
            if prev[t].is_none() {
                return total;
            }
            let mut bottleneck = INF;
            let mut v = t;
            while v != s {
                let (u, i) = prev[v].unwrap();
                bottleneck = bottleneck.min(self.adj[u][i].cap);
                v = u;
            }
            let mut v = t;
            while v != s {
                let (u, i) = prev[v].unwrap();
                self.adj[u][i].cap -= bottleneck;
                let rev = self.adj[u][i].rev;
                let to = self.adj[u][i].to;
                self.adj[to][rev].cap += bottleneck;
                v = u;
            }
            total += bottleneck;
        }
    }
}

/// Maximum number of internally vertex-disjoint `s`-`t` paths for
/// non-adjacent `s`, `t`, via vertex splitting (`v_in -> v_out`, capacity 1).
fn disjoint_paths(g: &Graph, s: RealId, t: RealId) -> u32 {
    let n = g.n();
    let inn = |v: RealId| 2 * v as usize;
    let out = |v: RealId| 2 * v as usize + 1;
    let mut net = FlowNet::new(2 * n);
    for v in 0..n as RealId {
        let cap = if v == s || v == t { INF } else { 1 };
        net.add_edge(inn(v), out(v), cap);
    }
    for (u, v) in g.edges() {
        net.add_edge(out(u), inn(v), INF);
        net.add_edge(out(v), inn(u), INF);
    }
    net.max_flow(out(s), inn(t))
}

/// Exact vertex connectivity of `g` (requires `n >= 2`).
///
/// Returns 0 for disconnected graphs and `n - 1` for complete graphs;
/// otherwise the minimum over all non-adjacent pairs of the max number of
/// internally disjoint paths between them.
pub fn vertex_connectivity(g: &Graph) -> usize {
    assert!(g.n() >= 2, "vertex connectivity needs at least two nodes");
    if !g.is_connected() {
        return 0;
    }
    let n = g.n() as RealId;
    let mut best: Option<u32> = None;
    for u in 0..n {
        for v in (u + 1)..n {
            if !g.has_edge(u, v) {
                let paths = disjoint_paths(g, u, v);
                if best.map_or(true, |b| paths < b) {
                    best = Some(paths);
                }
            }
        }
    }
    match best {
        Some(k) => k as usize,
        None => g.n() - 1, // no non-adjacent pair: complete graph
    }
}

/// Exhaustive cross-check: smallest vertex subset whose removal disconnects
/// the graph, found by trying every subset in ascending size order. Only
/// sensible for very small `n`.
pub fn brute_force_vertex_connectivity(g: &Graph) -> usize {
    assert!(g.n() >= 2, "vertex connectivity needs at least two nodes");
    assert!(g.n() <= 16, "exhaustive connectivity is exponential in n");
    let n = g.n();
    for k in 0..=(n - 2) {
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            if disconnects(g, &subset) {
                return k;
            }
            if !next_combination(&mut subset, n) {
                break;
            }
        }
    }
    n - 1
}

/// Advances `subset` to the next k-combination of `0..n`; false when done.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in (i + 1)..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// True iff removing `removed` leaves at least two components among the
/// surviving nodes.
fn disconnects(g: &Graph, removed: &[usize]) -> bool {
    let n = g.n();
    let mut gone = vec![false; n];
    for &v in removed {
        gone[v] = true;
    }
    let Some(start) = (0..n).find(|&v| !gone[v]) else {
        return false;
    };
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    let mut reached = 1;
    while let Some(u) = stack.pop() {
        for &v in g.neighbors(u as RealId) {
            let v = v as usize;
            if !gone[v] && !seen[v] {
                seen[v] = true;
                reached += 1;
                stack.push(v);
            }
        }
    }
    reached < n - removed.len()
}
