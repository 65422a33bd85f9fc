//! Deterministic test-graph generators.

use super::{Graph, RealId};
use crate::sim::rng::seeded_rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerateError {
    #[error("harary graph needs 2 <= k < n, got k={k}, n={n}")]
    BadHararyParams { n: usize, k: usize },
    #[error("ring-clique needs d >= 1 and ring_size >= 3, got d={d}, ring_size={ring_size}")]
    BadRingCliqueParams { d: usize, ring_size: usize },
}

/// Classic Harary construction: the minimum-edge graph on `n` nodes with
/// vertex connectivity exactly `k`.
///
/// Even `k = 2r` is the circulant with offsets `1..=r`; odd `k` adds
/// diagonals (`i <-> i + n/2` for even `n`, `i <-> i + (n-1)/2` for
/// `0 <= i <= (n-1)/2` when `n` is odd).
pub fn generate_harary(n: usize, k: usize) -> Result<Graph, GenerateError> {
    if k < 2 || k >= n {
        return Err(GenerateError::BadHararyParams { n, k });
    }
    let r = k / 2;
    let mut g = Graph::new(n);
    for i in 0..n {
        for off in 1..=r {
            g.add_edge(i as RealId, ((i + off) % n) as RealId);
        }
    }
    if k % 2 == 1 {
        if n % 2 == 0 {
            for i in 0..n / 2 {
                g.add_edge(i as RealId, (i + n / 2) as RealId);
            }
        } else {
            for i in 0..=(n - 1) / 2 {
                g.add_edge(i as RealId, ((i + (n - 1) / 2) % n) as RealId);
            }
        }
    }
    Ok(g)
}

/// `d` disjoint rings of `ring_size` nodes whose first nodes form a clique.
///
/// Ring `i` occupies ids `i * ring_size ..` consecutively; node
/// `i * ring_size` is that ring's clique member. Non-clique ring nodes keep
/// degree 2, so the construction is measured (not assumed) to have low
/// vertex connectivity; see the generator tests.
pub fn generate_ring_clique(d: usize, ring_size: usize) -> Result<Graph, GenerateError> {
    if d < 1 || ring_size < 3 {
        return Err(GenerateError::BadRingCliqueParams { d, ring_size });
    }
    let mut g = Graph::new(d * ring_size);
    for ring in 0..d {
        let base = ring * ring_size;
        for j in 0..ring_size {
            g.add_edge((base + j) as RealId, (base + (j + 1) % ring_size) as RealId);
        }
    }
    for a in 0..d {
        for b in (a + 1)..d {
            g.add_edge((a * ring_size) as RealId, (b * ring_size) as RealId);
        }
    }
    Ok(g)
}

/// Erdos-Renyi-style random graph: each pair becomes an edge with
/// probability `edge_percent / 100`, decided by the deterministic seeded
/// hash stream.
pub fn generate_random(n: usize, edge_percent: u32, seed: u64) -> Graph {
    assert!(edge_percent <= 100);
    let mut g = Graph::new(n);
    for u in 0..n as RealId {
        for v in (u + 1)..n as RealId {
            let mut rng = seeded_rng(seed, u as u64, v as u64, 0x5a);
            if rng.below(100) < edge_percent as u64 {
                g.add_edge(u, v);
            }
        }
    }
    g
}
