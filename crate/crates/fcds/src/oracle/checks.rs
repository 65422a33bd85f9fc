//! Exact global checks: domination, class connectivity, component maps,
//! trajectories, and packing arithmetic.
//!
//! Connected components are computed with union-find here, deliberately a
//! different algorithm than the protocol's flooding and the BFS used for
//! its trajectory, so agreement between the two is evidence of correctness.

use crate::graph::RealId;
use crate::protocol::{ClassAssignment, ClassId, Component, FcdsPacking};
use crate::vgraph::VirtualGraph;
use serde::Serialize;

/// Union-find over dense indices with path halving and union by size.
pub struct Dsu {
    parent: Vec<usize>,
    size: Vec<u32>,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Encoded ids of the class's copies on layers `1..=max_layer`.
fn class_member_codes(
    vg: &VirtualGraph,
    assignment: &ClassAssignment,
    class: ClassId,
    max_layer: u32,
) -> Vec<u64> {
    (0..vg.total_nodes())
        .filter(|&code| {
            assignment.get_encoded(code) == Some(class) && vg.decode(code).layer <= max_layer
        })
        .collect()
}

/// Unions every pair of adjacent member copies (same real, or base edge).
fn union_members(vg: &VirtualGraph, codes: &[u64]) -> Dsu {
    let copies = vg.copies_per_node() as u64;
    let mut member = vec![false; vg.total_nodes() as usize];
    for &code in codes {
        member[code as usize] = true;
    }
    let mut dsu = Dsu::new(vg.total_nodes() as usize);
    for &code in codes {
        let real = (code / copies) as RealId;
        let reach = std::iter::once(real).chain(vg.base().neighbors(real).iter().copied());
        for nr in reach {
            let base = nr as u64 * copies;
            for slot in 0..copies {
                let other = base + slot;
                if other != code && member[other as usize] {
                    dsu.union(code as usize, other as usize);
                }
            }
        }
    }
    dsu
}

/// True iff every real node has a copy of `class` somewhere in its closed
/// base neighborhood, i.e. the class dominates the virtual graph.
pub fn check_domination(vg: &VirtualGraph, assignment: &ClassAssignment, class: ClassId) -> bool {
    check_domination_prefix(vg, assignment, class, 2 * vg.layers())
}

/// Like [`check_domination`], but counting only copies on layers up to
/// `max_layer`: does every real see a class member among the old nodes?
pub fn check_domination_prefix(
    vg: &VirtualGraph,
    assignment: &ClassAssignment,
    class: ClassId,
    max_layer: u32,
) -> bool {
    let copies = vg.copies_per_node() as u64;
    'reals: for real in 0..vg.base().n() as RealId {
        let reach = std::iter::once(real).chain(vg.base().neighbors(real).iter().copied());
        for nr in reach {
            let base = nr as u64 * copies;
            for slot in 0..copies {
                let code = base + slot;
                if vg.decode(code).layer <= max_layer
                    && assignment.get_encoded(code) == Some(class)
                {
                    continue 'reals;
                }
            }
        }
        return false;
    }
    true
}

/// Connectivity verdict for one class over the full assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassConnectivity {
    /// The class has no copies at all; reported distinctly, never as
    /// trivially connected.
    Empty,
    Connected,
    Disconnected { components: u32 },
}

/// Union-find connectivity of the class's copies under derived adjacency.
pub fn class_connectivity(
    vg: &VirtualGraph,
    assignment: &ClassAssignment,
    class: ClassId,
) -> ClassConnectivity {
    let codes = class_member_codes(vg, assignment, class, vg.top_layer());
    if codes.is_empty() {
        return ClassConnectivity::Empty;
    }
    let mut dsu = union_members(vg, &codes);
    let mut roots: Vec<usize> = codes.iter().map(|&c| dsu.find(c as usize)).collect();
    roots.sort_unstable();
    roots.dedup();
    match roots.len() {
        1 => ClassConnectivity::Connected,
        k => ClassConnectivity::Disconnected { components: k as u32 },
    }
}

/// Components of the class's copies on layers strictly below `layer`
/// (the copies that were already assigned when `layer` was processed),
/// sorted by component id.
pub fn old_components(
    vg: &VirtualGraph,
    assignment: &ClassAssignment,
    class: ClassId,
    layer: u32,
) -> Vec<Component> {
    let codes = class_member_codes(vg, assignment, class, layer - 1);
    let mut dsu = union_members(vg, &codes);
    let mut by_root: std::collections::BTreeMap<usize, Vec<u64>> = std::collections::BTreeMap::new();
    for &code in &codes {
        by_root.entry(dsu.find(code as usize)).or_default().push(code);
    }
    let mut comps: Vec<Component> = by_root
        .into_values()
        .map(|mut codes| {
            codes.sort_unstable();
            Component {
                id: codes[0],
                members: codes.into_iter().map(|c| vg.decode(c)).collect(),
            }
        })
        .collect();
    comps.sort_by_key(|c| c.id);
    comps
}

/// Per-class component counts over cumulative layer prefixes `L..=2L`,
/// recomputed from scratch with union-find.
pub fn oracle_trajectory(vg: &VirtualGraph, assignment: &ClassAssignment) -> Vec<Vec<u32>> {
    (1..=assignment.classes())
        .map(|class| {
            (vg.layers()..=vg.top_layer())
                .map(|l| {
                    let codes = class_member_codes(vg, assignment, class, l);
                    let mut dsu = union_members(vg, &codes);
                    let mut roots: Vec<usize> =
                        codes.iter().map(|&c| dsu.find(c as usize)).collect();
                    roots.sort_unstable();
                    roots.dedup();
                    roots.len() as u32
                })
                .collect()
        })
        .collect()
}

/// True iff the packing is exactly the per-class copy counts over a
/// denominator of one per copy: denominators equal the copies per node,
/// numerators recount the assignment, and every node's numerators sum to
/// the denominator (so its total weight is exactly 1).
pub fn verify_packing(
    packing: &FcdsPacking,
    vg: &VirtualGraph,
    assignment: &ClassAssignment,
) -> bool {
    if packing.denominator != vg.copies_per_node() {
        return false;
    }
    if packing.numerators.len() != vg.base().n() {
        return false;
    }
    let copies = vg.copies_per_node() as u64;
    for (real, row) in packing.numerators.iter().enumerate() {
        if row.len() != assignment.classes() as usize {
            return false;
        }
        let mut counts = vec![0u32; assignment.classes() as usize];
        for slot in 0..copies {
            match assignment.get_encoded(real as u64 * copies + slot) {
                Some(class) => counts[class as usize - 1] += 1,
                None => return false,
            }
        }
        if &counts != row || row.iter().sum::<u32>() != packing.denominator {
            return false;
        }
    }
    true
}
