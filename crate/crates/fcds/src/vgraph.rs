//! The derived virtual graph.
//!
//! Every real node is simulated by `3L` copies: one per lower layer
//! `1..=L`, plus a type-1 and a type-2 copy on each upper layer
//! `L+1..=2L`. Two distinct copies are adjacent iff they copy the same real
//! node or two real neighbors. Adjacency is always derived on demand — the
//! edge set is quadratic in `L` times the base edge count and is never
//! materialized.

use crate::graph::{Graph, RealId};
use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

/// Copy role; the derived order (`Lower < Type1 < Type2`) is part of the
/// virtual node id order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CopyKind {
    Lower,
    Type1,
    Type2,
}

/// Identity of one virtual copy. The derived `Ord` is the protocol's total
/// order: by real id, then layer, then kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VirtualNodeId {
    pub real: RealId,
    pub layer: u32,
    pub kind: CopyKind,
}

impl VirtualNodeId {
    pub fn lower(real: RealId, layer: u32) -> Self {
        VirtualNodeId {
            real,
            layer,
            kind: CopyKind::Lower,
        }
    }

    pub fn upper(real: RealId, layer: u32, kind: CopyKind) -> Self {
        VirtualNodeId { real, layer, kind }
    }
}

impl std::fmt::Display for VirtualNodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let k = match self.kind {
            CopyKind::Lower => "lo",
            CopyKind::Type1 => "t1",
            CopyKind::Type2 => "t2",
        };
        write!(f, "{}@{}{}", self.real, self.layer, k)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VirtualIdError {
    #[error("real id {real} out of range (n = {n})")]
    RealOutOfRange { real: RealId, n: usize },
    #[error("layer {layer} out of range (1..={max})")]
    LayerOutOfRange { layer: u32, max: u32 },
    #[error("kind {kind:?} is invalid on layer {layer}")]
    KindLayerMismatch { kind: CopyKind, layer: u32 },
}

/// Derived-adjacency view of the base graph with `L` lower and `L` upper
/// layers.
#[derive(Clone, Copy)]
pub struct VirtualGraph<'g> {
    base: &'g Graph,
    layers: u32,
}

impl<'g> VirtualGraph<'g> {
    pub fn new(base: &'g Graph, layers: u32) -> Self {
        assert!(layers >= 1, "need at least one layer");
        assert!(base.n() >= 1, "need at least one real node");
        VirtualGraph { base, layers }
    }

    pub fn base(&self) -> &'g Graph {
        self.base
    }

    /// Lower-layer count `L`.
    pub fn layers(&self) -> u32 {
        self.layers
    }

    /// Highest layer index, `2L`.
    pub fn top_layer(&self) -> u32 {
        2 * self.layers
    }

    /// Copies per real node, `3L`.
    pub fn copies_per_node(&self) -> u32 {
        3 * self.layers
    }

    /// Total virtual node count `N = 3Ln`.
    pub fn total_nodes(&self) -> u64 {
        self.copies_per_node() as u64 * self.base.n() as u64
    }

    pub fn validate(&self, id: VirtualNodeId) -> Result<(), VirtualIdError> {
        if (id.real as usize) >= self.base.n() {
            return Err(VirtualIdError::RealOutOfRange {
                real: id.real,
                n: self.base.n(),
            });
        }
        if id.layer < 1 || id.layer > self.top_layer() {
            return Err(VirtualIdError::LayerOutOfRange {
                layer: id.layer,
                max: self.top_layer(),
            });
        }
        let lower_layer = id.layer <= self.layers;
        if lower_layer != (id.kind == CopyKind::Lower) {
            return Err(VirtualIdError::KindLayerMismatch {
                kind: id.kind,
                layer: id.layer,
            });
        }
        Ok(())
    }

    /// Derived adjacency: distinct copies of one real node or of two real
    /// neighbors.
    pub fn is_adjacent(&self, a: VirtualNodeId, b: VirtualNodeId) -> bool {
        debug_assert!(self.validate(a).is_ok(), "invalid id {a}");
        debug_assert!(self.validate(b).is_ok(), "invalid id {b}");
        a != b && (a.real == b.real || self.base.has_edge(a.real, b.real))
    }

    /// Degree in the virtual graph: the other `3L - 1` copies of the same
    /// real node plus `3L` copies of each real neighbor.
    pub fn virtual_degree(&self, a: VirtualNodeId) -> u64 {
        debug_assert!(self.validate(a).is_ok(), "invalid id {a}");
        let c = self.copies_per_node() as u64;
        c - 1 + c * self.base.degree(a.real) as u64
    }

    /// Real node simulated by `a`.
    pub fn project(&self, a: VirtualNodeId) -> RealId {
        a.real
    }

    /// Real image of a set of virtual nodes.
    pub fn project_set<I: IntoIterator<Item = VirtualNodeId>>(&self, ids: I) -> BTreeSet<RealId> {
        ids.into_iter().map(|a| a.real).collect()
    }

    /// All copies on layer `l`, optionally restricted to one kind, in id
    /// order.
    pub fn layer_nodes(&self, layer: u32, kind: Option<CopyKind>) -> Vec<VirtualNodeId> {
        assert!(layer >= 1 && layer <= self.top_layer(), "layer {layer} out of range");
        let kinds: &[CopyKind] = if layer <= self.layers {
            &[CopyKind::Lower]
        } else {
            &[CopyKind::Type1, CopyKind::Type2]
        };
        let mut out = Vec::new();
        for real in 0..self.base.n() as RealId {
            for &k in kinds {
                if kind.map_or(true, |want| want == k) {
                    out.push(VirtualNodeId { real, layer, kind: k });
                }
            }
        }
        out
    }

    /// All copies on layers `1..=layer`, in id order.
    pub fn cumulative_nodes(&self, layer: u32) -> Vec<VirtualNodeId> {
        assert!(layer >= 1 && layer <= self.top_layer(), "layer {layer} out of range");
        let mut out = Vec::new();
        for real in 0..self.base.n() as RealId {
            for l in 1..=layer {
                if l <= self.layers {
                    out.push(VirtualNodeId::lower(real, l));
                } else {
                    out.push(VirtualNodeId::upper(real, l, CopyKind::Type1));
                    out.push(VirtualNodeId::upper(real, l, CopyKind::Type2));
                }
            }
        }
        out
    }

    /// Neighbors of `a` in the virtual graph, in id order (desk-scale only;
    /// the list has `virtual_degree(a)` entries).
    pub fn neighbors(&self, a: VirtualNodeId) -> Vec<VirtualNodeId> {
        debug_assert!(self.validate(a).is_ok(), "invalid id {a}");
        let mut reals: Vec<RealId> = self.base.neighbors(a.real).to_vec();
        reals.push(a.real);
        reals.sort_unstable();
        let mut out = Vec::with_capacity(self.virtual_degree(a) as usize);
        for real in reals {
            for slot in 0..self.copies_per_node() {
                let id = self.id_of_slot(real, slot);
                if id != a {
                    out.push(id);
                }
            }
        }
        out
    }

    /// Copy-slot index of `a` within its real node, in `0..3L`: lower layers
    /// first, then per upper layer the type-1 copy followed by the type-2
    /// copy. Slot order equals id order.
    pub fn slot_of(&self, a: VirtualNodeId) -> u32 {
        debug_assert!(self.validate(a).is_ok(), "invalid id {a}");
        match a.kind {
            CopyKind::Lower => a.layer - 1,
            CopyKind::Type1 => self.layers + 2 * (a.layer - self.layers - 1),
            CopyKind::Type2 => self.layers + 2 * (a.layer - self.layers - 1) + 1,
        }
    }

    /// Inverse of [`Self::slot_of`].
    pub fn id_of_slot(&self, real: RealId, slot: u32) -> VirtualNodeId {
        assert!(slot < self.copies_per_node(), "slot {slot} out of range");
        if slot < self.layers {
            VirtualNodeId::lower(real, slot + 1)
        } else {
            let upper = slot - self.layers;
            let kind = if upper % 2 == 0 { CopyKind::Type1 } else { CopyKind::Type2 };
            VirtualNodeId::upper(real, self.layers + 1 + upper / 2, kind)
        }
    }

    /// Dense integer encoding (`real * 3L + slot`), order-isomorphic to the
    /// id order; used wherever an id must ride in a message field.
    pub fn encode(&self, a: VirtualNodeId) -> u64 {
        a.real as u64 * self.copies_per_node() as u64 + self.slot_of(a) as u64
    }

    /// Inverse of [`Self::encode`].
    pub fn decode(&self, code: u64) -> VirtualNodeId {
        let c = self.copies_per_node() as u64;
        assert!(code < self.total_nodes(), "code {code} out of range");
        self.id_of_slot((code / c) as RealId, (code % c) as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_harary, Graph};

    fn k2() -> Graph {
        Graph::from_edges(2, &[(0, 1)])
    }

    #[test]
    fn copy_counts_match_the_three_l_rule() {
        let g = generate_harary(5, 2).unwrap();
        let vg = VirtualGraph::new(&g, 3);
        assert_eq!(vg.total_nodes(), 45);
        assert_eq!(vg.layer_nodes(2, None).len(), 5);
        assert_eq!(vg.layer_nodes(4, Some(CopyKind::Type1)).len(), 5);
        assert_eq!(vg.layer_nodes(4, None).len(), 10);
        assert_eq!(vg.cumulative_nodes(vg.top_layer()).len(), 45);
    }

    #[test]
    fn virtual_degree_on_k2_with_one_layer_is_5() {
        let g = k2();
        let vg = VirtualGraph::new(&g, 1);
        // Count by exhaustive adjacency as an independent route.
        let all = vg.cumulative_nodes(2);
        assert_eq!(all.len(), 6);
        for &a in &all {
            let count = all.iter().filter(|&&b| vg.is_adjacent(a, b)).count() as u64;
            assert_eq!(count, vg.virtual_degree(a));
            assert_eq!(count, 5);
        }
    }

    #[test]
    fn virtual_degree_on_c4_with_one_layer_is_8() {
        let g = generate_harary(4, 2).unwrap();
        let vg = VirtualGraph::new(&g, 1);
        let all = vg.cumulative_nodes(2);
        for &a in &all {
            let count = all.iter().filter(|&&b| vg.is_adjacent(a, b)).count() as u64;
            assert_eq!(count, vg.virtual_degree(a));
            assert_eq!(count, 8);
        }
    }

    #[test]
    fn adjacency_is_irreflexive_and_symmetric() {
        let g = generate_harary(6, 3).unwrap();
        let vg = VirtualGraph::new(&g, 2);
        let all = vg.cumulative_nodes(4);
        for &a in &all {
            assert!(!vg.is_adjacent(a, a));
            for &b in &all {
                assert_eq!(vg.is_adjacent(a, b), vg.is_adjacent(b, a));
            }
        }
    }

    #[test]
    fn neighbor_lists_match_derived_adjacency_on_small_instances() {
        for (n, k, layers) in [(4usize, 2usize, 1u32), (5, 2, 2), (6, 3, 2)] {
            let g = generate_harary(n, k).unwrap();
            let vg = VirtualGraph::new(&g, layers);
            let all = vg.cumulative_nodes(vg.top_layer());
            for &a in &all {
                let by_scan: Vec<_> = all.iter().copied().filter(|&b| vg.is_adjacent(a, b)).collect();
                assert_eq!(by_scan, vg.neighbors(a), "neighbors of {a}");
            }
        }
    }

    #[test]
    fn id_order_is_real_then_layer_then_kind() {
        let a = VirtualNodeId::lower(0, 2);
        let b = VirtualNodeId::upper(0, 3, CopyKind::Type1);
        let c = VirtualNodeId::upper(0, 3, CopyKind::Type2);
        let d = VirtualNodeId::lower(1, 1);
        assert!(a < b && b < c && c < d);
    }

    #[test]
    fn encoding_is_an_order_isomorphism() {
        let g = generate_harary(5, 2).unwrap();
        let vg = VirtualGraph::new(&g, 2);
        let all = vg.cumulative_nodes(4);
        let mut last: Option<u64> = None;
        for &a in &all {
            let code = vg.encode(a);
            assert_eq!(vg.decode(code), a);
            if let Some(prev) = last {
                assert!(prev < code, "encoding must preserve id order");
            }
            last = Some(code);
        }
    }

    #[test]
    fn validate_rejects_malformed_ids() {
        let g = k2();
        let vg = VirtualGraph::new(&g, 2);
        assert!(vg.validate(VirtualNodeId::lower(0, 1)).is_ok());
        assert!(vg.validate(VirtualNodeId::upper(0, 3, CopyKind::Type2)).is_ok());
        assert_eq!(
            vg.validate(VirtualNodeId::lower(2, 1)),
            Err(VirtualIdError::RealOutOfRange { real: 2, n: 2 })
        );
        assert_eq!(
            vg.validate(VirtualNodeId::lower(0, 5)),
            Err(VirtualIdError::LayerOutOfRange { layer: 5, max: 4 })
        );
        assert_eq!(
            vg.validate(VirtualNodeId::lower(0, 3)),
            Err(VirtualIdError::KindLayerMismatch {
                kind: CopyKind::Lower,
                layer: 3
            })
        );
        assert_eq!(
            vg.validate(VirtualNodeId::upper(0, 1, CopyKind::Type1)),
            Err(VirtualIdError::KindLayerMismatch {
                kind: CopyKind::Type1,
                layer: 1
            })
        );
    }

    #[test]
    fn slots_enumerate_all_copies_in_id_order() {
        let g = k2();
        let vg = VirtualGraph::new(&g, 2);
        let ids: Vec<_> = (0..vg.copies_per_node()).map(|s| vg.id_of_slot(0, s)).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        assert_eq!(ids.len(), 6);
        for (slot, id) in ids.iter().enumerate() {
            assert_eq!(vg.slot_of(*id), slot as u32);
        }
        assert_eq!(ids[0], VirtualNodeId::lower(0, 1));
        assert_eq!(ids[2], VirtualNodeId::upper(0, 3, CopyKind::Type1));
        assert_eq!(ids[5], VirtualNodeId::upper(0, 4, CopyKind::Type2));
    }
}
