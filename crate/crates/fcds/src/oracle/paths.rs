//! Exhaustive connector-path enumeration and exact disjoint-path capacity.
//!
//! A connector path for a component leaves it through one or two internal
//! copies of the layer being processed and ends in a different component of
//! the same class. Short paths have one internal type-1 copy adjacent to
//! both components. Long paths have an internal type-2 copy `v` on the
//! component's side and an internal type-1 copy `w` on the far side; the
//! no-shortcut condition requires `v` to see no component other than the
//! origin and `w` to see the origin not at all (otherwise a strictly
//! shorter path exists through the offending neighbor).

use crate::graph::RealId;
use crate::protocol::{Component, HelperGraph};
use crate::vgraph::{CopyKind, VirtualGraph, VirtualNodeId};
use std::collections::{BTreeMap, BTreeSet};

/// One enumerated connector path.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConnectorPath {
    /// Component this path is for (its endpoint `s` lies in it).
    pub comp: u64,
    /// The component reached at the far end.
    pub other_comp: u64,
    pub s: VirtualNodeId,
    /// Internal copy adjacent to `s`: type-1 for short paths, type-2 for
    /// long paths.
    pub v: VirtualNodeId,
    /// Second internal copy (type-1) for long paths.
    pub w: Option<VirtualNodeId>,
    pub u: VirtualNodeId,
}

impl ConnectorPath {
    pub fn is_long(&self) -> bool {
        self.w.is_some()
    }
}

/// Precomputed visibility of a class's components from every real node.
pub struct ComponentView {
    /// Per real: ids of components with a member in its closed base
    /// neighborhood (every such member is a virtual neighbor of the
    /// real's new copies).
    sees: Vec<BTreeSet<u64>>,
    /// Per component id: members grouped by real.
    members_by_real: BTreeMap<u64, BTreeMap<RealId, Vec<VirtualNodeId>>>,
}

/// Builds the visibility maps for one class's components.
pub fn component_view(vg: &VirtualGraph, comps: &[Component]) -> ComponentView {
    let mut sees = vec![BTreeSet::new(); vg.base().n()];
    let mut members_by_real: BTreeMap<u64, BTreeMap<RealId, Vec<VirtualNodeId>>> = BTreeMap::new();
    for comp in comps {
        let grouped = members_by_real.entry(comp.id).or_default();
        for &m in &comp.members {
            grouped.entry(m.real).or_default().push(m);
            sees[m.real as usize].insert(comp.id);
            for &nr in vg.base().neighbors(m.real) {
                sees[nr as usize].insert(comp.id);
            }
        }
    }
    ComponentView {
        sees,
        members_by_real,
    }
}

impl ComponentView {
    /// Members of `comp` that are virtual neighbors of `real`'s new copies.
    fn members_near(&self, vg: &VirtualGraph, comp: u64, real: RealId) -> Vec<VirtualNodeId> {
        let Some(grouped) = self.members_by_real.get(&comp) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let reach = std::iter::once(real).chain(vg.base().neighbors(real).iter().copied());
        for r in reach {
            if let Some(ms) = grouped.get(&r) {
                out.extend_from_slice(ms);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Exhaustively lists every connector path for component `comp` using
/// internal copies of `layer`, in deterministic order.
pub fn enumerate_connector_paths(
    vg: &VirtualGraph,
    view: &ComponentView,
    layer: u32,
    comp: u64,
) -> Vec<ConnectorPath> {
    let mut out = Vec::new();
    let n = vg.base().n() as RealId;

    // Short paths: one type-1 internal adjacent to both components.
    for real in 0..n {
        let sees = &view.sees[real as usize];
        if !sees.contains(&comp) {
            continue;
        }
        let v = VirtualNodeId::upper(real, layer, CopyKind::Type1);
        let near_c = view.members_near(vg, comp, real);
        for &other in sees.iter().filter(|&&c| c != comp) {
            for &u in &view.members_near(vg, other, real) {
                for &s in &near_c {
                    out.push(ConnectorPath {
                        comp,
                        other_comp: other,
                        s,
                        v,
                        w: None,
                        u,
                    });
                }
            }
        }
    }

    // Long paths: type-2 `v` seeing exactly the origin component, type-1
    // `w` adjacent to `v` seeing other components but not the origin.
    for rv in 0..n {
        let sees_v = &view.sees[rv as usize];
        if sees_v.len() != 1 || !sees_v.contains(&comp) {
            continue;
        }
        let v = VirtualNodeId::upper(rv, layer, CopyKind::Type2);
        let near_c = view.members_near(vg, comp, rv);
        let reach = std::iter::once(rv).chain(vg.base().neighbors(rv).iter().copied());
        for rw in reach {
            let sees_w = &view.sees[rw as usize];
            if sees_w.contains(&comp) || sees_w.is_empty() {
                continue;
            }
            let w = VirtualNodeId::upper(rw, layer, CopyKind::Type1);
            for &other in sees_w.iter() {
                for &u in &view.members_near(vg, other, rw) {
                    for &s in &near_c {
                        out.push(ConnectorPath {
                            comp,
                            other_comp: other,
                            s,
                            v,
                            w: Some(w),
                            u,
                        });
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Exact maximum number of internally vertex-disjoint paths from one
/// component's enumeration, via maximum bipartite matching over internal
/// copies (type-1 side against type-2 side, with a private slot per
/// type-1 copy that can serve a short path). Returns `None` if the
/// reduced instance exceeds `max_pairs` distinct internal signatures;
/// the value is then reported as skipped, never guessed.
pub fn max_disjoint_connector_paths(paths: &[ConnectorPath], max_pairs: usize) -> Option<u32> {
    let mut long_pairs = BTreeSet::new();
    let mut short_internals = BTreeSet::new();
    for p in paths {
        match p.w {
            Some(w) => {
                long_pairs.insert((w, p.v));
            }
            None => {
                short_internals.insert(p.v);
            }
        }
    }
    if long_pairs.len() + short_internals.len() > max_pairs {
        return None;
    }

    // Left side: type-1 internals. Right side: type-2 internals, then one
    // private short-path slot per type-1 copy that has one.
    let mut left_ids: Vec<VirtualNodeId> = long_pairs.iter().map(|&(w, _)| w).collect();
    left_ids.extend(short_internals.iter().copied());
    left_ids.sort_unstable();
    left_ids.dedup();
    let left_index: BTreeMap<VirtualNodeId, usize> =
        left_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut right_ids: Vec<VirtualNodeId> = long_pairs.iter().map(|&(_, v)| v).collect();
    right_ids.sort_unstable();
    right_ids.dedup();
    let right_index: BTreeMap<VirtualNodeId, usize> =
        right_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut adj = vec![Vec::new(); left_ids.len()];
    for &(w, v) in &long_pairs {
        adj[left_index[&w]].push(right_index[&v]);
    }
    let mut right_count = right_ids.len();
    for &v in &short_internals {
        adj[left_index[&v]].push(right_count);
        right_count += 1;
    }

    Some(kuhn_max_matching(&adj, right_count))
}

/// Maximum bipartite matching by augmenting paths.
fn kuhn_max_matching(adj: &[Vec<usize>], right_count: usize) -> u32 {
    fn augment(
        u: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        match_right: &mut [Option<usize>],
    ) -> bool {
        for &r in &adj[u] {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            if match_right[r].is_none()
                || augment(match_right[r].unwrap(), adj, seen, match_right)
            {
                match_right[r] = Some(u);
                return true;
            }
        }
        false
    }

    let mut match_right = vec![None; right_count];
    let mut total = 0;
    for u in 0..adj.len() {
        let mut seen = vec![false; right_count];
        if augment(u, adj, &mut seen, &mut match_right) {
            total += 1;
        }
    }
    total
}

/// True iff the helper graph's edges for `comp` are exactly the internal
/// pairs of the enumerated long paths for `comp` — the set equality that
/// justifies connecting components through matched helper edges.
pub fn helper_matches_long_paths(
    helper: &HelperGraph,
    paths: &[ConnectorPath],
    comp: u64,
) -> bool {
    let from_paths: BTreeSet<(VirtualNodeId, VirtualNodeId)> = paths
        .iter()
        .filter(|p| p.comp == comp)
        .filter_map(|p| p.w.map(|w| (p.v, w)))
        .collect();
    let from_helper: BTreeSet<(VirtualNodeId, VirtualNodeId)> = helper
        .edges
        .iter()
        .filter(|e| e.comp == comp)
        .map(|e| (e.t2, e.t1))
        .collect();
    from_paths == from_helper
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::protocol::{ClassAssignment, ClassId};

    /// Assigns lower-layer classes on a 1-lower-layer virtual graph and
    /// returns the old components of `class` as seen from layer 2.
    fn lower_comps<'g>(g: &'g Graph, classes: &[ClassId], t: u32) -> (VirtualGraph<'g>, Vec<Component>) {
        let vg = VirtualGraph::new(g, 1);
        let mut asg = ClassAssignment::new(&vg, t);
        for (real, &c) in classes.iter().enumerate() {
            asg.set(&vg, VirtualNodeId::lower(real as RealId, 1), c);
        }
        let comps = crate::oracle::checks::old_components(&vg, &asg, 1, 2);
        (vg, comps)
    }

    #[test]
    fn single_component_class_has_no_paths() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        let (vg, comps) = lower_comps(&g, &[1, 1, 1], 1);
        assert_eq!(comps.len(), 1);
        let view = component_view(&vg, &comps);
        assert!(enumerate_connector_paths(&vg, &view, 2, comps[0].id).is_empty());
    }

    #[test]
    fn forced_long_path_on_a_six_node_path_graph() {
        // P6 with class-1 lower copies at reals 0 and 3 only. Components
        // {0_l1} and {3_l1} are at real distance 3: no type-1 copy touches
        // both (no short path). The long path must leave through real 1
        // (type-2, sees only component of 0) and real 2 (type-1, sees only
        // component of 3).
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        let (vg, comps) = lower_comps(&g, &[1, 2, 2, 1, 2, 2], 2);
        assert_eq!(comps.len(), 2);
        let view = component_view(&vg, &comps);
        let c0 = comps[0].id;
        let paths = enumerate_connector_paths(&vg, &view, 2, c0);
        assert_eq!(paths.len(), 1);
        let p = &paths[0];
        assert_eq!(p.s, VirtualNodeId::lower(0, 1));
        assert_eq!(p.v, VirtualNodeId::upper(1, 2, CopyKind::Type2));
        assert_eq!(p.w, Some(VirtualNodeId::upper(2, 2, CopyKind::Type1)));
        assert_eq!(p.u, VirtualNodeId::lower(3, 1));
        assert_eq!(max_disjoint_connector_paths(&paths, 1000), Some(1));
        // Symmetric path exists for the other component.
        let c1 = comps[1].id;
        let back = enumerate_connector_paths(&vg, &view, 2, c1);
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].v, VirtualNodeId::upper(2, 2, CopyKind::Type2));
    }

    #[test]
    fn adjacent_components_yield_short_paths_only() {
        // P3 with class 1 at reals 0 and 2: the middle type-1 copy links
        // them (short). The middle type-2 copy sees two components, so no
        // long path exists.
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        let (vg, comps) = lower_comps(&g, &[1, 2, 1], 2);
        assert_eq!(comps.len(), 2);
        let view = component_view(&vg, &comps);
        let paths = enumerate_connector_paths(&vg, &view, 2, comps[0].id);
        assert_eq!(paths.len(), 1);
        assert!(!paths[0].is_long());
        assert_eq!(paths[0].v, VirtualNodeId::upper(1, 2, CopyKind::Type1));
        assert_eq!(max_disjoint_connector_paths(&paths, 1000), Some(1));
    }

    #[test]
    fn paths_sharing_an_internal_count_once() {
        // Star: center 1 links leaf-components {0} and {2}, {3}. All short
        // paths run through the single type-1 copy of real 1.
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (1, 3)]);
        let (vg, comps) = lower_comps(&g, &[1, 2, 1, 1], 2);
        assert_eq!(comps.len(), 3);
        let view = component_view(&vg, &comps);
        let paths = enumerate_connector_paths(&vg, &view, 2, comps[0].id);
        // Two targets, one internal copy.
        assert_eq!(paths.len(), 2);
        assert_eq!(max_disjoint_connector_paths(&paths, 1000), Some(1));
    }

    #[test]
    fn disjoint_paths_count_adds_up() {
        // C6 with alternating classes: component {0} reaches {2} via
        // type-1 of 1, and {4} via type-1 of 5 — two disjoint short paths.
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let (vg, comps) = lower_comps(&g, &[1, 2, 1, 2, 1, 2], 2);
        assert_eq!(comps.len(), 3);
        let view = component_view(&vg, &comps);
        let c0 = comps[0].id;
        let paths = enumerate_connector_paths(&vg, &view, 2, c0);
        assert!(paths.iter().all(|p| !p.is_long()));
        assert_eq!(max_disjoint_connector_paths(&paths, 1000), Some(2));
    }

    #[test]
    fn oversized_instances_are_skipped_not_guessed() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        let (vg, comps) = lower_comps(&g, &[1, 2, 1], 2);
        let view = component_view(&vg, &comps);
        let paths = enumerate_connector_paths(&vg, &view, 2, comps[0].id);
        assert_eq!(max_disjoint_connector_paths(&paths, 0), None);
    }
}
