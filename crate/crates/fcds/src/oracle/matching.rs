//! Matching quality oracle: validity, maximality, and comparison against
//! an exhaustive maximum matching on small helper graphs.

use crate::protocol::{HelperEdge, HelperGraph};
use crate::vgraph::VirtualNodeId;
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

/// Helper graphs above this many distinct endpoints skip the exhaustive
/// maximum (maximality is still checked; the ratio is reported as skipped).
pub const DEFAULT_MAX_MATCHING_NODES: usize = 40;

#[derive(Debug, Error)]
pub enum MatchingError {
    #[error("matched edge {t2}-{t1} (component {comp}) is not a helper edge")]
    NotASubset {
        t2: VirtualNodeId,
        t1: VirtualNodeId,
        comp: u64,
    },
}

/// Verdict for one class's matching on one layer.
#[derive(Clone, Debug, Serialize)]
pub struct MatchingQuality {
    /// No endpoint is used twice (type-2 copies globally, type-1 copies
    /// per component slot).
    pub valid: bool,
    /// No helper edge has both endpoints unmatched.
    pub maximal: bool,
    pub matched: u32,
    /// Exhaustive maximum matching size, if within the node cap.
    pub maximum: Option<u32>,
    /// Whether `matched >= ceil(maximum / 2)`; skipped when `maximum` is.
    pub ratio_ok: Option<bool>,
}

/// Checks a matching against its helper graph. The matched edges must be a
/// subset of the helper edges; anything else is a hard error.
pub fn check_matching(
    helper: &HelperGraph,
    matched: &[HelperEdge],
    max_nodes: usize,
) -> Result<MatchingQuality, MatchingError> {
    for e in matched {
        if helper.edges.binary_search(e).is_err() {
            return Err(MatchingError::NotASubset {
                t2: e.t2,
                t1: e.t1,
                comp: e.comp,
            });
        }
    }

    let mut t2_used = BTreeSet::new();
    let mut t1_used = BTreeSet::new();
    let mut valid = true;
    for e in matched {
        // A type-1 copy serves once per component, a type-2 copy once.
        if !t2_used.insert(e.t2) || !t1_used.insert((e.t1, e.comp)) {
            valid = false;
        }
    }

    let maximal = !helper.edges.iter().any(|e| {
        !t2_used.contains(&e.t2) && !t1_used.contains(&(e.t1, e.comp))
    });

    let maximum = maximum_matching(helper, max_nodes);
    let ratio_ok = maximum.map(|m| matched.len() as u32 >= m.div_ceil(2));
    Ok(MatchingQuality {
        valid,
        maximal,
        matched: matched.len() as u32,
        maximum,
        ratio_ok,
    })
}

/// Exhaustive maximum matching by branch and bound over the edge list with
/// memoization on the set of used endpoints. `None` above the node cap.
pub fn maximum_matching(helper: &HelperGraph, max_nodes: usize) -> Option<u32> {
    let mut t2_ids: Vec<VirtualNodeId> = helper.edges.iter().map(|e| e.t2).collect();
    t2_ids.sort_unstable();
    t2_ids.dedup();
    let mut t1_ids: Vec<(VirtualNodeId, u64)> =
        helper.edges.iter().map(|e| (e.t1, e.comp)).collect();
    t1_ids.sort_unstable();
    t1_ids.dedup();
    if t2_ids.len() + t1_ids.len() > max_nodes {
        return None;
    }

    // Edge endpoints as bit positions in one shared mask.
    let edges: Vec<(u32, u32)> = helper
        .edges
        .iter()
        .map(|e| {
            let a = t2_ids.binary_search(&e.t2).unwrap() as u32;
            let b = (t2_ids.len() + t1_ids.binary_search(&(e.t1, e.comp)).unwrap()) as u32;
            (a, b)
        })
        .collect();

    fn solve(
        i: usize,
        used: u64,
        edges: &[(u32, u32)],
        memo: &mut HashMap<(usize, u64), u32>,
    ) -> u32 {
        if i == edges.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, used)) {
            return v;
        }
        let mut best = solve(i + 1, used, edges, memo);
        let (a, b) = edges[i];
        if used & (1 << a) == 0 && used & (1 << b) == 0 {
            best = best.max(1 + solve(i + 1, used | (1 << a) | (1 << b), edges, memo));
        }
        memo.insert((i, used), best);
        best
    }

    let mut memo = HashMap::new();
    Some(solve(0, 0, &edges, &mut memo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ClassId;
    use crate::vgraph::CopyKind;

    fn edge(t2_real: u32, t1_real: u32, comp: u64) -> HelperEdge {
        HelperEdge {
            t2: VirtualNodeId::upper(t2_real, 2, CopyKind::Type2),
            t1: VirtualNodeId::upper(t1_real, 2, CopyKind::Type1),
            comp,
        }
    }

    fn helper_of(class: ClassId, edges: Vec<HelperEdge>) -> HelperGraph {
        let mut edges = edges;
        edges.sort_unstable();
        let t2_nodes = edges.iter().map(|e| (e.t2, e.comp)).collect();
        HelperGraph {
            class,
            t2_nodes,
            edges,
        }
    }

    #[test]
    fn empty_matching_on_empty_helper_is_maximal() {
        let h = helper_of(1, vec![]);
        let q = check_matching(&h, &[], 40).unwrap();
        assert!(q.valid && q.maximal);
        assert_eq!(q.maximum, Some(0));
        assert_eq!(q.ratio_ok, Some(true));
    }

    #[test]
    fn middle_edge_of_a_three_edge_path_is_maximal_at_half_the_maximum() {
        // t2 a - t1 x - t2 b - t1 y as a path: edges (a,x), (b,x), (b,y).
        let h = helper_of(1, vec![edge(0, 10, 5), edge(1, 10, 5), edge(1, 11, 5)]);
        let m = [edge(1, 10, 5)];
        let q = check_matching(&h, &m, 40).unwrap();
        assert!(q.valid && q.maximal);
        assert_eq!(q.maximum, Some(2));
        assert_eq!(q.ratio_ok, Some(true));
    }

    #[test]
    fn unmatched_available_edge_breaks_maximality() {
        let h = helper_of(1, vec![edge(0, 10, 5), edge(1, 11, 5)]);
        let q = check_matching(&h, &[edge(0, 10, 5)], 40).unwrap();
        assert!(q.valid && !q.maximal);
    }

    #[test]
    fn shared_endpoints_break_validity() {
        let h = helper_of(1, vec![edge(0, 10, 5), edge(0, 11, 5)]);
        let m = [edge(0, 10, 5), edge(0, 11, 5)];
        let q = check_matching(&h, &m, 40).unwrap();
        assert!(!q.valid);
    }

    #[test]
    fn same_type1_copy_may_serve_two_components() {
        let h = helper_of(1, vec![edge(0, 10, 5), edge(1, 10, 7)]);
        let m = [edge(0, 10, 5), edge(1, 10, 7)];
        let q = check_matching(&h, &m, 40).unwrap();
        assert!(q.valid && q.maximal);
        assert_eq!(q.maximum, Some(2));
    }

    #[test]
    fn foreign_edge_is_rejected() {
        let h = helper_of(1, vec![edge(0, 10, 5)]);
        assert!(check_matching(&h, &[edge(2, 12, 5)], 40).is_err());
    }

    #[test]
    fn node_cap_skips_the_exhaustive_maximum_but_not_maximality() {
        let h = helper_of(1, vec![edge(0, 10, 5), edge(1, 11, 5)]);
        let q = check_matching(&h, &[edge(0, 10, 5)], 2).unwrap();
        assert_eq!(q.maximum, None);
        assert_eq!(q.ratio_ok, None);
        assert!(!q.maximal);
    }
}
