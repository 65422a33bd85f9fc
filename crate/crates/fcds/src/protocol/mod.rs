//! The distributed packing protocol.
//!
//! Classes `1..=t` are assigned to virtual copies in two stages. Lower-layer
//! copies pick uniformly at random with no communication. Upper layers are
//! processed one at a time: the already-assigned copies' same-class
//! components are identified by min-id flooding, type-1 copies pick random
//! classes, and for every class a bipartite helper graph is built whose
//! edges are exactly the two-internal-node connector paths between distinct
//! components; a randomized maximal matching on it then tells each type-2
//! copy which component-joining edge it may serve, and it picks its class
//! accordingly (or uniformly at random if no matched edge survives).
//!
//! Everything runs through [`crate::sim`] with honest round accounting; the
//! driver is omniscient only for phase sequencing and fixpoint detection.

mod runner;
mod state;

use crate::graph::{Graph, RealId};
use crate::report::{MlTrajectory, RoundReport};
use crate::sim::SimError;
use crate::vgraph::{VirtualGraph, VirtualNodeId};
use serde::Serialize;
use thiserror::Error;

/// Class identifier, 1-based (`1..=t`).
pub type ClassId = u32;

/// Tunable protocol parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProtocolParams {
    /// Number of classes `t`.
    pub classes: u32,
    /// Number of lower layers `L` (total layers is `2L`, copies `3L`).
    pub layers: u32,
    pub seed: u64,
    /// Safety cap on component-flooding sweeps per layer.
    pub max_flood_sweeps: u32,
}

impl ProtocolParams {
    /// Defaults: `t = ceil(k/2)` (at least 1) and `L = ceil(log2 n)`
    /// (at least 1), with an optional multiplier on the layer count.
    pub fn defaults(n: usize, vertex_connectivity: usize, layer_multiplier: f64, seed: u64) -> Self {
        let t = ((vertex_connectivity + 1) / 2).max(1) as u32;
        ProtocolParams {
            classes: t,
            layers: layer_count(n, layer_multiplier),
            seed,
            max_flood_sweeps: n as u32 + 2,
        }
    }
}

/// `L = max(1, ceil(multiplier * log2(n)))`.
pub fn layer_count(n: usize, multiplier: f64) -> u32 {
    assert!(n >= 1 && multiplier > 0.0);
    ((multiplier * (n as f64).log2()).ceil() as u32).max(1)
}

/// Class choice of every virtual copy; write-once per copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassAssignment {
    classes: u32,
    slots: Vec<Option<ClassId>>,
}

impl ClassAssignment {
    pub fn new(vg: &VirtualGraph, classes: u32) -> Self {
        ClassAssignment {
            classes,
            slots: vec![None; vg.total_nodes() as usize],
        }
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    pub fn get(&self, vg: &VirtualGraph, id: VirtualNodeId) -> Option<ClassId> {
        self.slots[vg.encode(id) as usize]
    }

    pub fn get_encoded(&self, code: u64) -> Option<ClassId> {
        self.slots[code as usize]
    }

    /// Assigns a class; a copy's class is immutable once set.
    pub fn set(&mut self, vg: &VirtualGraph, id: VirtualNodeId, class: ClassId) {
        assert!(class >= 1 && class <= self.classes, "class {class} out of range");
        let slot = &mut self.slots[vg.encode(id) as usize];
        assert!(slot.is_none(), "copy {id} assigned twice");
        *slot = Some(class);
    }

    pub fn assigned_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.slots.iter().all(|s| s.is_some())
    }
}

/// Exact rational weights: node `v` carries class `i` with weight
/// `numerators[v][i-1] / denominator`, the numerator being the number of
/// `v`'s copies assigned to class `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FcdsPacking {
    /// Always `3L`.
    pub denominator: u32,
    pub numerators: Vec<Vec<u32>>,
}

/// Builds the packing from a complete assignment.
pub fn extract_packing(
    vg: &VirtualGraph,
    assignment: &ClassAssignment,
) -> Result<FcdsPacking, ProtocolError> {
    let denominator = vg.copies_per_node();
    let mut numerators = Vec::with_capacity(vg.base().n());
    for real in 0..vg.base().n() as RealId {
        let mut row = vec![0u32; assignment.classes() as usize];
        for slot in 0..denominator {
            let id = vg.id_of_slot(real, slot);
            let class = assignment
                .get(vg, id)
                .ok_or(ProtocolError::UnassignedCopy { id })?;
            row[class as usize - 1] += 1;
        }
        debug_assert_eq!(row.iter().sum::<u32>(), denominator);
        numerators.push(row);
    }
    Ok(FcdsPacking {
        denominator,
        numerators,
    })
}

/// One same-class component among already-assigned copies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// Encoded id of the minimum member (the protocol's component id).
    pub id: u64,
    /// Members in id order.
    pub members: Vec<VirtualNodeId>,
}

/// An edge of the helper graph (also the shape of a matched edge): a
/// type-2/type-1 pair attributed to exactly one component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct HelperEdge {
    pub t2: VirtualNodeId,
    pub t1: VirtualNodeId,
    /// Encoded id of the component this edge would extend.
    pub comp: u64,
}

/// Helper graph of one class on one upper layer, as built distributedly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelperGraph {
    pub class: ClassId,
    /// Qualified type-2 copies with the component they attach to (isolated
    /// ones included).
    pub t2_nodes: Vec<(VirtualNodeId, u64)>,
    pub edges: Vec<HelperEdge>,
}

/// Everything the protocol observed while processing one upper layer.
#[derive(Clone, Debug)]
pub struct LayerArtifacts {
    pub layer: u32,
    /// Per class: components of the already-assigned copies, sorted by id.
    pub components: Vec<Vec<Component>>,
    /// Per class: the helper graph.
    pub helpers: Vec<HelperGraph>,
    /// Per class: the matched edges.
    pub matchings: Vec<Vec<HelperEdge>>,
    /// Per class: true if the matching loop hit its round cap.
    pub matching_truncated: Vec<bool>,
}

/// Full per-run trace consumed by the verification oracles.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub per_layer: Vec<LayerArtifacts>,
}

/// Result of a complete protocol run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub params: ProtocolParams,
    pub assignment: ClassAssignment,
    pub packing: FcdsPacking,
    pub rounds: RoundReport,
    pub trajectory: MlTrajectory,
    pub artifacts: RunArtifacts,
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("base graph must be connected")]
    DisconnectedBase,
    #[error("virtual copy {id} has no class after the run")]
    UnassignedCopy { id: VirtualNodeId },
    #[error("layer {layer} class {class}: helper construction used {rounds} rounds (limit {limit})")]
    HelperRoundsExceeded {
        layer: u32,
        class: ClassId,
        rounds: u64,
        limit: u64,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Runs the full protocol on a connected base graph.
pub fn run_full(g: &Graph, params: &ProtocolParams) -> Result<RunOutput, ProtocolError> {
    if !g.is_connected() || g.n() == 0 {
        return Err(ProtocolError::DisconnectedBase);
    }
    runner::Runner::new(g, *params).run()
}

/// Number of connected components formed by the class-`class` copies on
/// layers `1..=max_layer` under the derived adjacency (BFS route; the
/// verification oracle recomputes this independently).
pub fn count_class_components(
    vg: &VirtualGraph,
    assignment: &ClassAssignment,
    max_layer: u32,
    class: ClassId,
) -> u32 {
    let total = vg.total_nodes() as usize;
    let copies = vg.copies_per_node();
    let mut member = vec![false; total];
    for code in 0..total {
        if assignment.get_encoded(code as u64) == Some(class)
            && vg.decode(code as u64).layer <= max_layer
        {
            member[code] = true;
        }
    }
    let mut seen = vec![false; total];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..total {
        if !member[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(code) = stack.pop() {
            let real = (code as u64 / copies as u64) as RealId;
            let same = std::iter::once(real);
            for nr in same.chain(vg.base().neighbors(real).iter().copied()) {
                let base = nr as usize * copies as usize;
                for slot in 0..copies as usize {
                    let c2 = base + slot;
                    if member[c2] && !seen[c2] && c2 != code {
                        seen[c2] = true;
                        stack.push(c2);
                    }
                }
            }
        }
    }
    count
}

/// Component trajectory over cumulative layer prefixes `L..=2L`.
pub fn compute_trajectory(vg: &VirtualGraph, assignment: &ClassAssignment) -> MlTrajectory {
    let layers: Vec<u32> = (vg.layers()..=vg.top_layer()).collect();
    let per_class = (1..=assignment.classes())
        .map(|class| {
            layers
                .iter()
                .map(|&l| count_class_components(vg, assignment, l, class))
                .collect()
        })
        .collect();
    MlTrajectory { layers, per_class }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_harary;
    use crate::vgraph::CopyKind;

    #[test]
    fn default_parameters_follow_connectivity_and_size() {
        let p = ProtocolParams::defaults(16, 15, 1.0, 0);
        assert_eq!(p.classes, 8);
        assert_eq!(p.layers, 4);
        let p = ProtocolParams::defaults(40, 8, 2.0, 0);
        assert_eq!(p.classes, 4);
        assert_eq!(p.layers, 11);
        let p = ProtocolParams::defaults(1, 0, 1.0, 0);
        assert_eq!(p.classes, 1);
        assert_eq!(p.layers, 1);
    }

    #[test]
    fn assignment_is_write_once() {
        let g = generate_harary(4, 2).unwrap();
        let vg = VirtualGraph::new(&g, 1);
        let mut asg = ClassAssignment::new(&vg, 2);
        let id = VirtualNodeId::lower(0, 1);
        asg.set(&vg, id, 2);
        assert_eq!(asg.get(&vg, id), Some(2));
        assert_eq!(asg.assigned_count(), 1);
        let res = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            let mut a = asg.clone();
            a.set(&vg, id, 1);
        }));
        assert!(res.is_err());
    }

    #[test]
    fn packing_counts_copies_per_class() {
        let g = generate_harary(4, 2).unwrap();
        let vg = VirtualGraph::new(&g, 1);
        let mut asg = ClassAssignment::new(&vg, 2);
        for real in 0..4 {
            asg.set(&vg, VirtualNodeId::lower(real, 1), 1);
            asg.set(&vg, VirtualNodeId::upper(real, 2, CopyKind::Type1), 2);
            asg.set(&vg, VirtualNodeId::upper(real, 2, CopyKind::Type2), 1);
        }
        let packing = extract_packing(&vg, &asg).unwrap();
        assert_eq!(packing.denominator, 3);
        assert!(packing.numerators.iter().all(|row| row == &vec![2, 1]));
    }

    #[test]
    fn packing_rejects_incomplete_assignments() {
        let g = generate_harary(4, 2).unwrap();
        let vg = VirtualGraph::new(&g, 1);
        let asg = ClassAssignment::new(&vg, 2);
        assert!(matches!(
            extract_packing(&vg, &asg),
            Err(ProtocolError::UnassignedCopy { .. })
        ));
    }

    #[test]
    fn component_counting_on_alternating_cycle() {
        // C4 with alternating lower-layer classes: each class forms two
        // single-copy components (opposite corners are non-adjacent).
        let g = generate_harary(4, 2).unwrap();
        let vg = VirtualGraph::new(&g, 1);
        let mut asg = ClassAssignment::new(&vg, 2);
        for real in 0..4u32 {
            asg.set(&vg, VirtualNodeId::lower(real, 1), (real % 2) + 1);
        }
        assert_eq!(count_class_components(&vg, &asg, 1, 1), 2);
        assert_eq!(count_class_components(&vg, &asg, 1, 2), 2);
    }

    #[test]
    fn full_run_assigns_every_copy_and_accounts_rounds() {
        let g = generate_harary(4, 3).unwrap();
        let params = ProtocolParams {
            classes: 2,
            layers: 2,
            seed: 11,
            max_flood_sweeps: 8,
        };
        let out = run_full(&g, &params).unwrap();
        assert!(out.assignment.is_complete());
        assert_eq!(out.packing.denominator, 6);
        assert!(out.packing.numerators.iter().all(|r| r.iter().sum::<u32>() == 6));
        assert_eq!(out.trajectory.layers, vec![2, 3, 4]);
        assert_eq!(out.rounds.per_layer.len(), 2);
        assert_eq!(out.rounds.rounds_total, out.rounds.rounds_per_phase.total());
        assert!(out.rounds.max_edge_messages_per_matching_round <= 2);
        assert!(out.artifacts.per_layer.iter().all(|l| !l.matching_truncated.iter().any(|&b| b)));
    }

    #[test]
    fn runs_are_reproducible() {
        let g = generate_harary(6, 3).unwrap();
        let params = ProtocolParams {
            classes: 2,
            layers: 3,
            seed: 42,
            max_flood_sweeps: 10,
        };
        let a = run_full(&g, &params).unwrap();
        let b = run_full(&g, &params).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.packing, b.packing);
        assert_eq!(
            serde_json::to_string(&a.rounds).unwrap(),
            serde_json::to_string(&b.rounds).unwrap()
        );
    }

    #[test]
    fn seeds_change_the_outcome() {
        let g = generate_harary(8, 4).unwrap();
        let mk = |seed| ProtocolParams {
            classes: 2,
            layers: 3,
            seed,
            max_flood_sweeps: 12,
        };
        let outputs: Vec<_> = (0..4)
            .map(|s| run_full(&g, &mk(s)).unwrap().assignment)
            .collect();
        assert!(outputs.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn single_node_graph_runs() {
        let g = Graph::new(1);
        let params = ProtocolParams {
            classes: 1,
            layers: 1,
            seed: 0,
            max_flood_sweeps: 3,
        };
        let out = run_full(&g, &params).unwrap();
        assert!(out.assignment.is_complete());
        assert_eq!(out.trajectory.per_class, vec![vec![1, 1]]);
    }

    #[test]
    fn disconnected_base_is_rejected() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]);
        let params = ProtocolParams::defaults(4, 1, 1.0, 0);
        assert!(matches!(
            run_full(&g, &params),
            Err(ProtocolError::DisconnectedBase)
        ));
    }
}
