//! Centralized brute-force verification of protocol runs.
//!
//! Every verdict here comes from an exact, exhaustive computation that
//! shares no algorithmic code with the protocol: components are recomputed
//! with union-find instead of flooding or BFS, connector paths are
//! enumerated from the definition, and matchings are compared against an
//! exhaustive optimum. Agreement between the two sides is the evidence the
//! test suite builds on.

pub mod checks;
pub mod matching;
pub mod paths;

pub use checks::{
    check_domination, check_domination_prefix, class_connectivity, old_components,
    oracle_trajectory, verify_packing, ClassConnectivity, Dsu,
};
pub use matching::{
    check_matching, maximum_matching, MatchingError, MatchingQuality, DEFAULT_MAX_MATCHING_NODES,
};
pub use paths::{
    component_view, enumerate_connector_paths, helper_matches_long_paths,
    max_disjoint_connector_paths, ComponentView, ConnectorPath,
};

use crate::graph::Graph;
use crate::protocol::RunOutput;
use crate::vgraph::VirtualGraph;
use serde::Serialize;

/// How much of the oracle to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyLevel {
    /// Consistency and outcome checks: domination, connectivity, packing,
    /// component maps, trajectory, matching validity and quality.
    Structural,
    /// Everything above plus exhaustive connector-path enumeration, the
    /// helper-edge equivalence, and exact disjoint-path capacities.
    Full,
}

/// Size caps above which exhaustive computations report "skipped".
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleCaps {
    pub max_matching_nodes: usize,
    pub max_path_pairs: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_matching_nodes: DEFAULT_MAX_MATCHING_NODES,
            max_path_pairs: 200_000,
        }
    }
}

/// Outcome for one class of the final assignment.
#[derive(Clone, Debug, Serialize)]
pub struct ClassVerdict {
    pub class: u32,
    pub dominating: bool,
    pub connected: bool,
    /// Set when the class has no copies; `connected` is then false.
    pub empty: bool,
}

/// Path statistics for one component of one class on one layer.
#[derive(Clone, Debug, Serialize)]
pub struct ComponentVerdict {
    pub layer: u32,
    pub class: u32,
    pub component: u64,
    pub short_paths: u64,
    pub long_paths: u64,
    /// Exact capacity, or `None` if the instance exceeded the cap.
    pub max_disjoint_paths: Option<u32>,
    /// Helper edges equal the long paths' internal pairs, as sets.
    pub helper_edges_match_long_paths: bool,
}

/// Matching quality for one class on one layer.
#[derive(Clone, Debug, Serialize)]
pub struct MatchingVerdict {
    pub layer: u32,
    pub class: u32,
    pub valid: bool,
    pub maximal: bool,
    /// True when the protocol hit its cycle cap; maximality is then not
    /// guaranteed by construction.
    pub truncated: bool,
    pub matched: u32,
    pub maximum: Option<u32>,
    pub ratio_ok: Option<bool>,
}

/// Full verification verdict; serialized into run documents.
#[derive(Clone, Debug, Serialize)]
pub struct VerifierReport {
    pub level: VerifyLevel,
    pub classes: Vec<ClassVerdict>,
    /// Classes that dominate and are connected.
    pub valid_cds_count: u32,
    pub packing_valid: bool,
    /// Recomputed per-layer component maps equal the protocol's.
    pub components_consistent: bool,
    /// Recomputed component trajectory equals the protocol's.
    pub trajectory_consistent: bool,
    /// Per class: component counts over cumulative layer prefixes.
    pub ml_trajectory: Vec<Vec<u32>>,
    pub matchings: Vec<MatchingVerdict>,
    /// Per-component path statistics; populated at the full level.
    pub components: Vec<ComponentVerdict>,
}

impl VerifierReport {
    /// True iff no internal inconsistency was found. Per-class outcomes
    /// (domination, connectivity) are results, not soundness conditions.
    pub fn structurally_sound(&self) -> bool {
        self.packing_valid
            && self.components_consistent
            && self.trajectory_consistent
            && self
                .matchings
                .iter()
                .all(|m| m.valid && (m.maximal || m.truncated) && m.ratio_ok.unwrap_or(true))
            && self.components.iter().all(|c| c.helper_edges_match_long_paths)
    }
}

/// Runs the oracle suite against a completed run.
pub fn verify_run(
    base: &Graph,
    out: &RunOutput,
    level: VerifyLevel,
    caps: OracleCaps,
) -> Result<VerifierReport, MatchingError> {
    let vg = VirtualGraph::new(base, out.params.layers);
    let t = out.params.classes;

    let mut classes = Vec::with_capacity(t as usize);
    let mut valid_cds_count = 0;
    for class in 1..=t {
        let dominating = check_domination(&vg, &out.assignment, class);
        let conn = class_connectivity(&vg, &out.assignment, class);
        let connected = conn == ClassConnectivity::Connected;
        if dominating && connected {
            valid_cds_count += 1;
        }
        classes.push(ClassVerdict {
            class,
            dominating,
            connected,
            empty: conn == ClassConnectivity::Empty,
        });
    }

    let packing_valid = verify_packing(&out.packing, &vg, &out.assignment);
    let ml_trajectory = oracle_trajectory(&vg, &out.assignment);
    let trajectory_consistent = ml_trajectory == out.trajectory.per_class;

    let mut components_consistent = true;
    let mut matchings = Vec::new();
    let mut components = Vec::new();
    for la in &out.artifacts.per_layer {
        for class in 1..=t {
            let idx = class as usize - 1;
            if old_components(&vg, &out.assignment, class, la.layer) != la.components[idx] {
                components_consistent = false;
            }
            let q = check_matching(&la.helpers[idx], &la.matchings[idx], caps.max_matching_nodes)?;
            matchings.push(MatchingVerdict {
                layer: la.layer,
                class,
                valid: q.valid,
                maximal: q.maximal,
                truncated: la.matching_truncated[idx],
                matched: q.matched,
                maximum: q.maximum,
                ratio_ok: q.ratio_ok,
            });
            if level == VerifyLevel::Full {
                let view = component_view(&vg, &la.components[idx]);
                for comp in &la.components[idx] {
                    let paths = enumerate_connector_paths(&vg, &view, la.layer, comp.id);
                    let long_paths = paths.iter().filter(|p| p.is_long()).count() as u64;
                    components.push(ComponentVerdict {
                        layer: la.layer,
                        class,
                        component: comp.id,
                        short_paths: paths.len() as u64 - long_paths,
                        long_paths,
                        max_disjoint_paths: max_disjoint_connector_paths(
                            &paths,
                            caps.max_path_pairs,
                        ),
                        helper_edges_match_long_paths: helper_matches_long_paths(
                            &la.helpers[idx],
                            &paths,
                            comp.id,
                        ),
                    });
                }
            }
        }
    }

    Ok(VerifierReport {
        level,
        classes,
        valid_cds_count,
        packing_valid,
        components_consistent,
        trajectory_consistent,
        ml_trajectory,
        matchings,
        components,
    })
}
