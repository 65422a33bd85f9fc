//! Run reports: round accounting, per-layer summaries, and the component
//! trajectory. All types serialize with a fixed field order and contain no
//! wall-clock data, so reports are byte-stable for a fixed configuration and
//! seed.

use serde::Serialize;

/// Rounds consumed by each protocol phase.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PhaseRounds {
    /// Component identification sweeps plus the announcement sweep.
    pub component_id: u64,
    /// One round per upper layer in which type-1 copies announce classes.
    pub type1_announce: u64,
    /// Helper-graph construction rounds across all classes.
    pub helper: u64,
    /// Matching rounds (proposal, acceptance, drain) across all classes.
    pub matching: u64,
}

impl PhaseRounds {
    pub fn total(&self) -> u64 {
        self.component_id + self.type1_announce + self.helper + self.matching
    }
}

/// Per-upper-layer observability data.
#[derive(Clone, Debug, Serialize)]
pub struct LayerSummary {
    pub layer: u32,
    pub rounds_component_id: u64,
    pub rounds_type1_announce: u64,
    pub rounds_helper: u64,
    pub rounds_matching: u64,
    /// True if component flooding hit its round cap before converging.
    pub flood_truncated: bool,
    /// Component count per class among the already-assigned layers, as
    /// identified by the distributed flooding.
    pub components_per_class: Vec<u32>,
    /// Rounds each class spent building its helper graph (bounded by the
    /// base maximum degree plus two).
    pub helper_rounds_per_class: Vec<u32>,
    pub helper_edges_per_class: Vec<u32>,
    pub matched_edges_per_class: Vec<u32>,
    pub matching_rounds_per_class: Vec<u32>,
    /// Classes whose matching loop hit the logarithmic round cap.
    pub matching_truncated_classes: Vec<u32>,
}

/// Round and message accounting for one full protocol run.
#[derive(Clone, Debug, Serialize)]
pub struct RoundReport {
    pub rounds_total: u64,
    pub rounds_per_phase: PhaseRounds,
    pub messages_sent: u64,
    /// Maximum number of addressed messages any directed real edge carried
    /// within a single matching round (hard limit 2).
    pub max_edge_messages_per_matching_round: u32,
    pub per_layer: Vec<LayerSummary>,
}

/// Per-class component counts over cumulative layer prefixes.
///
/// `counts[c][i]` is the number of connected components formed by the
/// class-`c+1` virtual nodes on layers `1..=layers[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MlTrajectory {
    /// Evaluated layer prefixes: `L, L+1, ..., 2L`.
    pub layers: Vec<u32>,
    pub per_class: Vec<Vec<u32>>,
}

impl MlTrajectory {
    /// True iff every class's count sequence never increases.
    pub fn is_non_increasing(&self) -> bool {
        self.per_class
            .iter()
            .all(|row| row.windows(2).all(|w| w[0] >= w[1]))
    }

    /// Sum over classes at the first evaluated prefix (lower layers only).
    pub fn initial_total(&self) -> u32 {
        self.per_class.iter().map(|row| row.first().copied().unwrap_or(0)).sum()
    }

    /// Sum over classes at the last evaluated prefix (all layers).
    pub fn final_total(&self) -> u32 {
        self.per_class.iter().map(|row| row.last().copied().unwrap_or(0)).sum()
    }
}
