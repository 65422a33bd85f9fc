//! Per-node protocol state and the message vocabulary.

use super::ClassId;
use crate::graph::RealId;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Message tags. Every message self-describes its purpose in 8 bits.
pub const TAG_FLOOD: u8 = 1;
pub const TAG_ANNOUNCE: u8 = 2;
pub const TAG_T1_CLASS: u8 = 3;
pub const TAG_HELPER_T2: u8 = 4;
pub const TAG_HELPER_T1: u8 = 5;
pub const TAG_PROPOSE: u8 = 6;
pub const TAG_ACCEPT: u8 = 7;

/// State of this node's type-2 copy while one class is being processed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct T2State {
    /// The single component this copy could attach to.
    pub comp: u64,
    /// Type-1 partners that confirmed a helper edge, sorted.
    pub edges: Vec<RealId>,
    /// Partners whose matching slot for `comp`'s class is known taken.
    pub partner_matched: BTreeSet<RealId>,
    /// Partner this copy got matched to, if any.
    pub matched: Option<RealId>,
}

/// One helper-graph slot of this node's type-1 copy: the copy participates
/// once per component it could connect to something else.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct T1Side {
    /// Type-2 partners with a confirmed helper edge, sorted.
    pub edges: Vec<RealId>,
    /// Type-2 partner accepted for this slot, if any.
    pub matched: Option<RealId>,
}

/// Everything one real node remembers. All per-layer fields are reset by
/// the driver between layers; per-class fields between classes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeState {
    /// Chosen class per copy slot (`0..3L`), `None` until assigned.
    pub own_class: Vec<Option<ClassId>>,
    /// Per class: running component-id minimum over this node's already
    /// assigned copies of that class; `None` if it has none.
    pub flood_min: Vec<Option<u64>>,
    /// Per class: component ids announced by neighbors' assigned copies.
    pub neighbor_comps: Vec<BTreeSet<u64>>,
    /// Class picked by each neighbor's type-1 copy on the current layer.
    pub neighbor_t1_class: BTreeMap<RealId, ClassId>,
    /// Type-2 participation in the helper graph of the current class.
    pub t2: Option<T2State>,
    /// Type-1 participation, keyed by component id.
    pub t1: BTreeMap<u64, T1Side>,
    /// Helper-edge confirmations still to send: `(component, target)`.
    pub helper_queue: VecDeque<(u64, RealId)>,
    /// Acceptances still to send: `(component, target)`.
    pub accept_queue: VecDeque<(u64, RealId)>,
    /// Matched edges this node's type-2 copy won this layer, per class:
    /// `(type-1 partner, component)`.
    pub t2_matches: BTreeMap<ClassId, (RealId, u64)>,
}

impl NodeState {
    pub fn new(copies: u32, classes: u32) -> Self {
        NodeState {
            own_class: vec![None; copies as usize],
            flood_min: vec![None; classes as usize],
            neighbor_comps: vec![BTreeSet::new(); classes as usize],
            ..Default::default()
        }
    }

    /// Clears per-layer knowledge before a new layer's component phase.
    /// `own_comp_min` gives the minimum encoded id of this node's assigned
    /// copies per class, or `None`.
    pub fn reset_layer(&mut self, own_comp_min: &[Option<u64>]) {
        self.flood_min = own_comp_min.to_vec();
        for set in &mut self.neighbor_comps {
            set.clear();
        }
        self.neighbor_t1_class.clear();
        self.reset_class();
        self.t2_matches.clear();
    }

    /// Clears per-class helper and matching state.
    pub fn reset_class(&mut self) {
        self.t2 = None;
        self.t1.clear();
        self.helper_queue.clear();
        self.accept_queue.clear();
    }

    /// Merges a flooded component id into the given class's minimum.
    /// No-op for classes this node has no assigned copies of.
    pub fn merge_flood(&mut self, class: ClassId, value: u64) {
        if let Some(cur) = self.flood_min[class as usize - 1] {
            if value < cur {
                self.flood_min[class as usize - 1] = Some(value);
            }
        }
    }

    /// Whether this node's type-1 copy qualifies for the helper slot of
    /// component `comp` in class `class`: it must see no copy of `comp`
    /// (its own included) but some other component of the class.
    pub fn t1_qualifies(&self, class: ClassId, comp: u64) -> bool {
        let own = self.flood_min[class as usize - 1];
        let nb = &self.neighbor_comps[class as usize - 1];
        let sees_comp = own == Some(comp) || nb.contains(&comp);
        let sees_other =
            own.is_some_and(|c| c != comp) || nb.iter().any(|&c| c != comp);
        !sees_comp && sees_other
    }

    /// Component the type-2 copy can attach to, if it qualifies: the node
    /// has no assigned copy of the class and sees exactly one component.
    pub fn t2_component(&self, class: ClassId) -> Option<u64> {
        let nb = &self.neighbor_comps[class as usize - 1];
        if self.flood_min[class as usize - 1].is_none() && nb.len() == 1 {
            Some(*nb.iter().next().unwrap())
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_with(own: Option<u64>, neighbors: &[u64]) -> NodeState {
        let mut st = NodeState::new(3, 1);
        st.flood_min[0] = own;
        st.neighbor_comps[0] = neighbors.iter().copied().collect();
        st
    }

    #[test]
    fn type2_needs_exactly_one_foreign_component() {
        assert_eq!(state_with(None, &[7]).t2_component(1), Some(7));
        assert_eq!(state_with(None, &[7, 9]).t2_component(1), None);
        assert_eq!(state_with(None, &[]).t2_component(1), None);
        assert_eq!(state_with(Some(7), &[7]).t2_component(1), None);
    }

    #[test]
    fn type1_needs_a_different_component_and_no_contact_with_the_target() {
        // Sees 9 but not 7: qualifies for 7.
        assert!(state_with(None, &[9]).t1_qualifies(1, 7));
        // Own copy in 7: contact, disqualified.
        assert!(!state_with(Some(7), &[9]).t1_qualifies(1, 7));
        // Neighbor in 7: contact, disqualified.
        assert!(!state_with(None, &[7, 9]).t1_qualifies(1, 7));
        // Sees nothing else: nothing to connect 7 to.
        assert!(!state_with(None, &[]).t1_qualifies(1, 7));
        // Own copy in another component counts as "something else".
        assert!(state_with(Some(9), &[]).t1_qualifies(1, 7));
    }

    #[test]
    fn flood_merge_only_lowers_and_only_for_carried_classes() {
        let mut st = NodeState::new(3, 2);
        st.flood_min[0] = Some(10);
        st.merge_flood(1, 12);
        assert_eq!(st.flood_min[0], Some(10));
        st.merge_flood(1, 4);
        assert_eq!(st.flood_min[0], Some(4));
        st.merge_flood(2, 1);
        assert_eq!(st.flood_min[1], None);
    }
}
