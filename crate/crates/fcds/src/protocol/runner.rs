//! Phase driver: sequences the protocol's rounds on the simulator.
//!
//! The driver is allowed to read node states between rounds for phase
//! scheduling (fixpoint detection, loop exits) and to perform the
//! zero-communication steps (local random choices, per-layer resets), but
//! every piece of information a node acts on during a round arrived either
//! locally or through delivered messages.

use super::state::*;
use super::{
    ClassAssignment, ClassId, Component, HelperEdge, HelperGraph, LayerArtifacts, ProtocolError,
    ProtocolParams, RunArtifacts, RunOutput,
};
use crate::graph::{Graph, RealId};
use crate::report::{LayerSummary, PhaseRounds, RoundReport};
use crate::sim::rng::seeded_rng;
use crate::sim::{Envelope, MessageBudget, NodeCtx, SimMessage, Simulator};
use crate::vgraph::{CopyKind, VirtualGraph, VirtualNodeId};
use std::collections::BTreeMap;

/// Round sentinel for the lower-layer draws, which happen before round 0.
const ROUND_LOWER: u64 = u64::MAX;
/// Stream slots for single draws; disjoint from copy-slot indices.
const SLOT_T1_CLASS: u64 = 1 << 32;
const SLOT_T2_CLASS: u64 = (1 << 32) + 1;
/// Base slot for per-edge matching labels.
const SLOT_LABEL_BASE: u64 = 1 << 33;

pub(super) struct Runner<'g> {
    vg: VirtualGraph<'g>,
    params: ProtocolParams,
    sim: Simulator<'g, NodeState>,
    assignment: ClassAssignment,
    /// Matching labels are drawn from `[0, N^4)` for `N` virtual nodes.
    label_bound: u64,
    /// Cap on proposal/acceptance cycles per class: `8 * ceil(log2 N)`.
    matching_cap: u64,
    phase: PhaseRounds,
    layers: Vec<LayerSummary>,
    artifacts: Vec<LayerArtifacts>,
}

impl<'g> Runner<'g> {
    pub(super) fn new(g: &'g Graph, params: ProtocolParams) -> Self {
        let vg = VirtualGraph::new(g, params.layers);
        let n_virtual = vg.total_nodes();
        let label_bound = (n_virtual as u128).pow(4).min(u64::MAX as u128) as u64;
        let matching_cap = 8 * ceil_log2(n_virtual).max(1) as u64;
        let states = vec![NodeState::new(vg.copies_per_node(), params.classes); g.n()];
        let sim = Simulator::new(
            g,
            params.seed,
            MessageBudget::for_virtual_node_count(n_virtual),
            states,
        );
        let assignment = ClassAssignment::new(&vg, params.classes);
        Runner {
            vg,
            params,
            sim,
            assignment,
            label_bound,
            matching_cap,
            phase: PhaseRounds::default(),
            layers: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub(super) fn run(mut self) -> Result<RunOutput, ProtocolError> {
        self.assign_lower_layers();
        for layer in (self.vg.layers() + 1)..=self.vg.top_layer() {
            self.run_layer(layer)?;
        }
        debug_assert!(self.assignment.is_complete());
        let packing = super::extract_packing(&self.vg, &self.assignment)?;
        let trajectory = super::compute_trajectory(&self.vg, &self.assignment);
        let rounds_total = self.sim.round();
        debug_assert_eq!(rounds_total, self.phase.total());
        let rounds = RoundReport {
            rounds_total,
            rounds_per_phase: self.phase,
            messages_sent: self.sim.counters().messages_sent,
            max_edge_messages_per_matching_round: self.sim.counters().max_window_edge_messages,
            per_layer: self.layers,
        };
        Ok(RunOutput {
            params: self.params,
            assignment: self.assignment,
            packing,
            rounds,
            trajectory,
            artifacts: RunArtifacts {
                per_layer: self.artifacts,
            },
        })
    }

    /// Every lower-layer copy picks a uniform class locally; no rounds.
    fn assign_lower_layers(&mut self) {
        let t = self.params.classes as u64;
        let seed = self.params.seed;
        for real in 0..self.sim.graph().n() as RealId {
            for layer in 1..=self.vg.layers() {
                let class =
                    (seeded_rng(seed, real as u64, ROUND_LOWER, (layer - 1) as u64).below(t) + 1)
                        as ClassId;
                let id = VirtualNodeId::lower(real, layer);
                let slot = self.vg.slot_of(id) as usize;
                self.sim.states_mut()[real as usize].own_class[slot] = Some(class);
                self.assignment.set(&self.vg, id, class);
            }
        }
    }

    fn run_layer(&mut self, layer: u32) -> Result<(), ProtocolError> {
        self.reset_layer_state();
        let start = self.sim.round();
        let (components, flood_truncated) = self.identify_components()?;
        let rounds_component_id = self.sim.round() - start;
        self.assign_type1(layer)?;

        let t = self.params.classes;
        let mut helpers = Vec::with_capacity(t as usize);
        let mut matchings = Vec::with_capacity(t as usize);
        let mut matching_truncated = Vec::with_capacity(t as usize);
        let mut matching_rounds_per_class = Vec::with_capacity(t as usize);
        let mut helper_rounds_per_class = Vec::with_capacity(t as usize);
        let mut rounds_helper = 0;
        let mut rounds_matching = 0;
        for class in 1..=t {
            let h0 = self.sim.round();
            helpers.push(self.build_helper(layer, class)?);
            helper_rounds_per_class.push((self.sim.round() - h0) as u32);
            rounds_helper += self.sim.round() - h0;
            let m0 = self.sim.round();
            let (matched, cycles, truncated) = self.run_matching(layer, class)?;
            rounds_matching += self.sim.round() - m0;
            matchings.push(matched);
            matching_rounds_per_class.push(cycles);
            matching_truncated.push(truncated);
        }
        self.select_type2(layer);

        self.layers.push(LayerSummary {
            layer,
            rounds_component_id,
            rounds_type1_announce: 1,
            rounds_helper,
            rounds_matching,
            flood_truncated,
            components_per_class: components.iter().map(|c| c.len() as u32).collect(),
            helper_rounds_per_class,
            helper_edges_per_class: helpers.iter().map(|h| h.edges.len() as u32).collect(),
            matched_edges_per_class: matchings.iter().map(|m| m.len() as u32).collect(),
            matching_rounds_per_class,
            matching_truncated_classes: matching_truncated
                .iter()
                .enumerate()
                .filter(|&(_, &b)| b)
                .map(|(i, _)| i as u32 + 1)
                .collect(),
        });
        self.phase.component_id += rounds_component_id;
        self.phase.type1_announce += 1;
        self.phase.helper += rounds_helper;
        self.phase.matching += rounds_matching;
        self.artifacts.push(LayerArtifacts {
            layer,
            components,
            helpers,
            matchings,
            matching_truncated,
        });
        Ok(())
    }

    /// Re-seeds each node's per-class component minimum from its own
    /// assigned copies and clears all other layer-scoped knowledge.
    fn reset_layer_state(&mut self) {
        let copies = self.vg.copies_per_node() as u64;
        let classes = self.params.classes as usize;
        for (real, st) in self.sim.states_mut().iter_mut().enumerate() {
            let mut mins = vec![None; classes];
            for (slot, class) in st.own_class.iter().enumerate() {
                if let Some(c) = class {
                    let code = real as u64 * copies + slot as u64;
                    let entry = &mut mins[*c as usize - 1];
                    if entry.map_or(true, |m| code < m) {
                        *entry = Some(code);
                    }
                }
            }
            st.reset_layer(&mins);
        }
    }

    /// Min-id flooding over same-class assigned copies, one copy slot per
    /// round, until a full sweep passes with no change; then one announce
    /// sweep so every node learns the component ids around it.
    fn identify_components(&mut self) -> Result<(Vec<Vec<Component>>, bool), ProtocolError> {
        let copies = self.vg.copies_per_node() as u64;
        let start = self.sim.round();
        let mut truncated = true;
        for _ in 0..self.params.max_flood_sweeps {
            let mut changed = false;
            for _ in 0..copies {
                let stats = self.sim.run_round("component_id", |ctx, st, inbox| {
                    let mut next = st.clone();
                    for env in inbox {
                        if env.msg.tag == TAG_FLOOD {
                            next.merge_flood(env.msg.fields[0] as ClassId, env.msg.fields[1]);
                        }
                    }
                    let slot = ((ctx.round - start) % copies) as usize;
                    let out = next.own_class[slot].map(|class| {
                        let value = next.flood_min[class as usize - 1]
                            .expect("assigned copy implies a component value");
                        SimMessage::broadcast(TAG_FLOOD, vec![class as u64, value])
                    });
                    (next, out)
                })?;
                changed |= stats.state_changed;
            }
            if !changed {
                truncated = false;
                break;
            }
        }

        let announce_start = self.sim.round();
        for _ in 0..copies {
            self.sim.run_round("component_id", |ctx, st, inbox| {
                let mut next = st.clone();
                for env in inbox {
                    match env.msg.tag {
                        // Leftover flood traffic; a no-op once converged.
                        TAG_FLOOD => {
                            next.merge_flood(env.msg.fields[0] as ClassId, env.msg.fields[1])
                        }
                        TAG_ANNOUNCE => {
                            let class = env.msg.fields[0] as usize;
                            next.neighbor_comps[class - 1].insert(env.msg.fields[1]);
                        }
                        _ => {}
                    }
                }
                let slot = ((ctx.round - announce_start) % copies) as usize;
                let out = next.own_class[slot].map(|class| {
                    let value = next.flood_min[class as usize - 1]
                        .expect("assigned copy implies a component value");
                    SimMessage::broadcast(TAG_ANNOUNCE, vec![class as u64, value])
                });
                (next, out)
            })?;
        }
        Ok((self.snapshot_components(truncated), truncated))
    }

    /// Groups assigned copies by their flooded component id.
    fn snapshot_components(&self, truncated: bool) -> Vec<Vec<Component>> {
        let copies = self.vg.copies_per_node();
        let mut per_class: Vec<BTreeMap<u64, Vec<VirtualNodeId>>> =
            vec![BTreeMap::new(); self.params.classes as usize];
        for (real, st) in self.sim.states().iter().enumerate() {
            for slot in 0..copies {
                if let Some(class) = st.own_class[slot as usize] {
                    let comp = st.flood_min[class as usize - 1]
                        .expect("assigned copy implies a component value");
                    per_class[class as usize - 1]
                        .entry(comp)
                        .or_default()
                        .push(self.vg.id_of_slot(real as RealId, slot));
                }
            }
        }
        per_class
            .into_iter()
            .map(|groups| {
                groups
                    .into_iter()
                    .map(|(id, mut members)| {
                        members.sort_unstable();
                        debug_assert!(
                            truncated || id == self.vg.encode(members[0]),
                            "component id must be its minimum member"
                        );
                        Component { id, members }
                    })
                    .collect()
            })
            .collect()
    }

    /// Every type-1 copy picks a uniform class and announces it (1 round).
    fn assign_type1(&mut self, layer: u32) -> Result<(), ProtocolError> {
        let t = self.params.classes as u64;
        let t1_slot = self.vg.slot_of(VirtualNodeId::upper(0, layer, CopyKind::Type1)) as usize;
        self.sim.run_round("type1_announce", |ctx, st, inbox| {
            let mut next = st.clone();
            for env in inbox {
                match env.msg.tag {
                    // The announce sweep's final round lands here.
                    TAG_FLOOD => next.merge_flood(env.msg.fields[0] as ClassId, env.msg.fields[1]),
                    TAG_ANNOUNCE => {
                        let class = env.msg.fields[0] as usize;
                        next.neighbor_comps[class - 1].insert(env.msg.fields[1]);
                    }
                    _ => {}
                }
            }
            let class = (ctx.draw(SLOT_T1_CLASS, t) + 1) as ClassId;
            next.own_class[t1_slot] = Some(class);
            (next, Some(SimMessage::broadcast(TAG_T1_CLASS, vec![class as u64])))
        })?;
        for real in 0..self.sim.graph().n() as RealId {
            let class = self.sim.states()[real as usize].own_class[t1_slot]
                .expect("type-1 class chosen this round");
            self.assignment
                .set(&self.vg, VirtualNodeId::upper(real, layer, CopyKind::Type1), class);
        }
        Ok(())
    }

    /// Builds the helper graph for one class: qualified type-2 copies
    /// broadcast their component (1 round), type-1 copies confirm each
    /// qualifying proposal round-robin (at most one response per proposer,
    /// so at most max-degree rounds), and one more round flushes in-flight
    /// confirmations. Total is bounded by max-degree + 2.
    fn build_helper(&mut self, layer: u32, class: ClassId) -> Result<HelperGraph, ProtocolError> {
        let start = self.sim.round();
        for st in self.sim.states_mut() {
            st.reset_class();
        }
        let stats = self.sim.run_round("helper", |_ctx, st, inbox| {
            let mut next = st.clone();
            for env in inbox {
                // The type-1 announcements of this layer land here (first
                // class only; later classes start with empty inboxes).
                if env.msg.tag == TAG_T1_CLASS {
                    next.neighbor_t1_class
                        .insert(env.from, env.msg.fields[0] as ClassId);
                }
            }
            let out = next.t2_component(class).map(|comp| {
                next.t2 = Some(T2State {
                    comp,
                    ..T2State::default()
                });
                SimMessage::broadcast(TAG_HELPER_T2, vec![class as u64, comp])
            });
            (next, out)
        })?;

        if stats.messages > 0 {
            loop {
                self.sim.run_round("helper", respond_handler(class))?;
                if self.sim.states().iter().all(|st| st.helper_queue.is_empty()) {
                    break;
                }
            }
            // Assembly: queues are empty, so this only consumes the last
            // confirmations without sending.
            self.sim.run_round("helper", respond_handler(class))?;
        }

        let rounds = self.sim.round() - start;
        let limit = self.sim.graph().max_degree() as u64 + 2;
        if rounds > limit {
            return Err(ProtocolError::HelperRoundsExceeded {
                layer,
                class,
                rounds,
                limit,
            });
        }
        for st in self.sim.states_mut() {
            if let Some(t2) = &mut st.t2 {
                t2.edges.sort_unstable();
            }
        }
        Ok(self.snapshot_helper(layer, class))
    }

    fn snapshot_helper(&self, layer: u32, class: ClassId) -> HelperGraph {
        let mut t2_nodes = Vec::new();
        let mut edges = Vec::new();
        for (real, st) in self.sim.states().iter().enumerate() {
            if let Some(t2) = &st.t2 {
                let vid = VirtualNodeId::upper(real as RealId, layer, CopyKind::Type2);
                t2_nodes.push((vid, t2.comp));
                for &x in &t2.edges {
                    edges.push(HelperEdge {
                        t2: vid,
                        t1: VirtualNodeId::upper(x, layer, CopyKind::Type1),
                        comp: t2.comp,
                    });
                }
            }
        }
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        HelperGraph {
            class,
            t2_nodes,
            edges,
        }
    }

    /// Randomized maximal matching on the helper graph. Each cycle: active
    /// type-2 copies draw fresh labels for their live edges and propose
    /// along the strongest one; each type-1 slot accepts its strongest
    /// proposal and announces the acceptances round-robin (overhearers
    /// deactivate their edges to taken slots). At most two addressed
    /// messages cross any directed edge per cycle.
    fn run_matching(
        &mut self,
        layer: u32,
        class: ClassId,
    ) -> Result<(Vec<HelperEdge>, u32, bool), ProtocolError> {
        let label_bound = self.label_bound;
        let mut cycles = 0u32;
        let mut truncated = false;
        loop {
            if !self.any_active_edges() {
                break;
            }
            if cycles as u64 >= self.matching_cap {
                truncated = true;
                break;
            }
            self.sim.begin_message_window();
            self.sim.run_round("matching", |ctx, st, inbox| {
                let mut next = st.clone();
                for env in inbox {
                    process_match_msg(&mut next, ctx.real, env, class);
                }
                let mut out = None;
                if let Some(t2) = &next.t2 {
                    if t2.matched.is_none() {
                        let mut best: Option<(u64, RealId)> = None;
                        for (k, &x) in t2.edges.iter().enumerate() {
                            if t2.partner_matched.contains(&x) {
                                continue;
                            }
                            let label =
                                ctx.stream(SLOT_LABEL_BASE + k as u64).below(label_bound);
                            let better = match best {
                                None => true,
                                Some((bl, bx)) => label > bl || (label == bl && x < bx),
                            };
                            if better {
                                best = Some((label, x));
                            }
                        }
                        if let Some((label, x)) = best {
                            out = Some(SimMessage::addressed(
                                TAG_PROPOSE,
                                x,
                                vec![class as u64, t2.comp, label],
                            ));
                        }
                    }
                }
                (next, out)
            })?;
            loop {
                self.sim.run_round("matching", accept_handler(class))?;
                if self.sim.states().iter().all(|st| st.accept_queue.is_empty()) {
                    break;
                }
            }
            self.sim.end_message_window(2)?;
            cycles += 1;
        }
        if cycles > 0 {
            // Drain: deliver the final acceptances; nothing is sent.
            self.sim.run_round("matching", accept_handler(class))?;
        }
        Ok((self.snapshot_matching(layer, class), cycles, truncated))
    }

    /// True while some helper edge has both endpoints unmatched. Reads the
    /// authoritative type-1 side so in-flight acceptances are counted.
    fn any_active_edges(&self) -> bool {
        let states = self.sim.states();
        let mut matched_t2 = std::collections::BTreeSet::new();
        for st in states {
            for side in st.t1.values() {
                if let Some(v) = side.matched {
                    matched_t2.insert(v);
                }
            }
        }
        states.iter().enumerate().any(|(v, st)| {
            st.t2.as_ref().is_some_and(|t2| {
                !matched_t2.contains(&(v as RealId))
                    && t2.edges.iter().any(|x| {
                        states[*x as usize]
                            .t1
                            .get(&t2.comp)
                            .is_some_and(|side| side.matched.is_none())
                    })
            })
        })
    }

    fn snapshot_matching(&self, layer: u32, class: ClassId) -> Vec<HelperEdge> {
        let states = self.sim.states();
        let mut out = Vec::new();
        for (x, st) in states.iter().enumerate() {
            for (&comp, side) in &st.t1 {
                if let Some(v) = side.matched {
                    debug_assert_eq!(
                        states[v as usize].t2_matches.get(&class),
                        Some(&(x as RealId, comp)),
                        "acceptance must have been delivered"
                    );
                    out.push(HelperEdge {
                        t2: VirtualNodeId::upper(v, layer, CopyKind::Type2),
                        t1: VirtualNodeId::upper(x as RealId, layer, CopyKind::Type1),
                        comp,
                    });
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Every type-2 copy picks its class locally: uniform over the matched
    /// edges whose type-1 partner chose the edge's class, or uniform over
    /// all classes if none survived. No rounds.
    fn select_type2(&mut self, layer: u32) {
        let t = self.params.classes as u64;
        let seed = self.params.seed;
        let round = self.sim.round();
        let t2_slot = self.vg.slot_of(VirtualNodeId::upper(0, layer, CopyKind::Type2)) as usize;
        let n = self.sim.graph().n();
        let mut chosen = Vec::with_capacity(n);
        for real in 0..n {
            let st = &self.sim.states()[real];
            let mut survivors = Vec::new();
            for (&class, &(w, _comp)) in &st.t2_matches {
                if st.neighbor_t1_class.get(&w) == Some(&class) {
                    survivors.push(class);
                }
            }
            let mut rng = seeded_rng(seed, real as u64, round, SLOT_T2_CLASS);
            let class = if survivors.is_empty() {
                (rng.below(t) + 1) as ClassId
            } else {
                survivors[rng.below(survivors.len() as u64) as usize]
            };
            chosen.push(class);
        }
        for (real, class) in chosen.into_iter().enumerate() {
            self.sim.states_mut()[real].own_class[t2_slot] = Some(class);
            self.assignment.set(
                &self.vg,
                VirtualNodeId::upper(real as RealId, layer, CopyKind::Type2),
                class,
            );
        }
    }
}

/// Handler for type-1 response rounds of the helper construction: records
/// qualifying proposals (first response round), confirms them round-robin,
/// and records confirmations on the type-2 side as they arrive.
fn respond_handler(
    class: ClassId,
) -> impl FnMut(&NodeCtx, &NodeState, &[Envelope]) -> (NodeState, Option<SimMessage>) {
    move |ctx, st, inbox| {
        let mut next = st.clone();
        for env in inbox {
            match env.msg.tag {
                TAG_HELPER_T2 => {
                    debug_assert_eq!(env.msg.fields[0] as ClassId, class);
                    let comp = env.msg.fields[1];
                    if next.t1_qualifies(class, comp) {
                        next.t1.entry(comp).or_default().edges.push(env.from);
                        next.helper_queue.push_back((comp, env.from));
                    }
                }
                TAG_HELPER_T1 => {
                    if env.msg.target == Some(ctx.real) {
                        let t2 = next.t2.as_mut().expect("confirmation implies a proposal");
                        debug_assert_eq!(t2.comp, env.msg.fields[1]);
                        t2.edges.push(env.from);
                    }
                }
                _ => {}
            }
        }
        let out = next
            .helper_queue
            .pop_front()
            .map(|(comp, v)| SimMessage::addressed(TAG_HELPER_T1, v, vec![class as u64, comp]));
        (next, out)
    }
}

/// Applies one delivered acceptance to a node's matching state.
fn process_match_msg(next: &mut NodeState, me: RealId, env: &Envelope, class: ClassId) {
    if env.msg.tag != TAG_ACCEPT {
        return;
    }
    let comp = env.msg.fields[1];
    if env.msg.target == Some(me) {
        let t2 = next.t2.as_mut().expect("acceptance implies a proposal");
        debug_assert_eq!(t2.comp, comp);
        t2.matched = Some(env.from);
        next.t2_matches.insert(class, (env.from, comp));
    } else if let Some(t2) = &mut next.t2 {
        // Overheard: the partner's slot for this component is taken.
        if t2.comp == comp && t2.edges.binary_search(&env.from).is_ok() {
            t2.partner_matched.insert(env.from);
        }
    }
}

/// Handler for acceptance rounds: consumes proposals (first acceptance
/// round of a cycle), picks the strongest per type-1 slot, and sends the
/// queued acceptances round-robin.
fn accept_handler(
    class: ClassId,
) -> impl FnMut(&NodeCtx, &NodeState, &[Envelope]) -> (NodeState, Option<SimMessage>) {
    move |ctx, st, inbox| {
        let mut next = st.clone();
        let mut proposals: BTreeMap<u64, Vec<(u64, RealId)>> = BTreeMap::new();
        for env in inbox {
            match env.msg.tag {
                TAG_PROPOSE => {
                    if env.msg.target == Some(ctx.real) {
                        debug_assert_eq!(env.msg.fields[0] as ClassId, class);
                        proposals
                            .entry(env.msg.fields[1])
                            .or_default()
                            .push((env.msg.fields[2], env.from));
                    }
                }
                TAG_ACCEPT => process_match_msg(&mut next, ctx.real, env, class),
                _ => {}
            }
        }
        for (comp, props) in proposals {
            let Some(side) = next.t1.get_mut(&comp) else {
                continue;
            };
            if side.matched.is_some() {
                continue;
            }
            let mut best: Option<(u64, RealId)> = None;
            for (label, v) in props {
                if side.edges.binary_search(&v).is_err() {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bl, bv)) => label > bl || (label == bl && v < bv),
                };
                if better {
                    best = Some((label, v));
                }
            }
            if let Some((_, v)) = best {
                side.matched = Some(v);
                next.accept_queue.push_back((comp, v));
            }
        }
        let out = next
            .accept_queue
            .pop_front()
            .map(|(comp, v)| SimMessage::addressed(TAG_ACCEPT, v, vec![class as u64, comp]));
        (next, out)
    }
}

/// Smallest `b` with `2^b >= x` (0 for `x = 1`).
fn ceil_log2(x: u64) -> u32 {
    assert!(x >= 1);
    64 - (x - 1).leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log2_matches_powers() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(192), 8);
        assert_eq!(ceil_log2(256), 8);
        assert_eq!(ceil_log2(257), 9);
    }
}
