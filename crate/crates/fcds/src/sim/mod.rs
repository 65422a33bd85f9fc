//! Round-accurate simulator for the synchronous broadcast model.
//!
//! Per round, every node reads the messages its neighbors sent in the
//! previous round, applies a pure transition, and emits at most one message
//! that all neighbors receive next round. Messages carry a small tag plus at
//! most [`MAX_MESSAGE_FIELDS`] scalar fields and must fit a logarithmic bit
//! budget derived from the virtual node count; violations are hard errors,
//! never silently truncated.
//!
//! The engine itself is omniscient only for bookkeeping: fixpoint detection,
//! round counting, and per-edge congestion accounting. All protocol
//! decisions flow through node-local state and inboxes.

pub mod rng;

use crate::graph::{Graph, RealId};
use rng::{seeded_rng, SeededRng};
use std::collections::BTreeMap;
use thiserror::Error;

/// Hard cap on scalar fields per message (an addressed target counts as one).
pub const MAX_MESSAGE_FIELDS: usize = 6;
/// Bits reserved for the message tag when costing a message.
pub const TAG_BITS: u32 = 8;
/// Total budget is this factor times the per-field width.
pub const BUDGET_FACTOR: u32 = 8;

/// One broadcast message: a tag, an optional addressed recipient, and up to
/// six scalar fields. Addressing never narrows delivery — every neighbor
/// still receives the broadcast — it only marks the intended recipient for
/// congestion accounting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimMessage {
    pub tag: u8,
    pub target: Option<RealId>,
    pub fields: Vec<u64>,
}

impl SimMessage {
    pub fn broadcast(tag: u8, fields: Vec<u64>) -> Self {
        SimMessage {
            tag,
            target: None,
            fields,
        }
    }

    pub fn addressed(tag: u8, target: RealId, fields: Vec<u64>) -> Self {
        SimMessage {
            tag,
            target: Some(target),
            fields,
        }
    }

    /// Scalar fields including the optional target.
    pub fn field_count(&self) -> usize {
        self.fields.len() + usize::from(self.target.is_some())
    }
}

/// Per-field width and total bit budget for one simulation.
///
/// Fields hold node ids, class ids, component ids, layer indices, or random
/// labels below `N^4` where `N` is the virtual node count, so the field
/// width is `ceil(log2(N^4))` bits and the whole message may use
/// [`BUDGET_FACTOR`] times that.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MessageBudget {
    pub field_bits: u32,
    pub max_bits: u32,
}

impl MessageBudget {
    pub fn for_virtual_node_count(n_virtual: u64) -> Self {
        assert!(n_virtual >= 2, "budget needs at least two virtual nodes");
        let cap = (n_virtual as u128).pow(4);
        let field_bits = (128 - (cap - 1).leading_zeros()).min(64);
        MessageBudget {
            field_bits,
            max_bits: BUDGET_FACTOR * field_bits,
        }
    }

    /// Largest value a single field may carry.
    pub fn max_field_value(&self) -> u64 {
        if self.field_bits >= 64 {
            u64::MAX
        } else {
            (1u64 << self.field_bits) - 1
        }
    }

    fn check(&self, msg: &SimMessage) -> Result<(), String> {
        if msg.field_count() > MAX_MESSAGE_FIELDS {
            return Err(format!(
                "{} fields exceed the {MAX_MESSAGE_FIELDS}-field cap",
                msg.field_count()
            ));
        }
        let limit = self.max_field_value();
        for (i, &v) in msg.fields.iter().enumerate() {
            if v > limit {
                return Err(format!(
                    "field {i} value {v} does not fit {} bits",
                    self.field_bits
                ));
            }
        }
        let bits = TAG_BITS + msg.field_count() as u32 * self.field_bits;
        if bits > self.max_bits {
            return Err(format!("{bits} bits exceed the {}-bit budget", self.max_bits));
        }
        Ok(())
    }
}

/// A delivered message with its sender.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub from: RealId,
    pub msg: SimMessage,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("round {round} ({phase}): node {node} message rejected: {reason}")]
    Budget {
        round: u64,
        phase: &'static str,
        node: RealId,
        reason: String,
    },
    #[error("round {round} ({phase}): node {node} addressed non-neighbor {target}")]
    TargetNotNeighbor {
        round: u64,
        phase: &'static str,
        node: RealId,
        target: RealId,
    },
    #[error("run_until_fixpoint needs max_rounds >= 1")]
    InvalidMaxRounds,
    #[error("edge ({from},{to}) carried {count} addressed messages in one window (limit {limit})")]
    EdgeWindowOverflow {
        from: RealId,
        to: RealId,
        count: u32,
        limit: u32,
    },
    #[error("message window closed without being opened")]
    WindowNotOpen,
}

/// Outcome of a single round.
#[derive(Clone, Copy, Debug)]
pub struct RoundStats {
    pub messages: u64,
    pub state_changed: bool,
}

/// Outcome of [`Simulator::run_until_fixpoint`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixpointOutcome {
    pub rounds: u64,
    pub truncated: bool,
}

/// Read-only per-node context handed to round handlers.
pub struct NodeCtx<'a> {
    pub real: RealId,
    pub round: u64,
    pub neighbors: &'a [RealId],
    seed: u64,
}

impl NodeCtx<'_> {
    /// Fresh deterministic stream for this node, this round, and `slot`.
    pub fn stream(&self, slot: u64) -> SeededRng {
        seeded_rng(self.seed, self.real as u64, self.round, slot)
    }

    /// One uniform draw in `[0, bound)`.
    pub fn draw(&self, slot: u64, bound: u64) -> u64 {
        self.stream(slot).below(bound)
    }
}

/// Aggregate counters the engine maintains across rounds.
#[derive(Clone, Debug, Default)]
pub struct SimCounters {
    pub messages_sent: u64,
    pub rounds_per_phase: BTreeMap<&'static str, u64>,
    pub max_window_edge_messages: u32,
}

/// The synchronous round engine over a base graph.
pub struct Simulator<'g, S> {
    graph: &'g Graph,
    seed: u64,
    budget: MessageBudget,
    states: Vec<S>,
    inboxes: Vec<Vec<Envelope>>,
    round: u64,
    counters: SimCounters,
    window: Option<BTreeMap<(RealId, RealId), u32>>,
}

impl<'g, S: Clone + PartialEq> Simulator<'g, S> {
    pub fn new(graph: &'g Graph, seed: u64, budget: MessageBudget, initial: Vec<S>) -> Self {
        assert_eq!(initial.len(), graph.n(), "one state per node");
        Simulator {
            graph,
            seed,
            budget,
            states: initial,
            inboxes: vec![Vec::new(); graph.n()],
            round: 0,
            counters: SimCounters::default(),
            window: None,
        }
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn budget(&self) -> MessageBudget {
        self.budget
    }

    pub fn counters(&self) -> &SimCounters {
        &self.counters
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    /// Node-local mutation outside of rounds (initialization and other
    /// zero-communication steps a node performs on its own state).
    pub fn states_mut(&mut self) -> &mut [S] {
        &mut self.states
    }

    /// Runs one synchronous round: every node's handler sees its full inbox
    /// (messages emitted last round) plus its previous state, and returns
    /// the next state and at most one outgoing message, delivered to all
    /// neighbors next round.
    pub fn run_round<F>(&mut self, phase: &'static str, mut handler: F) -> Result<RoundStats, SimError>
    where
        F: FnMut(&NodeCtx, &S, &[Envelope]) -> (S, Option<SimMessage>),
    {
        let n = self.graph.n();
        let mut next_states = Vec::with_capacity(n);
        let mut outgoing: Vec<Option<SimMessage>> = Vec::with_capacity(n);
        let mut state_changed = false;
        for v in 0..n as RealId {
            let ctx = NodeCtx {
                real: v,
                round: self.round,
                neighbors: self.graph.neighbors(v),
                seed: self.seed,
            };
            let (next, out) = handler(&ctx, &self.states[v as usize], &self.inboxes[v as usize]);
            if let Some(msg) = &out {
                self.budget.check(msg).map_err(|reason| SimError::Budget {
                    round: self.round,
                    phase,
                    node: v,
                    reason,
                })?;
                if let Some(target) = msg.target {
                    if !self.graph.has_edge(v, target) {
                        return Err(SimError::TargetNotNeighbor {
                            round: self.round,
                            phase,
                            node: v,
                            target,
                        });
                    }
                }
            }
            if !state_changed && next != self.states[v as usize] {
                state_changed = true;
            }
            next_states.push(next);
            outgoing.push(out);
        }

        let mut messages = 0;
        let mut inboxes: Vec<Vec<Envelope>> = vec![Vec::new(); n];
        for (u, out) in outgoing.into_iter().enumerate() {
            let Some(msg) = out else { continue };
            messages += 1;
            if let (Some(window), Some(target)) = (self.window.as_mut(), msg.target) {
                *window.entry((u as RealId, target)).or_insert(0) += 1;
            }
            for &v in self.graph.neighbors(u as RealId) {
                inboxes[v as usize].push(Envelope {
                    from: u as RealId,
                    msg: msg.clone(),
                });
            }
        }

        self.states = next_states;
        self.inboxes = inboxes;
        self.round += 1;
        self.counters.messages_sent += messages;
        *self.counters.rounds_per_phase.entry(phase).or_insert(0) += 1;
        Ok(RoundStats {
            messages,
            state_changed,
        })
    }

    /// Repeats `handler` rounds until a round passes with no state change
    /// and no message, or until `max_rounds` (reported as truncation). The
    /// detecting quiet round is included in the count.
    pub fn run_until_fixpoint<F>(
        &mut self,
        phase: &'static str,
        mut handler: F,
        max_rounds: u64,
    ) -> Result<FixpointOutcome, SimError>
    where
        F: FnMut(&NodeCtx, &S, &[Envelope]) -> (S, Option<SimMessage>),
    {
        if max_rounds == 0 {
            return Err(SimError::InvalidMaxRounds);
        }
        let mut rounds = 0;
        loop {
            let stats = self.run_round(phase, &mut handler)?;
            rounds += 1;
            if !stats.state_changed && stats.messages == 0 {
                return Ok(FixpointOutcome {
                    rounds,
                    truncated: false,
                });
            }
            if rounds == max_rounds {
                return Ok(FixpointOutcome {
                    rounds,
                    truncated: true,
                });
            }
        }
    }

    /// Opens a window over the following rounds in which addressed messages
    /// are counted per directed edge (used to bound per-edge congestion of
    /// one matching round).
    pub fn begin_message_window(&mut self) {
        self.window = Some(BTreeMap::new());
    }

    /// Closes the window; errors if any directed edge carried more than
    /// `limit` addressed messages. Returns the observed maximum.
    pub fn end_message_window(&mut self, limit: u32) -> Result<u32, SimError> {
        let window = self.window.take().ok_or(SimError::WindowNotOpen)?;
        let mut max = 0;
        for ((from, to), count) in window {
            if count > limit {
                return Err(SimError::EdgeWindowOverflow {
                    from,
                    to,
                    count,
                    limit,
                });
            }
            max = max.max(count);
        }
        self.counters.max_window_edge_messages = self.counters.max_window_edge_messages.max(max);
        Ok(max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn p3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)])
    }

    fn budget() -> MessageBudget {
        MessageBudget::for_virtual_node_count(9)
    }

    #[test]
    fn budget_widths_follow_the_virtual_node_count() {
        // 192 virtual nodes: 192^4 needs 31 bits per field, 248 total.
        let b = MessageBudget::for_virtual_node_count(192);
        assert_eq!(b.field_bits, 31);
        assert_eq!(b.max_bits, 248);
    }

    #[test]
    fn messages_arrive_one_round_later_at_neighbors_only() {
        let g = p3();
        let mut sim: Simulator<Vec<RealId>> = Simulator::new(&g, 0, budget(), vec![Vec::new(); 3]);
        // Round 0: everyone announces; nothing has arrived yet.
        sim.run_round("t", |ctx, st, inbox| {
            assert!(inbox.is_empty());
            (st.clone(), Some(SimMessage::broadcast(1, vec![ctx.real as u64])))
        })
        .unwrap();
        // Round 1: inboxes hold exactly the neighbors' announcements.
        sim.run_round("t", |_, _, inbox| {
            (inbox.iter().map(|e| e.from).collect(), None)
        })
        .unwrap();
        assert_eq!(sim.states()[0], vec![1]);
        assert_eq!(sim.states()[1], vec![0, 2]);
        assert_eq!(sim.states()[2], vec![1]);
        assert_eq!(sim.counters().messages_sent, 3);
        assert_eq!(sim.round(), 2);
    }

    #[test]
    fn seven_field_message_is_rejected() {
        let g = p3();
        let mut sim: Simulator<u8> = Simulator::new(&g, 0, budget(), vec![0; 3]);
        let err = sim
            .run_round("t", |_, st, _| (*st, Some(SimMessage::broadcast(1, vec![0; 7]))))
            .unwrap_err();
        assert!(matches!(err, SimError::Budget { node: 0, .. }), "{err}");
    }

    #[test]
    fn oversized_field_value_is_rejected() {
        let g = p3();
        let b = budget(); // 9^4 = 6561 -> 13 bits per field
        assert_eq!(b.field_bits, 13);
        let mut sim: Simulator<u8> = Simulator::new(&g, 0, b, vec![0; 3]);
        let err = sim
            .run_round("t", |_, st, _| {
                (*st, Some(SimMessage::broadcast(1, vec![1 << 13])))
            })
            .unwrap_err();
        assert!(matches!(err, SimError::Budget { .. }), "{err}");
    }

    #[test]
    fn addressing_a_non_neighbor_is_rejected() {
        let g = p3();
        let mut sim: Simulator<u8> = Simulator::new(&g, 0, budget(), vec![0; 3]);
        let err = sim
            .run_round("t", |ctx, st, _| {
                let out = if ctx.real == 0 {
                    Some(SimMessage::addressed(1, 2, vec![]))
                } else {
                    None
                };
                (*st, out)
            })
            .unwrap_err();
        assert!(matches!(err, SimError::TargetNotNeighbor { node: 0, target: 2, .. }));
    }

    #[test]
    fn fixpoint_on_a_converged_state_takes_one_round() {
        let g = p3();
        let mut sim: Simulator<u8> = Simulator::new(&g, 0, budget(), vec![0; 3]);
        let out = sim
            .run_until_fixpoint("t", |_, st, _| (*st, None), 10)
            .unwrap();
        assert_eq!(out, FixpointOutcome { rounds: 1, truncated: false });
    }

    #[test]
    fn fixpoint_truncates_at_max_rounds() {
        let g = p3();
        let mut sim: Simulator<u64> = Simulator::new(&g, 0, budget(), vec![0; 3]);
        let out = sim
            .run_until_fixpoint("t", |_, st, _| (st + 1, None), 5)
            .unwrap();
        assert_eq!(out, FixpointOutcome { rounds: 5, truncated: true });
        assert!(matches!(
            sim.run_until_fixpoint("t", |_, st, _| (*st, None), 0),
            Err(SimError::InvalidMaxRounds)
        ));
    }

    #[test]
    fn flooding_converges_and_fixpoint_detects_it() {
        // Min-id flooding over a path: converges in diameter rounds plus one
        // quiet detection round.
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let init: Vec<(u64, bool)> = (0..5).map(|v| (10 - v, true)).collect(); // min, must announce
        let mut sim = Simulator::new(&g, 0, budget(), init);
        let out = sim
            .run_until_fixpoint(
                "flood",
                |_, &(min, announce), inbox| {
                    let mut new_min = min;
                    for e in inbox {
                        new_min = new_min.min(e.msg.fields[0]);
                    }
                    let out =
                        (announce || new_min < min).then(|| SimMessage::broadcast(0, vec![new_min]));
                    ((new_min, false), out)
                },
                100,
            )
            .unwrap();
        assert!(!out.truncated);
        assert!(sim.states().iter().all(|&(min, _)| min == 6));
        assert!(out.rounds <= 6);
    }

    #[test]
    fn message_window_counts_addressed_messages_per_edge() {
        let g = p3();
        let mut sim: Simulator<u8> = Simulator::new(&g, 0, budget(), vec![0; 3]);
        sim.begin_message_window();
        for _ in 0..3 {
            sim.run_round("t", |ctx, st, _| {
                let out = (ctx.real == 0).then(|| SimMessage::addressed(1, 1, vec![]));
                (*st, out)
            })
            .unwrap();
        }
        let err = sim.end_message_window(2).unwrap_err();
        assert!(matches!(
            err,
            SimError::EdgeWindowOverflow { from: 0, to: 1, count: 3, limit: 2 }
        ));
    }

    #[test]
    fn window_max_is_recorded() {
        let g = p3();
        let mut sim: Simulator<u8> = Simulator::new(&g, 0, budget(), vec![0; 3]);
        sim.begin_message_window();
        sim.run_round("t", |ctx, st, _| {
            let out = (ctx.real == 0).then(|| SimMessage::addressed(1, 1, vec![]));
            (*st, out)
        })
        .unwrap();
        assert_eq!(sim.end_message_window(2).unwrap(), 1);
        assert_eq!(sim.counters().max_window_edge_messages, 1);
        assert!(matches!(sim.end_message_window(2), Err(SimError::WindowNotOpen)));
    }

    #[test]
    fn handler_randomness_is_reproducible() {
        let g = p3();
        let mut draws = Vec::new();
        for _ in 0..2 {
            let mut sim: Simulator<u8> = Simulator::new(&g, 99, budget(), vec![0; 3]);
            let mut got = Vec::new();
            sim.run_round("t", |ctx, st, _| {
                got.push(ctx.draw(5, 1000));
                (*st, None)
            })
            .unwrap();
            draws.push(got);
        }
        assert_eq!(draws[0], draws[1]);
        assert_eq!(draws[0].len(), 3);
    }
}
