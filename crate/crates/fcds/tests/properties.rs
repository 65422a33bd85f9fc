//! Randomized structural properties of the virtual graph, graph I/O, and
//! the per-round message budget.

use proptest::prelude::*;

use fcds::graph::{load_graph, save_graph, Graph};
use fcds::sim::{MessageBudget, SimError, SimMessage, Simulator, MAX_MESSAGE_FIELDS};
use fcds::vgraph::VirtualGraph;

/// Builds a graph on `n` nodes from arbitrary pairs, discarding loops.
fn graph_from_pairs(n: usize, pairs: &[(usize, usize)]) -> Graph {
    let mut g = Graph::new(n);
    for &(a, b) in pairs {
        let (a, b) = (a % n, b % n);
        if a != b {
            g.add_edge(a as u32, b as u32);
        }
    }
    g
}

proptest! {
    #[test]
    fn virtual_adjacency_is_symmetric_and_derived_from_the_base(
        n in 2usize..8,
        layers in 1u32..4,
        pairs in proptest::collection::vec((0usize..8, 0usize..8), 0..20),
    ) {
        let g = graph_from_pairs(n, &pairs);
        let vg = VirtualGraph::new(&g, layers);
        let total = vg.total_nodes();
        for a_code in 0..total {
            let a = vg.decode(a_code);
            prop_assert_eq!(vg.encode(a), a_code);
            for b_code in 0..total {
                let b = vg.decode(b_code);
                let expected = a != b && (a.real == b.real || g.has_edge(a.real, b.real));
                prop_assert_eq!(vg.is_adjacent(a, b), expected);
                prop_assert_eq!(vg.is_adjacent(a, b), vg.is_adjacent(b, a));
            }
        }
    }

    #[test]
    fn encoding_orders_copies_by_real_then_layer_then_kind(
        n in 1usize..6,
        layers in 1u32..4,
    ) {
        let g = Graph::new(n);
        let vg = VirtualGraph::new(&g, layers);
        let ids: Vec<_> = (0..vg.total_nodes()).map(|c| vg.decode(c)).collect();
        for w in ids.windows(2) {
            let key = |id: &fcds::vgraph::VirtualNodeId| (id.real, id.layer, id.kind as u8);
            prop_assert!(key(&w[0]) < key(&w[1]));
        }
    }

    #[test]
    fn graph_files_round_trip(
        n in 1usize..12,
        pairs in proptest::collection::vec((0usize..12, 0usize..12), 0..30),
    ) {
        let g = graph_from_pairs(n, &pairs);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        save_graph(&g, &path).unwrap();
        let loaded = load_graph(&path).unwrap();
        prop_assert!(loaded.warnings.is_empty());
        prop_assert_eq!(loaded.graph.n(), g.n());
        prop_assert_eq!(loaded.graph.m(), g.m());
        for v in 0..n as u32 {
            prop_assert_eq!(loaded.graph.neighbors(v), g.neighbors(v));
        }
    }
}

fn two_node_sim(budget: MessageBudget) -> Simulator<'static, ()> {
    // Leak a tiny graph so the simulator can borrow it for the test's life.
    let mut g = Graph::new(2);
    g.add_edge(0, 1);
    let g: &'static Graph = Box::leak(Box::new(g));
    Simulator::new(g, 0, budget, vec![(), ()])
}

#[test]
fn oversized_messages_are_rejected_at_send_time() {
    let budget = MessageBudget::for_virtual_node_count(12);
    let limit = budget.max_field_value();

    let mut sim = two_node_sim(budget);
    let err = sim
        .run_round("test", |_, _, _| {
            ((), Some(SimMessage::broadcast(1, vec![limit + 1])))
        })
        .unwrap_err();
    assert!(matches!(err, SimError::Budget { .. }), "got {err:?}");

    let mut sim = two_node_sim(budget);
    let wide = vec![0u64; MAX_MESSAGE_FIELDS + 1];
    let err = sim
        .run_round("test", |_, _, _| ((), Some(SimMessage::broadcast(1, wide.clone()))))
        .unwrap_err();
    assert!(matches!(err, SimError::Budget { .. }), "got {err:?}");

    let mut sim = two_node_sim(budget);
    let ok = sim.run_round("test", |_, _, _| {
        ((), Some(SimMessage::broadcast(1, vec![limit])))
    });
    assert!(ok.is_ok());
}

#[test]
fn addressed_messages_must_target_a_neighbor() {
    let mut g = Graph::new(3);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    let g: &'static Graph = Box::leak(Box::new(g));
    let mut sim = Simulator::new(g, 0, MessageBudget::for_virtual_node_count(9), vec![(); 3]);
    let err = sim
        .run_round("test", |ctx, _, _| {
            let out = (ctx.real == 0).then(|| SimMessage::addressed(1, 2, vec![]));
            ((), out)
        })
        .unwrap_err();
    assert!(matches!(err, SimError::TargetNotNeighbor { .. }), "got {err:?}");
}
