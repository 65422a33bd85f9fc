//! Fractional connected dominating set (FCDS) packing on k-connected graphs.
//!
//! The crate has three layers:
//!
//! * [`graph`] and [`vgraph`] — base graphs and the derived virtual graph in
//!   which every real node is simulated by 3L copies.
//! * [`sim`] and [`protocol`] — a round-accurate synchronous broadcast
//!   simulator and the distributed packing protocol that runs on top of it.
//! * [`oracle`] — centralized brute-force checkers that re-derive every
//!   combinatorial claim (connectivity, connector paths, matchings, packing
//!   arithmetic) independently of the protocol code paths.
//!
//! [`harness`] ties the layers together for the `fcds` command line tool.

pub mod graph;
pub mod harness;
pub mod oracle;
pub mod protocol;
pub mod report;
pub mod sim;
pub mod vgraph;
