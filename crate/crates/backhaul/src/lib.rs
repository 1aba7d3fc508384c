//! Modeling toolkit and solvers for single-vehicle backhaul profit
//! maximization: a freight vehicle returning empty from its last delivery may
//! detour to serve paid point-to-point requests, subject to a distance limit
//! and its carrying capacity.
//!
//! The crate provides
//!
//! * an instance model with a JSON interchange format ([`instance`]),
//! * four MILP formulations over a solver-agnostic model type
//!   ([`formulations`], [`mip`]) with LP/MPS emission,
//! * a built-in LP/branch-and-bound solver and an adapter for external MILP
//!   backends ([`solver`]),
//! * an exhaustive-search reference solver for small instances ([`oracle`]),
//! * solution decoding, flow algebra, diversion-digraph checks and
//!   negative-flow repair ([`analysis`]),
//! * the restricted-triples screening heuristic ([`heuristic`]),
//! * a seeded instance generator and an orienteering-problem reduction
//!   ([`datagen`]).
//!
//! The `examples/` directory demonstrates each capability end to end; the
//! `bpmp` binary exposes the same operations as subcommands.

pub mod analysis;
pub mod constants;
pub mod datagen;
pub mod fixtures;
pub mod formulations;
pub mod heuristic;
pub mod instance;
pub mod mip;
pub mod oracle;
pub mod solver;
