//! Energy-constrained multi-robot coverage with bearing-rigid networks.
//!
//! Robots cover a convex mission space by tracking the centroids of their
//! Voronoi cells with a tracking MPC. Each robot runs a three-mode hybrid
//! automaton (coverage, return-to-base, recharge) whose recharge guard is
//! derived from a minimum-time return plan, so the state of charge never
//! goes negative. The robots are connected by a minimally bearing-rigid
//! network organised by energy level, which is repaired locally when
//! robots leave to recharge and grown again when they return.
//!
//! Modules:
//! - [`rigidity`]: bearings, rigidity matrix, IBR rank test, Henneberg moves.
//! - [`network`]: energy levels and the energy-aware network construction.
//! - [`reconfig`]: rigidity recovery after departures.
//! - [`energy`]: the per-robot hybrid automaton and guards.
//! - [`planner`]: minimum-time return-to-base planning.
//! - [`coverage`]: Voronoi partition, centroids and the coverage cost.
//! - [`mpc`]: tracking MPC with artificial reference and bearing cost.
//! - [`qp`]: the dense dual active-set QP solver behind planner and MPC.
//! - [`harness`]: scenario config, the simulation loop, files and plots.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod coverage;
pub mod energy;
pub mod harness;
pub mod mpc;
pub mod network;
pub mod planner;
pub mod qp;
pub mod reconfig;
pub mod rigidity;

pub use rigidity::Vec2;
