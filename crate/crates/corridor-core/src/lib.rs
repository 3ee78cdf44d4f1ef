//! Coordination and energy-optimal control of connected automated vehicles
//! through a signal-free two-intersection corridor, with a fixed-time
//! signalized baseline for comparison.
//!
//! The crate is split along the pipeline:
//! - [`model`]: geometry, routes, vehicles, constraint parameters and the
//!   pairwise relation classification.
//! - [`coordination`]: per-zone merge queues and the recursive assignment
//!   of merge times.
//! - [`ocp`]: closed-form minimum-effort trajectories between fixed merge
//!   times, including the two-arc interior-point solution, plus a
//!   discretized verification oracle.
//! - [`sim`]: deterministic corridor simulation in coordinated and
//!   signalized-baseline modes, with collision auditing.
//! - [`metrics`]: drive-cycle evaluation and fleet comparison.

pub mod coordination;
pub mod metrics;
pub mod model;
pub mod ocp;
pub mod sim;
