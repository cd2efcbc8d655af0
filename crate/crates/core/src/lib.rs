//! Planning, feasibility analysis, and closed-loop simulation of carrier
//! trajectories that hold a cable-suspended rigid body at a constant pose
//! while the carriers themselves never stop.
//!
//! The crate is organized around the pipeline:
//!
//! 1. [`grasp`] - build the grasp matrix of the suspended body at its
//!    equilibrium pose, its pseudo-inverse, and nullspace bases (internal
//!    force directions along anchor-connecting lines).
//! 2. [`planner`] - turn a periodic internal-force signal into cable forces,
//!    cable directions, and carrier position/velocity references.
//! 3. [`collinearity`] - scalar outputs that certify the cable directions
//!    keep changing (a stalled cable means a stalled carrier).
//! 4. [`simulator`] - closed-loop rigid-body simulation with elastic cables
//!    and PD-controlled double-integrator carriers tracking the plan.
//! 5. [`analysis`] - post-hoc verification: speed floors, degenerate
//!    internal-force patterns, pose-hold quality.

pub mod analysis;
pub mod collinearity;
pub mod error;
pub mod geometry;
pub mod grasp;
pub mod planner;
pub mod simulator;

pub use error::{Error, Result};
pub use geometry::{Mat3, Rotation, UnitVec3, Vec3};

/// Standard gravity used when a configuration does not override it, m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.81;
