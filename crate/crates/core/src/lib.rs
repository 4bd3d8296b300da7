//! Deterministic 2D swarm simulation for adaptive multi-target entrapment.
//!
//! Agents pick a target by scoring distance and crowding, then steer with a
//! potential-field velocity law (braking-curve approach, linear repulsion,
//! virtual agents on walls and obstacles, speed cap). Targets wander with
//! Lévy flights. [`metrics`] turns a recorded [`simulator::Trajectory`] into
//! the encirclement indicators.

pub mod controller;
pub mod decision;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod simulator;
pub mod target_motion;

pub use error::SimError;
pub use geometry::Vec2;
