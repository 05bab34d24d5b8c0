//! Inverse kinematics for extensible constant-curvature continuum robots,
//! posed as a distance-geometry problem, relaxed to a semidefinite program and
//! driven to low rank by convex iteration.

pub mod bench;
pub mod conic;
pub mod driver;
pub mod environment;
pub mod error;
pub mod kinematics;
pub mod lift;
pub mod model;

pub use error::{Error, Result};
