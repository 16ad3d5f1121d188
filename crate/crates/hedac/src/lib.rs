//! Multi-agent ergodic area-surveying simulation.
//!
//! A finite-element Helmholtz potential field over an irregular 2D domain
//! with obstacles drives constant-speed, curvature-limited (Dubins) agents
//! up its gradient. An escape-route maneuver optimizer guarantees minimum
//! clearance from boundaries and between agents. The `sim` module ties the
//! pieces into the full control loop behind the `hedac` CLI.

pub mod avoidance;
pub mod coverage;
pub mod dubins;
pub mod error;
pub mod fem;
pub mod geom;
pub mod gridmesh;
pub mod mesh;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
