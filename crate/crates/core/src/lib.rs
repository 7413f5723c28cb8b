//! Distance-based formation control with motion parameters.
//!
//! Agents keep a rigid shape by descending distance-error potentials, and
//! per-edge motion parameters steer the whole formation in steady
//! translation or rotation. Controllers only use relative positions seen in
//! each agent's own frame.

pub mod error;
pub mod gradient;
pub mod graph;
pub mod linalg;
pub mod maneuver;
pub mod motion;
pub mod report;
pub mod rigidity;
pub mod scenario;
pub mod shape;
pub mod sim;

pub use error::{FormationError, Result};
pub use graph::FormationGraph;
pub use motion::{MotionParams, MotionTerm, RotationCenter};
pub use rigidity::{classify_rigidity, Framework, RigidityReport};
pub use scenario::{preset, ScenarioConfig};
pub use shape::{shape_library, DesiredShape};
