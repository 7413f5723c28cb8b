//! Deterministic simulation of the closed-loop systems.

pub mod engine;
pub mod frames;
pub mod integrator;
pub mod log;
pub mod metrics;
pub mod plot;
pub mod unicycle;

pub use engine::{integrate, AgentModel, EnclosingSetup, HeadingEvent, HeadingSetup, SimSetup, XTrigger};
pub use frames::LocalFrame;
pub use log::{Sample, TrajectoryLog};
pub use metrics::{metrics, MetricsReport, RateCenter};
