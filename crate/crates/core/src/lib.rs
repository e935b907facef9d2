//! Deterministic agent-based simulation of how council-housing residents
//! learn to use smart meters after an authority installs them.
//!
//! The crate is organised bottom-up: [`agent`] holds the learning curve and
//! the per-agent state chart, [`demand`] the appliance-level household load,
//! [`network`] the small-world contact graph, [`engine`] the one-minute tick
//! scheduler, and [`experiments`] the multi-run harness.

pub mod agent;
pub mod config;
pub mod demand;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod network;
pub mod rng;
pub mod time;

pub use agent::{learning_curve, minimal_tries, ArchetypeId, ArchetypeSpec, ConsumerAgent, StateClass};
pub use config::{Command, ScheduledCommand, SimConfig};
pub use demand::{aggregate_load, per_agent_average, LoadCurve};
pub use engine::{run, MetricsFrame, SimState};
pub use error::{Error, Result};
pub use network::SocialNetwork;
