//! Wire types. Every JSON payload carries `api_version`.

use std::collections::BTreeMap;

use learnsim_core::engine::MetricsFrame;
use learnsim_core::{Command, SimConfig, StateClass};
use serde::{Deserialize, Serialize};

pub const API_VERSION: u32 = 1;
pub const DEFAULT_STRIDE_MINUTES: u32 = 30;
/// One simulated day per real second.
pub const DEFAULT_MINUTES_PER_SECOND: f64 = 1440.0;
pub const DEFAULT_MAX_AGENTS_PER_FRAME: usize = 1000;

pub type SessionId = u64;

/// Body of `POST /sessions`. Every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// Full configuration; the built-in defaults when absent.
    #[serde(default)]
    pub config: Option<SimConfig>,
    /// Sweepable keys applied on top of `config`, e.g. `{"n_agents": 300}`.
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub stride_minutes: Option<u32>,
    /// Simulated minutes per real second. `null` or absent means the
    /// default pace; use the `set_pacing` command for unthrottled runs.
    #[serde(default)]
    pub minutes_per_second: Option<f64>,
    #[serde(default)]
    pub max_agents_per_frame: Option<usize>,
}

/// Body of `POST /sessions/{id}/commands`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum SessionCommand {
    Start,
    Pause,
    /// `minutes_per_second: null` runs as fast as the worker can.
    SetPacing {
        #[serde(default)]
        minutes_per_second: Option<f64>,
    },
    /// Rebuilds the simulation, optionally with a new seed, and starts a new
    /// epoch. The session is paused afterwards.
    Reset {
        #[serde(default)]
        seed: Option<u64>,
    },
    /// A simulation command, applied at the next day boundary.
    #[serde(untagged)]
    Sim(Command),
}

impl SessionCommand {
    pub fn is_simulation(&self) -> bool {
        matches!(self, SessionCommand::Sim(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub epoch: u64,
    /// Next tick the engine would have run when the command arrived.
    pub received_tick: u64,
    /// Tick at which the command acts. Simulation commands wait for the next
    /// day boundary; control commands act immediately.
    pub effective_tick: u64,
    #[serde(flatten)]
    pub command: SessionCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Paused,
    Running,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub api_version: u32,
    pub id: SessionId,
    pub epoch: u64,
    pub seed: u64,
    pub n_agents: usize,
    pub status: Status,
    /// Next tick to run; equals the number of frames produced this epoch.
    pub tick: u64,
    pub day: u64,
    pub horizon_ticks: u64,
    pub minutes_per_second: Option<f64>,
    pub stride_minutes: u32,
    pub intervention_active: bool,
    pub p_th: f64,
    pub contact_rate: f64,
    pub last_frame: Option<MetricsFrame>,
    /// SHA-256 over every frame of this epoch, as `learnsim run` reports it.
    pub digest: String,
    pub log_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentDot {
    pub id: u32,
    pub state: StateClass,
    pub x: f32,
    pub y: f32,
}

/// One event on `/sessions/{id}/events`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEvent {
    pub api_version: u32,
    pub session: SessionId,
    pub epoch: u64,
    pub tick: u64,
    pub day: u64,
    pub minute_of_day: u32,
    /// Every agent, or an evenly spaced subset when the population exceeds
    /// the session's `max_agents_per_frame`.
    pub agents: Vec<AgentDot>,
    pub metrics: MetricsFrame,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommandAck {
    pub api_version: u32,
    pub accepted: LogEntry,
}

/// `GET /sessions/{id}/log?format=json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogExport {
    pub api_version: u32,
    pub session: SessionId,
    pub epoch: u64,
    /// Configuration with `seed` and `schedule` filled in for replay.
    pub config: SimConfig,
    pub entries: Vec<LogEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub api_version: u32,
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<ViolationBody>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationBody {
    pub path: String,
    pub rule: String,
}
