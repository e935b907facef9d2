#![allow(dead_code)]

pub mod frozen;
pub mod oracle;

use learnsim_core::config::SimConfig;

/// Small learning-only population for fast property checks.
pub fn small_config(n_agents: usize, horizon_days: u32, seed: u64) -> SimConfig {
    SimConfig {
        n_agents,
        horizon_days,
        seed,
        demand_enabled: false,
        ..SimConfig::default()
    }
}
