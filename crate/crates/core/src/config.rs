//! Simulation configuration: the TOML document format, defaults, validation
//! and the content fingerprint recorded in run manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{council_archetypes, ArchetypeSpec, BackHomeRule};
use crate::demand::{ApplianceCatalog, PriceSignal};
use crate::error::{Error, Result, Violation};
use crate::network::{InfluenceParams, NetworkParams};
use crate::time::{Tick, MINUTES_PER_DAY};

pub const DEFAULT_P_TH: f64 = 0.85;
pub const DEFAULT_SEASONAL_FACTOR: f64 = 1.15;
pub const DEFAULT_CONTACT_RATE: f64 = 0.3;
pub const DEFAULT_INFLUENCE: InfluenceParams = InfluenceParams {
    eta: 0.01,
    experience_bonus: 0.003,
    novice_bonus: 0.01,
};

/// A steering command. Every command is idempotent with respect to state it
/// does not change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Installs meters for the first `coverage * n` agents of a fixed
    /// seed-derived order and switches the meters on.
    ApplyIntervention {
        #[serde(default = "one")]
        coverage: f64,
    },
    /// Switches meters off. Learning states are kept; no tries accrue and no
    /// peak responses happen while withdrawn.
    WithdrawIntervention,
    SetContactRate { rate: f64 },
    SetPTh { p_th: f64 },
}

fn one() -> f64 {
    1.0
}

impl Command {
    pub fn violations(&self, path: &str) -> Vec<Violation> {
        let mut v = Vec::new();
        match *self {
            Command::ApplyIntervention { coverage } if !(0.0..=1.0).contains(&coverage) => {
                v.push(Violation::new(format!("{path}.coverage"), "0 <= coverage <= 1"));
            }
            Command::SetContactRate { rate } if !(0.0..=1.0).contains(&rate) => {
                v.push(Violation::new(format!("{path}.rate"), "0 <= contact_rate <= 1"));
            }
            Command::SetPTh { p_th } if !(p_th > 0.0 && p_th <= 1.0) => {
                v.push(Violation::new(format!("{path}.p_th"), "0 < p_th ≤ 1"));
            }
            _ => {}
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledCommand {
    pub tick: Tick,
    #[serde(flatten)]
    pub command: Command,
}

/// Top-level keys missing from a config file take their default values;
/// nested tables must be complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_agents: usize,
    pub seed: u64,
    pub horizon_days: u32,
    /// Global experience threshold; archetypes may override it.
    pub p_th: f64,
    /// Daily probability that an influenced agent messages one neighbour.
    pub contact_rate: f64,
    /// Tries credited per simulated day with a working meter.
    pub tries_per_day: u32,
    /// Active experienced agents shed load in every peak window they are home
    /// for; otherwise they respond with probability `P_t` like everyone else.
    pub experienced_always_respond: bool,
    pub seasonal_factor: f64,
    /// Simulate appliances and demand. Learning dynamics never depend on it.
    pub demand_enabled: bool,
    /// Record every agent's A and ESA once per simulated day.
    pub record_trajectories: bool,
    pub network: NetworkParams,
    pub influence: InfluenceParams,
    pub price_signal: PriceSignal,
    /// Appliance catalog file; the bundled catalog when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PathBuf>,
    pub archetypes: Vec<ArchetypeSpec>,
    pub schedule: Vec<ScheduledCommand>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_agents: 1000,
            seed: 1,
            horizon_days: 90,
            p_th: DEFAULT_P_TH,
            contact_rate: DEFAULT_CONTACT_RATE,
            tries_per_day: 1,
            experienced_always_respond: true,
            seasonal_factor: DEFAULT_SEASONAL_FACTOR,
            demand_enabled: true,
            record_trajectories: false,
            network: NetworkParams::default(),
            influence: DEFAULT_INFLUENCE,
            price_signal: PriceSignal::default(),
            catalog: None,
            archetypes: council_archetypes(true),
            schedule: vec![ScheduledCommand {
                tick: 0,
                command: Command::ApplyIntervention { coverage: 1.0 },
            }],
        }
    }
}

fn trim_num(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6;
    format!("{r}")
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, col)
}

impl SimConfig {
    pub fn horizon_ticks(&self) -> Tick {
        self.horizon_days as Tick * MINUTES_PER_DAY as Tick
    }

    /// Parses without validating.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| {
                    let (l, c) = line_col(text, s.start);
                    format!(" at line {l}, column {c}")
                })
                .unwrap_or_default();
            Error::Parse {
                what: format!("configuration{at}"),
                message: e.message().to_string(),
            }
        })
    }

    /// Reads, parses and validates. A relative catalog path is resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(c) = &cfg.catalog {
            if c.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.catalog = Some(dir.join(c));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn load_catalog(&self) -> Result<ApplianceCatalog> {
        match &self.catalog {
            None => Ok(ApplianceCatalog::default_uk()),
            Some(p) => ApplianceCatalog::from_path(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    /// Every failed rule with its field path.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.n_agents == 0 {
            v.push(Violation::new("n_agents", "n_agents > 0"));
        }
        if self.n_agents > u32::MAX as usize {
            v.push(Violation::new("n_agents", "n_agents must fit in 32 bits"));
        }
        if self.horizon_days == 0 {
            v.push(Violation::new("horizon_days", "horizon_days > 0"));
        }
        if !(self.p_th > 0.0 && self.p_th <= 1.0) {
            v.push(Violation::new("p_th", "0 < p_th ≤ 1"));
        }
        if !(0.0..=1.0).contains(&self.contact_rate) {
            v.push(Violation::new("contact_rate", "0 <= contact_rate <= 1"));
        }
        if !(self.seasonal_factor > 0.0 && self.seasonal_factor.is_finite()) {
            v.push(Violation::new("seasonal_factor", "seasonal_factor > 0"));
        }
        let net = &self.network;
        if net.k < 2 || net.k % 2 != 0 {
            v.push(Violation::new("network.k", "mean degree must be even and >= 2"));
        }
        if !(0.0..=1.0).contains(&net.beta) {
            v.push(Violation::new("network.beta", "0 <= beta <= 1"));
        }
        v.extend(self.influence.violations("influence"));
        v.extend(self.price_signal.violations("price_signal.peak_windows"));
        if self.archetypes.is_empty() {
            v.push(Violation::new("archetypes", "at least one archetype is required"));
        }
        let mut seen = Vec::new();
        for (i, a) in self.archetypes.iter().enumerate() {
            let p = |f: &str| format!("archetypes[{i}].{f}");
            if seen.contains(&a.id) {
                v.push(Violation::new(p("id"), format!("duplicate archetype {}", a.id.name())));
            }
            seen.push(a.id);
            if !(0.0..=1.0).contains(&a.population_share) {
                v.push(Violation::new(p("population_share"), "0 <= share <= 1"));
            }
            for (name, d) in [("attitude", a.attitude), ("awareness", a.awareness)] {
                if !(d.std > 0.0 && d.std.is_finite()) {
                    v.push(Violation::new(p(&format!("{name}.std")), "σ > 0"));
                }
                if !(0.0..=1.0).contains(&d.mean) {
                    v.push(Violation::new(p(&format!("{name}.mean")), "0 <= mean <= 1"));
                }
            }
            let w = a.leave_home;
            if w.start.0 > w.end.0 || w.end.0 >= MINUTES_PER_DAY {
                v.push(Violation::new(
                    p("leave_home"),
                    format!("window {w} must satisfy start <= end < 24:00"),
                ));
            }
            match a.back_home {
                BackHomeRule::Window { start, end } => {
                    if start.0 > end.0 || end.0 >= MINUTES_PER_DAY {
                        v.push(Violation::new(
                            p("back_home"),
                            format!("window [{start}, {end}] must satisfy start <= end < 24:00"),
                        ));
                    }
                }
                BackHomeRule::AfterLeave {
                    min_minutes,
                    max_minutes,
                } => {
                    if min_minutes == 0 || min_minutes > max_minutes || max_minutes >= MINUTES_PER_DAY {
                        v.push(Violation::new(
                            p("back_home"),
                            "1 <= min_minutes <= max_minutes < 1440",
                        ));
                    }
                }
            }
            if let Some(t) = a.p_th {
                if !(t > 0.0 && t <= 1.0) {
                    v.push(Violation::new(p("p_th"), "0 < p_th ≤ 1"));
                }
            }
            let b = a.behaviour;
            for (name, x) in [
                ("activity_scale", b.activity_scale),
                ("ownership_scale", b.ownership_scale),
                ("base_need_scale", b.base_need_scale),
            ] {
                if !(x >= 0.0 && x.is_finite()) {
                    v.push(Violation::new(p(&format!("behaviour.{name}")), "must be finite and >= 0"));
                }
            }
        }
        if !self.archetypes.is_empty() {
            let sum: f64 = self.archetypes.iter().map(|a| a.population_share).sum();
            if (sum - 1.0).abs() > 1e-9 {
                v.push(Violation::new(
                    "archetypes.population_share",
                    format!("shares sum {} ≠ 1", trim_num(sum)),
                ));
            }
        }
        let mut last = 0;
        for (i, s) in self.schedule.iter().enumerate() {
            if s.tick < last {
                v.push(Violation::new(format!("schedule[{i}].tick"), "schedule must be ordered by tick"));
            }
            last = s.tick;
            v.extend(s.command.violations(&format!("schedule[{i}]")));
        }
        v
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
