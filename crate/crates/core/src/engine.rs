//! The one-minute tick scheduler.
//!
//! Each [`SimState::step`] runs these phases in order:
//!
//! 0. scheduled commands whose tick has arrived;
//! 1. day rollover (ticks that are a positive multiple of 1440): credit the
//!    previous day's tries, evaluate experience and discontinuance, resample
//!    leave/back times, arm the daily contact, sample trajectories;
//! 2. occupancy flips at each agent's leave and back minutes;
//! 3. for agents at home: the daily contact at their first at-home minute,
//!    then the peak response and appliance switching;
//! 4. influence messages collected in phase 3, applied in
//!    `(receiver, sender)` order;
//! 5. community demand and the [`MetricsFrame`].

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{minimal_tries, ArchetypeSpec, ConsumerAgent, Experience, Occupancy, StateClass};
use crate::config::{Command, ScheduledCommand, SimConfig};
use crate::demand::{build_household, peak_response_probability, Household, SwitchTables};
use crate::error::{Error, Result};
use crate::network::{apply_influence, generate_small_world, maybe_contact, InfluenceMessage, SocialNetwork};
use crate::rng::{stream, SimRng, Stream};
use crate::time::{minute_of_day, Tick, MINUTES_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsFrame {
    pub tick: Tick,
    pub demand_kw: f64,
    pub uninfluenced: u32,
    pub influenced_inexperienced: u32,
    pub experienced: u32,
    pub discontinued: u32,
    pub mean_attitude: f64,
    pub mean_awareness: f64,
}

impl MetricsFrame {
    pub fn total(&self) -> u32 {
        self.uninfluenced + self.influenced_inexperienced + self.experienced + self.discontinued
    }

    /// Experienced agents including those who later discontinued.
    pub fn ever_experienced(&self) -> u32 {
        self.experienced + self.discontinued
    }
}

/// Running SHA-256 over the little-endian bytes of every frame field.
#[derive(Debug, Clone, Default)]
pub struct MetricsDigest {
    hasher: Sha256,
    frames: u64,
}

impl MetricsDigest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, f: &MetricsFrame) {
        let h = &mut self.hasher;
        h.update(f.tick.to_le_bytes());
        h.update(f.demand_kw.to_le_bytes());
        for c in [f.uninfluenced, f.influenced_inexperienced, f.experienced, f.discontinued] {
            h.update(c.to_le_bytes());
        }
        h.update(f.mean_attitude.to_le_bytes());
        h.update(f.mean_awareness.to_le_bytes());
        self.frames += 1;
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    /// Hex digest of the frames pushed so far.
    pub fn hex(&self) -> String {
        self.hasher.clone().finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// [`MetricsDigest`] of a whole series.
pub fn metrics_digest(frames: &[MetricsFrame]) -> String {
    let mut d = MetricsDigest::new();
    frames.iter().for_each(|f| d.push(f));
    d.hex()
}

/// Per-agent A and ESA sampled at every day boundary, day-major.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectories {
    pub n_agents: usize,
    pub attitude: Vec<f32>,
    pub awareness: Vec<f32>,
}

impl Trajectories {
    pub fn days(&self) -> usize {
        if self.n_agents == 0 {
            0
        } else {
            self.attitude.len() / self.n_agents
        }
    }

    pub fn attitude_at(&self, day: usize, agent: usize) -> f32 {
        self.attitude[day * self.n_agents + agent]
    }

    pub fn awareness_at(&self, day: usize, agent: usize) -> f32 {
        self.awareness[day * self.n_agents + agent]
    }

    fn push(&mut self, agents: &[ConsumerAgent]) {
        self.attitude.extend(agents.iter().map(|a| a.attitude as f32));
        self.awareness.extend(agents.iter().map(|a| a.awareness as f32));
    }
}

const NO_WINDOW: u8 = u8::MAX;

#[derive(Debug, Clone)]
pub struct SimState {
    config: SimConfig,
    tick: Tick,
    agents: Vec<ConsumerAgent>,
    archetype_index: Vec<u8>,
    households: Vec<Household>,
    network: SocialNetwork,
    tables: Option<SwitchTables>,
    intervention_active: bool,
    p_th: f64,
    contact_rate: f64,
    coverage_order: Vec<u32>,
    behaviour_rng: Vec<SimRng>,
    response_rng: Vec<SimRng>,
    contact_rng: Vec<SimRng>,
    daily_rng: Vec<SimRng>,
    contact_pending: Vec<bool>,
    inbox: Vec<InfluenceMessage>,
    schedule: Vec<ScheduledCommand>,
    next_command: usize,
    window_by_minute: Vec<u8>,
    summary: Option<Summary>,
    trajectories: Option<Trajectories>,
}

#[derive(Debug, Clone, Copy)]
struct Summary {
    counts: [u32; 4],
    mean_attitude: f64,
    mean_awareness: f64,
}

fn pick_archetype(specs: &[ArchetypeSpec], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, s) in specs.iter().enumerate() {
        acc += s.population_share;
        if u < acc {
            return i;
        }
    }
    // Rounding slack in the cumulative sum goes to the last non-empty class.
    specs.iter().rposition(|s| s.population_share > 0.0).unwrap_or(specs.len() - 1)
}

impl SimState {
    /// Builds the population, households and network from `config`. All
    /// randomness is drawn from named sub-streams of `config.seed`.
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_agents;
        let seed = config.seed;
        let specs = &config.archetypes;

        let mut pop_rng = stream(seed, Stream::Population, 0);
        let mut agents = Vec::with_capacity(n);
        let mut archetype_index = Vec::with_capacity(n);
        for id in 0..n {
            let k = pick_archetype(specs, pop_rng.random());
            let mut a = ConsumerAgent::sample(id as u32, &specs[k], &mut pop_rng);
            let mut pos = stream(seed, Stream::Positions, id as u64);
            a.position = (pos.random(), pos.random());
            agents.push(a);
            archetype_index.push(k as u8);
        }

        let (households, tables) = if config.demand_enabled {
            let catalog = config.load_catalog()?;
            let tables = SwitchTables::new(&catalog, specs)?;
            let mut hh = Vec::with_capacity(n);
            for (i, a) in agents.iter().enumerate() {
                let k = archetype_index[i] as usize;
                let mut rng = stream(seed, Stream::Households, i as u64);
                hh.push(build_household(a, k, &specs[k], &catalog, config.seasonal_factor, &mut rng)?);
            }
            (hh, Some(tables))
        } else {
            (Vec::new(), None)
        };

        let network = generate_small_world(n, &config.network, seed)?;

        let mut coverage_order: Vec<u32> = (0..n as u32).collect();
        coverage_order.shuffle(&mut stream(seed, Stream::Intervention, 0));

        let per_agent = |s: Stream| -> Vec<SimRng> { (0..n as u64).map(|i| stream(seed, s, i)).collect() };

        let mut window_by_minute = vec![NO_WINDOW; MINUTES_PER_DAY as usize];
        for (w, win) in config.price_signal.peak_windows.iter().enumerate() {
            for m in win.start.0..win.end.0.min(MINUTES_PER_DAY) {
                window_by_minute[m as usize] = w as u8;
            }
        }

        let mut state = SimState {
            tick: 0,
            archetype_index,
            households,
            network,
            tables,
            intervention_active: false,
            p_th: config.p_th,
            contact_rate: config.contact_rate,
            coverage_order,
            behaviour_rng: per_agent(Stream::Behaviour),
            response_rng: per_agent(Stream::Response),
            contact_rng: per_agent(Stream::Contacts),
            daily_rng: per_agent(Stream::DailyTimes),
            contact_pending: vec![true; n],
            inbox: Vec::new(),
            schedule: config.schedule.clone(),
            next_command: 0,
            window_by_minute,
            summary: None,
            trajectories: config.record_trajectories.then(|| Trajectories {
                n_agents: n,
                ..Default::default()
            }),
            agents,
            config: config.clone(),
        };
        if let Some(t) = state.trajectories.as_mut() {
            t.push(&state.agents);
        }
        Ok(state)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn tick(&self) -> Tick {
        self.tick
    }

    pub fn day(&self) -> u64 {
        crate::time::day_of(self.tick)
    }

    pub fn agents(&self) -> &[ConsumerAgent] {
        &self.agents
    }

    pub fn households(&self) -> &[Household] {
        &self.households
    }

    pub fn network(&self) -> &SocialNetwork {
        &self.network
    }

    pub fn intervention_active(&self) -> bool {
        self.intervention_active
    }

    pub fn p_th(&self) -> f64 {
        self.p_th
    }

    pub fn contact_rate(&self) -> f64 {
        self.contact_rate
    }

    pub fn trajectories(&self) -> Option<&Trajectories> {
        self.trajectories.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.config.horizon_ticks()
    }

    fn archetype(&self, i: usize) -> &ArchetypeSpec {
        &self.config.archetypes[self.archetype_index[i] as usize]
    }

    fn agent_p_th(&self, i: usize) -> f64 {
        self.archetype(i).effective_p_th(self.p_th)
    }

    /// Applies a command immediately.
    pub fn apply(&mut self, command: Command) -> Result<()> {
        let problems = command.violations("command");
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        match command {
            Command::ApplyIntervention { coverage } => self.apply_intervention(coverage),
            Command::WithdrawIntervention => self.intervention_active = false,
            Command::SetContactRate { rate } => self.contact_rate = rate,
            Command::SetPTh { p_th } => self.p_th = p_th,
        }
        self.summary = None;
        Ok(())
    }

    /// Installs meters for the first `coverage * n` agents of the seeded
    /// coverage order and switches meters on. Idempotent.
    pub fn apply_intervention(&mut self, coverage: f64) {
        let count = (coverage.clamp(0.0, 1.0) * self.agents.len() as f64).round() as usize;
        for &i in &self.coverage_order[..count] {
            self.agents[i as usize].set_influenced();
        }
        self.intervention_active = true;
        self.summary = None;
    }

    /// Installs meters everywhere, then moves a seeded `fraction` of the
    /// population to Experienced: attitude is raised to at least
    /// `p_th + uplift` and the try count set to the smallest one reaching the
    /// threshold. Returns how many agents were moved.
    pub fn seed_experienced(&mut self, fraction: f64, uplift: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Domain(format!("fraction must lie in [0, 1], got {fraction}")));
        }
        self.apply_intervention(1.0);
        let n = self.agents.len();
        let count = (fraction * n as f64).round() as usize;
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.shuffle(&mut stream(self.config.seed, Stream::Scenario, 0));
        for &i in &order[..count] {
            let i = i as usize;
            let p_th = self.agent_p_th(i);
            let a = &mut self.agents[i];
            a.attitude = a.attitude.max((p_th + uplift).min(1.0));
            if a.awareness <= 0.0 {
                a.awareness = 0.01;
            }
            let t = minimal_tries(a.attitude, a.awareness, p_th).ok_or_else(|| {
                Error::Domain(format!("agent {i} cannot reach p_th {p_th} even after the uplift"))
            })?;
            a.tries = t;
            a.experience = Experience::Experienced;
        }
        self.summary = None;
        if let Some(tr) = self.trajectories.as_mut() {
            // Day-0 sample reflects the prepared scenario.
            tr.attitude.clear();
            tr.awareness.clear();
            tr.push(&self.agents);
        }
        Ok(count)
    }

    /// Adds commands to the pending schedule; they keep tick order.
    pub fn schedule(&mut self, cmd: ScheduledCommand) {
        let pos = self.schedule[self.next_command..]
            .iter()
            .position(|c| c.tick > cmd.tick)
            .map_or(self.schedule.len(), |p| p + self.next_command);
        self.schedule.insert(pos, cmd);
    }

    fn rollover(&mut self) {
        let tries = self.config.tries_per_day;
        for i in 0..self.agents.len() {
            let p_th = self.agent_p_th(i);
            let spec_idx = self.archetype_index[i] as usize;
            let a = &mut self.agents[i];
            if a.is_influenced() && self.intervention_active && !a.discontinued {
                a.record_tries(tries);
            }
            a.evaluate_experience_transition(p_th);
            let (leave, back) = self.config.archetypes[spec_idx].sample_daily_times(&mut self.daily_rng[i]);
            a.leave_time = leave;
            a.back_time = back;
            self.contact_pending[i] = true;
        }
        self.summary = None;
        if let Some(t) = self.trajectories.as_mut() {
            t.push(&self.agents);
        }
    }

    /// Advances one simulated minute.
    pub fn step(&mut self) -> MetricsFrame {
        let tick = self.tick;
        while let Some(cmd) = self.schedule.get(self.next_command) {
            if cmd.tick > tick {
                break;
            }
            let c = cmd.command;
            self.next_command += 1;
            // Schedules are validated on the way in.
            let _ = self.apply(c);
        }

        if tick > 0 && tick % MINUTES_PER_DAY as Tick == 0 {
            self.rollover();
        }

        let minute = minute_of_day(tick);
        let window = match self.window_by_minute[minute as usize] {
            NO_WINDOW => None,
            w => Some(w as usize),
        };
        let hour = (minute / 60) as usize;
        let active = self.intervention_active;
        let always = self.config.experienced_always_respond;
        let demand = self.tables.is_some();

        for i in 0..self.agents.len() {
            let a = &mut self.agents[i];
            if minute == a.leave_time {
                a.occupancy = Occupancy::Out;
                if demand {
                    self.households[i].switch_off_cycling();
                }
            }
            if minute == a.back_time {
                a.occupancy = Occupancy::AtHome;
            }
            if a.occupancy != Occupancy::AtHome {
                continue;
            }
            let a = &self.agents[i];
            if self.contact_pending[i] {
                self.contact_pending[i] = false;
                if let Some(m) = maybe_contact(
                    a,
                    self.network.neighbours(i),
                    self.contact_rate,
                    &mut self.contact_rng[i],
                ) {
                    self.inbox.push(m);
                }
            }
            if let Some(tables) = &self.tables {
                self.households[i].step_at_home(
                    window,
                    hour,
                    tables,
                    || peak_response_probability(a, active, always),
                    &mut self.behaviour_rng[i],
                    &mut self.response_rng[i],
                );
            }
        }

        if !self.inbox.is_empty() {
            self.inbox.sort_unstable_by_key(|m| (m.receiver, m.sender));
            let params = self.config.influence;
            for m in self.inbox.drain(..) {
                apply_influence(&mut self.agents[m.receiver as usize], &m, &params);
            }
            self.summary = None;
        }

        let demand_kw = if demand {
            self.households.iter().map(Household::tracked_demand).sum()
        } else {
            0.0
        };
        let s = self.summary();
        self.tick += 1;
        MetricsFrame {
            tick,
            demand_kw,
            uninfluenced: s.counts[0],
            influenced_inexperienced: s.counts[1],
            experienced: s.counts[2],
            discontinued: s.counts[3],
            mean_attitude: s.mean_attitude,
            mean_awareness: s.mean_awareness,
        }
    }

    fn summary(&mut self) -> Summary {
        if let Some(s) = self.summary {
            return s;
        }
        let mut counts = [0u32; 4];
        let (mut sa, mut se) = (0.0, 0.0);
        for a in &self.agents {
            let k = match a.state_class() {
                StateClass::Uninfluenced => 0,
                StateClass::InfluencedInexperienced => 1,
                StateClass::Experienced => 2,
                StateClass::Discontinued => 3,
            };
            counts[k] += 1;
            sa += a.attitude;
            se += a.awareness;
        }
        let n = self.agents.len().max(1) as f64;
        let s = Summary {
            counts,
            mean_attitude: sa / n,
            mean_awareness: se / n,
        };
        self.summary = Some(s);
        s
    }

    /// Records the end-of-horizon trajectory sample. Called by [`run`].
    pub fn finish(&mut self) {
        if let Some(t) = self.trajectories.as_mut() {
            if t.days() <= crate::time::day_of(self.tick) as usize {
                t.push(&self.agents);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub frames: Vec<MetricsFrame>,
    pub final_state: SimState,
}

/// Runs `config` to its horizon, handing every frame to `on_frame`.
pub fn run_with(state: &mut SimState, mut on_frame: impl FnMut(&MetricsFrame)) {
    while !state.is_finished() {
        let f = state.step();
        on_frame(&f);
    }
    state.finish();
}

/// Runs `config` with the given seed and command schedule, returning every
/// frame and the final state.
pub fn run(config: &SimConfig, seed: u64, schedule: &[ScheduledCommand]) -> Result<RunOutput> {
    let cfg = SimConfig {
        seed,
        schedule: schedule.to_vec(),
        ..config.clone()
    };
    let mut state = SimState::new(&cfg)?;
    let mut frames = Vec::with_capacity(cfg.horizon_ticks() as usize);
    run_with(&mut state, |f| frames.push(*f));
    Ok(RunOutput {
        frames,
        final_state: state,
    })
}
