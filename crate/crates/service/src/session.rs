//! One engine worker per session. Requests reach the worker through an
//! ordered queue; frames leave through a watch channel that keeps only the
//! latest, so slow subscribers see coalesced state instead of a backlog.

use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use learnsim_core::engine::{MetricsDigest, MetricsFrame};
use learnsim_core::time::{day_of, minute_of_day, MINUTES_PER_DAY};
use learnsim_core::{Error as CoreError, ScheduledCommand, SimConfig, SimState};
use tokio::sync::{oneshot, watch};

use crate::api::*;
use crate::ServiceError;

/// What a session starts from; kept so resets and exports can rebuild it.
#[derive(Debug, Clone)]
pub struct SessionParams {
    pub config: SimConfig,
    pub stride_minutes: u32,
    pub minutes_per_second: Option<f64>,
    pub max_agents_per_frame: usize,
}

impl SessionParams {
    pub fn from_request(req: CreateSession) -> Result<Self, ServiceError> {
        let mut config = req.config.unwrap_or_default();
        for (k, v) in &req.overrides {
            learnsim_core::experiments::set_parameter(&mut config, k, *v)
                .map_err(|e| ServiceError::invalid(e.to_string(), Vec::new()))?;
        }
        if let Some(seed) = req.seed {
            config.seed = seed;
        }
        config.validate().map_err(ServiceError::from_core)?;
        let stride_minutes = req.stride_minutes.unwrap_or(DEFAULT_STRIDE_MINUTES);
        if stride_minutes == 0 || stride_minutes > MINUTES_PER_DAY {
            return Err(ServiceError::invalid(
                "stride_minutes must lie in 1..=1440",
                vec![("stride_minutes", "1 <= stride_minutes <= 1440")],
            ));
        }
        let pace = req.minutes_per_second.unwrap_or(DEFAULT_MINUTES_PER_SECOND);
        check_pace(Some(pace))?;
        Ok(Self {
            config,
            stride_minutes,
            minutes_per_second: Some(pace),
            max_agents_per_frame: req.max_agents_per_frame.unwrap_or(DEFAULT_MAX_AGENTS_PER_FRAME),
        })
    }
}

fn check_pace(pace: Option<f64>) -> Result<(), ServiceError> {
    match pace {
        Some(p) if !(p > 0.0 && p.is_finite()) => Err(ServiceError::invalid(
            "minutes_per_second must be positive or null",
            vec![("minutes_per_second", "minutes_per_second > 0")],
        )),
        _ => Ok(()),
    }
}

pub(crate) type Reply<T> = oneshot::Sender<Result<T, ServiceError>>;

pub(crate) enum Request {
    Command(SessionCommand, Reply<LogEntry>),
    Summary(Reply<SessionSummary>),
    Log(Reply<LogExport>),
    Metrics(u64, Reply<Vec<MetricsFrame>>),
    Shutdown,
}

/// Cloneable handle to a running session worker.
#[derive(Clone)]
pub struct SessionHandle {
    pub id: SessionId,
    tx: mpsc::Sender<Request>,
    frames: Arc<watch::Sender<Option<Arc<FrameEvent>>>>,
}

impl SessionHandle {
    pub fn spawn(id: SessionId, params: SessionParams) -> Result<Self, ServiceError> {
        let state = SimState::new(&params.config).map_err(ServiceError::from_core)?;
        let (tx, rx) = mpsc::channel();
        let (frames, _) = watch::channel(None);
        let frames = Arc::new(frames);
        let worker = Worker {
            id,
            params,
            state,
            epoch: 0,
            running: false,
            anchor: None,
            log: Vec::new(),
            seq: 0,
            digest: MetricsDigest::new(),
            last_frame: None,
            history: Vec::new(),
            frames: frames.clone(),
        };
        thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || worker.run(rx))
            .map_err(|e| ServiceError::Internal(format!("cannot start session worker: {e}")))?;
        Ok(Self { id, tx, frames })
    }

    async fn ask<T>(&self, make: impl FnOnce(Reply<T>) -> Request) -> Result<T, ServiceError> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(make(reply)).map_err(|_| ServiceError::UnknownSession(self.id))?;
        rx.await.map_err(|_| ServiceError::UnknownSession(self.id))?
    }

    pub async fn command(&self, cmd: SessionCommand) -> Result<LogEntry, ServiceError> {
        self.ask(|r| Request::Command(cmd, r)).await
    }

    pub async fn summary(&self) -> Result<SessionSummary, ServiceError> {
        self.ask(Request::Summary).await
    }

    pub async fn log(&self) -> Result<LogExport, ServiceError> {
        self.ask(Request::Log).await
    }

    /// Stride frames with `tick >= since`, oldest first.
    pub async fn metrics(&self, since: u64) -> Result<Vec<MetricsFrame>, ServiceError> {
        self.ask(|r| Request::Metrics(since, r)).await
    }

    pub fn subscribe(&self) -> watch::Receiver<Option<Arc<FrameEvent>>> {
        self.frames.subscribe()
    }

    pub fn shutdown(&self) {
        let _ = self.tx.send(Request::Shutdown);
    }
}

struct Worker {
    id: SessionId,
    params: SessionParams,
    state: SimState,
    epoch: u64,
    running: bool,
    /// Wall-clock instant and tick the current pacing is measured from.
    anchor: Option<(Instant, u64)>,
    log: Vec<LogEntry>,
    seq: u64,
    digest: MetricsDigest,
    last_frame: Option<MetricsFrame>,
    history: Vec<MetricsFrame>,
    frames: Arc<watch::Sender<Option<Arc<FrameEvent>>>>,
}

/// Most ticks run between two looks at the request queue.
const MAX_BATCH: u64 = 240;

impl Worker {
    fn run(mut self, rx: mpsc::Receiver<Request>) {
        loop {
            let next = if self.running && !self.state.is_finished() {
                match self.due_ticks() {
                    0 => rx.recv_timeout(self.until_next_tick()),
                    _ => rx.try_recv().map_err(|e| match e {
                        mpsc::TryRecvError::Empty => RecvTimeoutError::Timeout,
                        mpsc::TryRecvError::Disconnected => RecvTimeoutError::Disconnected,
                    }),
                }
            } else {
                rx.recv().map_err(|_| RecvTimeoutError::Disconnected)
            };
            match next {
                Ok(Request::Shutdown) | Err(RecvTimeoutError::Disconnected) => return,
                Ok(req) => self.handle(req),
                Err(RecvTimeoutError::Timeout) => {}
            }
            if self.running {
                let n = self.due_ticks().min(MAX_BATCH);
                for _ in 0..n {
                    self.step();
                }
                if self.state.is_finished() {
                    self.running = false;
                    self.anchor = None;
                }
            }
        }
    }

    fn due_ticks(&self) -> u64 {
        if self.state.is_finished() {
            return 0;
        }
        let remaining = self.state.config().horizon_ticks() - self.state.tick();
        match (self.params.minutes_per_second, self.anchor) {
            (None, _) => remaining,
            (Some(p), Some((t0, tick0))) => {
                let target = tick0 + (t0.elapsed().as_secs_f64() * p) as u64;
                target.saturating_sub(self.state.tick()).min(remaining)
            }
            (Some(_), None) => 0,
        }
    }

    fn until_next_tick(&self) -> Duration {
        match (self.params.minutes_per_second, self.anchor) {
            (Some(p), Some((t0, tick0))) => {
                let next = (self.state.tick() + 1 - tick0) as f64 / p;
                Duration::from_secs_f64(next).saturating_sub(t0.elapsed()).max(Duration::from_millis(1))
            }
            _ => Duration::from_millis(1),
        }
    }

    fn step(&mut self) {
        let f = self.state.step();
        self.digest.push(&f);
        self.last_frame = Some(f);
        if f.tick % self.params.stride_minutes as u64 == 0 || self.state.is_finished() {
            self.history.push(f);
            self.publish(f);
        }
    }

    fn publish(&self, metrics: MetricsFrame) {
        let agents = self.state.agents();
        let max = self.params.max_agents_per_frame;
        let every = if max == 0 || agents.len() <= max {
            1
        } else {
            agents.len().div_ceil(max)
        };
        let dots = agents
            .iter()
            .step_by(every)
            .map(|a| AgentDot {
                id: a.id,
                state: a.state_class(),
                x: a.position.0,
                y: a.position.1,
            })
            .collect();
        let event = FrameEvent {
            api_version: API_VERSION,
            session: self.id,
            epoch: self.epoch,
            tick: metrics.tick,
            day: day_of(metrics.tick),
            minute_of_day: minute_of_day(metrics.tick),
            agents: dots,
            metrics,
        };
        self.frames.send_replace(Some(Arc::new(event)));
    }

    fn handle(&mut self, req: Request) {
        match req {
            Request::Command(cmd, reply) => {
                let _ = reply.send(self.command(cmd));
            }
            Request::Summary(reply) => {
                let _ = reply.send(Ok(self.summary()));
            }
            Request::Log(reply) => {
                let _ = reply.send(Ok(self.export()));
            }
            Request::Metrics(since, reply) => {
                let start = self.history.partition_point(|f| f.tick < since);
                let _ = reply.send(Ok(self.history[start..].to_vec()));
            }
            Request::Shutdown => {}
        }
    }

    fn command(&mut self, cmd: SessionCommand) -> Result<LogEntry, ServiceError> {
        let now = self.state.tick();
        let mut effective = now;
        match cmd {
            SessionCommand::Start => {
                if !self.running && !self.state.is_finished() {
                    self.running = true;
                    self.anchor = Some((Instant::now(), now));
                }
            }
            SessionCommand::Pause => {
                self.running = false;
                self.anchor = None;
            }
            SessionCommand::SetPacing { minutes_per_second } => {
                check_pace(minutes_per_second)?;
                self.params.minutes_per_second = minutes_per_second;
                if self.running {
                    self.anchor = Some((Instant::now(), now));
                }
            }
            SessionCommand::Reset { seed } => {
                let mut config = self.params.config.clone();
                if let Some(s) = seed {
                    config.seed = s;
                }
                self.state = SimState::new(&config).map_err(ServiceError::from_core)?;
                self.params.config = config;
                self.epoch += 1;
                self.running = false;
                self.anchor = None;
                self.digest = MetricsDigest::new();
                self.last_frame = None;
                self.history.clear();
                effective = 0;
            }
            SessionCommand::Sim(c) => {
                let v = c.violations("command");
                if !v.is_empty() {
                    return Err(ServiceError::from_core(CoreError::InvalidConfig(v)));
                }
                if self.state.is_finished() {
                    return Err(ServiceError::Conflict("session has reached its horizon".into()));
                }
                let day = MINUTES_PER_DAY as u64;
                effective = now.div_ceil(day) * day;
                if effective >= self.state.config().horizon_ticks() {
                    return Err(ServiceError::Conflict(format!(
                        "next day boundary (tick {effective}) lies beyond the horizon"
                    )));
                }
                self.state.schedule(ScheduledCommand {
                    tick: effective,
                    command: c,
                });
            }
        }
        self.seq += 1;
        let entry = LogEntry {
            seq: self.seq,
            epoch: self.epoch,
            received_tick: now,
            effective_tick: effective,
            command: cmd,
        };
        self.log.push(entry.clone());
        Ok(entry)
    }

    fn summary(&self) -> SessionSummary {
        let cfg = self.state.config();
        let status = if self.state.is_finished() {
            Status::Finished
        } else if self.running {
            Status::Running
        } else {
            Status::Paused
        };
        SessionSummary {
            api_version: API_VERSION,
            id: self.id,
            epoch: self.epoch,
            seed: cfg.seed,
            n_agents: cfg.n_agents,
            status,
            tick: self.state.tick(),
            day: self.state.day(),
            horizon_ticks: cfg.horizon_ticks(),
            minutes_per_second: self.params.minutes_per_second,
            stride_minutes: self.params.stride_minutes,
            intervention_active: self.state.intervention_active(),
            p_th: self.state.p_th(),
            contact_rate: self.state.contact_rate(),
            last_frame: self.last_frame,
            digest: self.digest.hex(),
            log_len: self.log.len(),
        }
    }

    fn export(&self) -> LogExport {
        let entries: Vec<LogEntry> = self.log.iter().filter(|e| e.epoch == self.epoch).cloned().collect();
        let mut config = self.params.config.clone();
        config.schedule.extend(entries.iter().filter_map(|e| match e.command {
            SessionCommand::Sim(c) => Some(ScheduledCommand {
                tick: e.effective_tick,
                command: c,
            }),
            _ => None,
        }));
        // Stable: same-tick commands keep arrival order, as in the engine.
        config.schedule.sort_by_key(|c| c.tick);
        LogExport {
            api_version: API_VERSION,
            session: self.id,
            epoch: self.epoch,
            config,
            entries,
        }
    }
}

impl LogExport {
    /// Replayable configuration document; control commands are listed as
    /// comments because they do not change the metrics.
    pub fn to_toml(&self) -> String {
        let mut out = format!(
            "# learnsim session {} epoch {} command log\n# replay: learnsim run --config <this file>\n",
            self.session, self.epoch
        );
        for e in &self.entries {
            let what = serde_json::to_string(&e.command).unwrap_or_default();
            out.push_str(&format!(
                "# seq {} received {} effective {} {}\n",
                e.seq, e.received_tick, e.effective_tick, what
            ));
        }
        out.push('\n');
        out.push_str(&self.config.to_toml_string());
        out
    }
}
