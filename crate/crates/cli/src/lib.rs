//! `learnsim` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 runtime error,
//! 3 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use learnsim_core::demand::DEFAULT_CATALOG_CSV;
use learnsim_core::engine::{run_with, MetricsDigest, MetricsFrame, SimState};
use learnsim_core::experiments::{
    run_experiment_with_jobs, write_outputs, DailyCurveAccumulator, ExperimentId, ExperimentResult, ExperimentSpec,
    Sweep, BUNDLED_REFERENCE_CSV,
};
use learnsim_core::error::Violation;
use learnsim_core::{Error, LoadCurve, SimConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const OUT_ENV: &str = "LEARNSIM_OUT";
pub const MANIFEST_FILE: &str = "manifest.json";

pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const RUNTIME: i32 = 2;
    pub const IO: i32 = 3;
}

#[derive(Parser, Debug)]
#[command(name = "learnsim", version, about = "Smart-meter learning simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Check a configuration file and report every violation.
    Validate(ValidateArgs),
    /// Run one simulation.
    Run(RunArgs),
    /// Run a multi-run experiment preset or a custom sweep.
    Experiment(ExperimentArgs),
    /// Write the built-in configuration, appliance catalog and reference profile.
    ExportDefaults(ExportArgs),
    /// Start the HTTP control service.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Configuration file; the built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to `$LEARNSIM_OUT/run-seed<seed>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write every n-th tick to metrics.csv.
    #[arg(long, default_value_t = 30)]
    pub every: u64,
    /// Re-run exactly what a previous manifest recorded.
    #[arg(long, conflicts_with_all = ["config", "seed"])]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ExperimentArgs {
    /// E1, E2, E3, E4 or custom.
    #[arg(long)]
    pub id: Option<ExperimentId>,
    /// Base configuration for the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Replace the preset's sweep, e.g. `contact_rate=0.5,0.3,0.1`.
    #[arg(long)]
    pub sweep: Option<Sweep>,
    /// Reference load profile (`time,kw` CSV) for load validation.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, conflicts_with_all = ["id", "config", "seed", "runs", "sweep", "reference"])]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    /// Directory for learnsim.toml, catalog.csv and reference_profile.csv;
    /// prints the configuration to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Built dashboard assets to serve alongside the API.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

/// Errors mapped onto the exit-code contract.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Runtime(_) => exit::RUNTIME,
            CliError::Io(_) => exit::IO,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::Parse { .. } => CliError::Config(e.to_string()),
            Error::Io(_) => CliError::Io(e.to_string()),
            Error::Run { ref source, .. } if matches!(**source, Error::Io(_)) => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn load_config(path: Option<&Path>) -> Result<SimConfig, CliError> {
    match path {
        None => Ok(SimConfig::default()),
        Some(p) => {
            if let Err(e) = fs::metadata(p) {
                return Err(io_err(p)(e));
            }
            SimConfig::load(p).map_err(|e| match e {
                Error::Io(io) => CliError::Io(format!("{}: {io}", p.display())),
                other => CliError::from(other),
            })
        }
    }
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("learnsim-out"), PathBuf::from)
}

fn prepare_out(explicit: Option<&Path>, default_name: &str) -> Result<PathBuf, CliError> {
    let dir = explicit.map_or_else(|| out_root().join(default_name), Path::to_path_buf);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    Ok(dir)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub sha256: String,
}

/// Written next to every result set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// SHA-256 of the canonical JSON form of `config`.
    pub config_sha256: String,
    pub config: SimConfig,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentRecord>,
    /// SHA-256 over every metrics frame, for single runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub every: Option<u64>,
    pub wall_time_s: f64,
    pub files: Vec<ManifestFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub id: ExperimentId,
    pub n_runs: usize,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_manifest(dir: &Path, mut m: Manifest, written: &[PathBuf]) -> Result<PathBuf, CliError> {
    for p in written {
        let bytes = fs::read(p).map_err(io_err(p))?;
        m.files.push(ManifestFile {
            name: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            sha256: sha256_hex(&bytes),
        });
    }
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&m).expect("manifest serialises");
    write_file(&path, json + "\n")?;
    Ok(path)
}

fn manifest(subcommand: &str, config: &SimConfig, seeds: Vec<u64>, started: Instant) -> Manifest {
    Manifest {
        tool: "learnsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        config_sha256: config.fingerprint(),
        config: config.clone(),
        seeds,
        experiment: None,
        metrics_digest: None,
        every: None,
        wall_time_s: started.elapsed().as_secs_f64(),
        files: Vec::new(),
    }
}

pub fn validate(args: &ValidateArgs, out: &mut impl Write) -> Result<(), CliError> {
    let mut config = match &args.config {
        None => SimConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            SimConfig::from_toml_str(&text)?
        }
    };
    if let (Some(cat), Some(p)) = (&config.catalog, &args.config) {
        if cat.is_relative() {
            config.catalog = Some(p.parent().unwrap_or(Path::new("")).join(cat));
        }
    }
    let mut v = config.violations();
    match config.load_catalog() {
        Ok(c) => v.extend(c.violations()),
        Err(e) => v.push(Violation::new("catalog", e.to_string())),
    }
    if v.is_empty() {
        let _ = writeln!(out, "valid");
        return Ok(());
    }
    for x in &v {
        let _ = writeln!(out, "{x}");
    }
    Err(CliError::Config(format!("{} violation(s)", v.len())))
}

#[derive(Debug, Clone, Serialize)]
struct RunSummary {
    seed: u64,
    ticks: u64,
    metrics_digest: String,
    final_frame: Option<MetricsFrame>,
    mean_daily_energy_kwh: Option<f64>,
}

const METRICS_HEADER: &str =
    "tick,demand_kw,uninfluenced,influenced_inexperienced,experienced,discontinued,mean_attitude,mean_awareness\n";

fn frame_row(f: &MetricsFrame, s: &mut String) {
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{},{}",
        f.tick,
        f.demand_kw,
        f.uninfluenced,
        f.influenced_inexperienced,
        f.experienced,
        f.discontinued,
        f.mean_attitude,
        f.mean_awareness
    );
}

pub fn run(args: &RunArgs, out: &mut impl Write) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let (mut config, every) = match &args.manifest {
        Some(m) => {
            let m = read_manifest(m)?;
            (m.config, m.every.unwrap_or(args.every))
        }
        None => (load_config(args.config.as_deref())?, args.every),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if every == 0 {
        return Err(CliError::Config("--every must be at least 1".into()));
    }
    let dir = prepare_out(args.out.as_deref(), &format!("run-seed{}", config.seed))?;
    let mut state = SimState::new(&config)?;
    let mut digest = MetricsDigest::new();
    let mut csv = String::from(METRICS_HEADER);
    let mut curve = DailyCurveAccumulator::new(config.n_agents, 0);
    let mut last = None;
    run_with(&mut state, |f| {
        digest.push(f);
        curve.push(f);
        if f.tick % every == 0 {
            frame_row(f, &mut csv);
        }
        last = Some(*f);
    });
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<(), CliError> {
        let p = dir.join(name);
        write_file(&p, body)?;
        written.push(p);
        Ok(())
    };
    put("metrics.csv", csv)?;
    let mut agents = String::from("id,archetype,state,attitude,awareness,tries,x,y\n");
    for a in state.agents() {
        let state = serde_json::to_value(a.state_class()).expect("state serialises");
        let _ = writeln!(
            agents,
            "{},{},{},{},{},{},{},{}",
            a.id,
            a.archetype.name(),
            state.as_str().unwrap_or_default(),
            a.attitude,
            a.awareness,
            a.tries,
            a.position.0,
            a.position.1
        );
    }
    put("agents.csv", agents)?;
    put("network.edges", state.network().to_edge_list())?;
    let mut energy = None;
    if config.demand_enabled && curve.days() > 0 {
        let c = curve.curve()?;
        energy = Some(c.energy_kwh() * config.n_agents as f64);
        put("load_curve.csv", c.to_csv("kw_per_agent"))?;
    }
    let summary = RunSummary {
        seed: config.seed,
        ticks: digest.frames(),
        metrics_digest: digest.hex(),
        final_frame: last,
        mean_daily_energy_kwh: energy,
    };
    put("summary.json", serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n")?;
    put("config.toml", config.to_toml_string())?;

    let mut m = manifest("run", &config, vec![config.seed], started);
    m.metrics_digest = Some(summary.metrics_digest.clone());
    m.every = Some(every);
    let path = write_manifest(&dir, m, &written)?;
    let _ = writeln!(out, "digest {}", summary.metrics_digest);
    if let Some(f) = last {
        let _ = writeln!(
            out,
            "final: uninfluenced {} influenced {} experienced {} discontinued {}",
            f.uninfluenced, f.influenced_inexperienced, f.experienced, f.discontinued
        );
    }
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(dir)
}

pub fn experiment(args: &ExperimentArgs, out: &mut impl Write) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let spec = match &args.manifest {
        Some(p) => {
            let m = read_manifest(p)?;
            let rec = m
                .experiment
                .ok_or_else(|| CliError::Config(format!("{} is not an experiment manifest", p.display())))?;
            let mut spec = ExperimentSpec::preset(rec.id, &m.config);
            // The manifest stores the effective configuration.
            spec.base = m.config;
            spec.n_runs = rec.n_runs;
            spec.base_seed = rec.base_seed;
            spec.sweep = rec.sweep;
            spec
        }
        None => {
            let id = args
                .id
                .ok_or_else(|| CliError::Config("--id is required (E1, E2, E3, E4 or custom)".into()))?;
            let base = load_config(args.config.as_deref())?;
            let mut spec = ExperimentSpec::preset(id, &base);
            if let Some(s) = args.seed {
                spec.base_seed = s;
                spec.base.seed = s;
            }
            if let Some(r) = args.runs {
                spec.n_runs = r;
            }
            if let Some(s) = &args.sweep {
                spec.sweep = Some(s.clone());
            }
            if let Some(p) = &args.reference {
                let text = fs::read_to_string(p).map_err(io_err(p))?;
                spec.reference = Some(LoadCurve::from_csv_str(&text)?);
            }
            spec
        }
    };
    let dir = prepare_out(args.out.as_deref(), spec.id.short())?;
    let result = run_experiment_with_jobs(&spec, args.jobs)?;
    let written = write_outputs(&result, &dir)?;
    let mut m = manifest(
        "experiment",
        &spec.base,
        (0..spec.n_runs as u64).map(|r| spec.base_seed.wrapping_add(r)).collect(),
        started,
    );
    m.experiment = Some(ExperimentRecord {
        id: spec.id,
        n_runs: spec.n_runs,
        base_seed: spec.base_seed,
        sweep: spec.sweep.clone(),
    });
    let path = write_manifest(&dir, m, &written)?;
    let _ = out.write_all(report(&result).as_bytes());
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(dir)
}

/// Plain-text digest of an experiment result.
pub fn report(r: &ExperimentResult) -> String {
    let mut s = format!("{} ({} runs per point)\n", r.id, r.n_runs);
    for p in &r.points {
        let _ = write!(s, "  {}", p.label);
        for (k, v) in &p.scalars {
            let _ = write!(s, "  {k} {:.4} ± {:.4}", v.mean, v.std);
        }
        s.push('\n');
    }
    if let Some(v) = &r.load_validation {
        let _ = writeln!(
            s,
            "  bimodal {}  morning peak {:.3} kW  evening peak {:.3} kW  trough {:.3} kW",
            v.bimodal, v.shape.morning_peak_kw, v.shape.evening_peak_kw, v.shape.overnight_trough_kw
        );
        if let Some(c) = &v.comparison {
            let _ = writeln!(
                s,
                "  vs reference: MAPE {:.2}%  RMSE {:.4} kW  peak offsets {} / {} half-hours",
                c.mape, c.rmse, c.morning_peak_offset, c.evening_peak_offset
            );
        }
    }
    for red in &r.reductions {
        let _ = writeln!(
            s,
            "  {} reduction {:.2}% (per run {:.2} ± {:.2})",
            red.label, red.reduction_pct, red.per_run.mean, red.per_run.std
        );
    }
    if let Some(d) = &r.discontinuance {
        let _ = writeln!(
            s,
            "  discontinuers {:.2}% of {} experienced; A slope continuers {:+.5} discontinuers {:+.5}; \
             ESA slope continuers {:+.5} discontinuers {:+.5}",
            100.0 * d.discontinuer_fraction,
            d.experienced_agents,
            d.continuers.attitude_slope(),
            d.discontinuers.attitude_slope(),
            d.continuers.awareness_slope(),
            d.discontinuers.awareness_slope()
        );
    }
    s
}

pub fn export_defaults(args: &ExportArgs, out: &mut impl Write) -> Result<(), CliError> {
    let config = SimConfig::default();
    match &args.out {
        None => {
            let _ = out.write_all(config.to_toml_string().as_bytes());
        }
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            let with_catalog = SimConfig {
                catalog: Some(PathBuf::from("catalog.csv")),
                ..config
            };
            write_file(&dir.join("learnsim.toml"), with_catalog.to_toml_string())?;
            write_file(&dir.join("catalog.csv"), DEFAULT_CATALOG_CSV)?;
            write_file(&dir.join("reference_profile.csv"), BUNDLED_REFERENCE_CSV)?;
            let _ = writeln!(out, "wrote {}", dir.display());
        }
    }
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start runtime: {e}")))?;
    let opts = learnsim_service::ServeOptions {
        addr: args.addr,
        static_dir: args.static_dir.clone(),
    };
    rt.block_on(learnsim_service::serve(opts, |addr| {
        println!("listening on http://{addr}");
        let _ = io::stdout().flush();
    }))
    .map_err(|e| CliError::Io(format!("serve on {}: {e}", args.addr)))
}

/// Parses `args` and runs the chosen subcommand, returning the exit code.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::CONFIG } else { exit::OK };
        }
    };
    let mut out = io::stdout();
    let result = match &cli.command {
        Cmd::Validate(a) => validate(a, &mut out),
        Cmd::Run(a) => run(a, &mut out).map(|_| ()),
        Cmd::Experiment(a) => experiment(a, &mut out).map(|_| ()),
        Cmd::ExportDefaults(a) => export_defaults(a, &mut out),
        Cmd::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
