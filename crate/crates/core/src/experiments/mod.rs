//! Multi-run experiment harness: the four preset experiments plus custom
//! sweeps, seeded per run, executed in parallel and reduced in a fixed
//! (sweep point, run index) order so results never depend on scheduling.

mod output;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use output::{kpi_file_name, write_outputs};
pub use stats::{
    compare_to_reference, discontinuance_analysis, energy_reduction, mean_daily_load_curve, mean_std, slope,
    CurveComparison, DailyCurveAccumulator, DiscontinuanceAnalysis, GroupTrajectory, ProfileShape, BUCKETS_PER_DAY,
};

use crate::agent::ConsumerAgent;
use crate::config::{Command, ScheduledCommand, SimConfig};
use crate::demand::LoadCurve;
use crate::engine::{run_with, SimState, Trajectories};
use crate::error::{Error, Result};
use crate::time::MINUTES_PER_DAY;

pub const DEFAULT_RUNS: usize = 50;
/// Share of agents that start experienced in the experienced scenario.
pub const EXPERIENCED_FRACTION: f64 = 0.8;
/// Attitude headroom above `p_th` given to agents seeded as experienced.
pub const EXPERIENCED_UPLIFT: f64 = 0.02;
pub const E2_HORIZON_DAYS: u32 = 30;
pub const BUNDLED_REFERENCE_CSV: &str = include_str!("../../data/reference_profile.csv");

pub fn bundled_reference() -> LoadCurve {
    LoadCurve::from_csv_str(BUNDLED_REFERENCE_CSV).expect("bundled reference parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExperimentId {
    #[serde(rename = "E1")]
    E1LoadValidation,
    #[serde(rename = "E2")]
    E2ExperienceEffect,
    #[serde(rename = "E3")]
    E3ContactRate,
    #[serde(rename = "E4")]
    E4Discontinuance,
    #[serde(rename = "custom")]
    Custom,
}

impl ExperimentId {
    pub const PRESETS: [ExperimentId; 4] = [
        ExperimentId::E1LoadValidation,
        ExperimentId::E2ExperienceEffect,
        ExperimentId::E3ContactRate,
        ExperimentId::E4Discontinuance,
    ];

    pub fn short(self) -> &'static str {
        match self {
            ExperimentId::E1LoadValidation => "e1",
            ExperimentId::E2ExperienceEffect => "e2",
            ExperimentId::E3ContactRate => "e3",
            ExperimentId::E4Discontinuance => "e4",
            ExperimentId::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short().to_uppercase())
    }
}

impl FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "e1" | "load-validation" => Ok(ExperimentId::E1LoadValidation),
            "e2" | "experience-effect" => Ok(ExperimentId::E2ExperienceEffect),
            "e3" | "contact-rate" => Ok(ExperimentId::E3ContactRate),
            "e4" | "discontinuance" => Ok(ExperimentId::E4Discontinuance),
            "custom" => Ok(ExperimentId::Custom),
            _ => Err(format!("unknown experiment {s:?} (expected E1, E2, E3, E4 or custom)")),
        }
    }
}

/// How each run's state is prepared before the first tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// Freshly sampled population; the config's schedule decides everything.
    Fresh,
    /// Every agent metered, a seeded fraction already experienced.
    Experienced { fraction: f64, uplift: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = String;

    /// `key=v1,v2,...`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, vals) = s
            .split_once('=')
            .ok_or_else(|| format!("expected key=v1,v2,... got {s:?}"))?;
        let values = vals
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("{v:?} is not a number")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Sweep {
            key: key.trim().to_string(),
            values,
        })
    }
}

pub const SWEEP_KEYS: [&str; 10] = [
    "p_th",
    "contact_rate",
    "tries_per_day",
    "seasonal_factor",
    "horizon_days",
    "n_agents",
    "influence.eta",
    "influence.experience_bonus",
    "influence.novice_bonus",
    "network.beta",
];

/// Sets one sweepable parameter.
pub fn set_parameter(config: &mut SimConfig, key: &str, value: f64) -> Result<()> {
    let whole = |v: f64| -> Result<u64> {
        if v.fract() != 0.0 || v < 0.0 {
            Err(Error::Domain(format!("{key} needs a non-negative whole number, got {v}")))
        } else {
            Ok(v as u64)
        }
    };
    match key {
        "p_th" => config.p_th = value,
        "contact_rate" => config.contact_rate = value,
        "tries_per_day" => config.tries_per_day = whole(value)? as u32,
        "seasonal_factor" => config.seasonal_factor = value,
        "horizon_days" => config.horizon_days = whole(value)? as u32,
        "n_agents" => config.n_agents = whole(value)? as usize,
        "influence.eta" => config.influence.eta = value,
        "influence.experience_bonus" => config.influence.experience_bonus = value,
        "influence.novice_bonus" => config.influence.novice_bonus = value,
        "network.beta" => config.network.beta = value,
        _ => {
            return Err(Error::Domain(format!(
                "unknown sweep key {key:?}; expected one of {}",
                SWEEP_KEYS.join(", ")
            )))
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub base: SimConfig,
    pub sweep: Option<Sweep>,
    pub n_runs: usize,
    /// Run `r` of every sweep point uses seed `base_seed + r`.
    pub base_seed: u64,
    pub scenario: Scenario,
    /// Leading days of each run left out of load curves.
    pub warmup_days: u32,
    /// Reference profile for load validation.
    pub reference: Option<LoadCurve>,
}

impl ExperimentSpec {
    /// The preset for `id` on top of `base`.
    pub fn preset(id: ExperimentId, base: &SimConfig) -> Self {
        let fresh_with_meters = vec![ScheduledCommand {
            tick: 0,
            command: Command::ApplyIntervention { coverage: 1.0 },
        }];
        let mut spec = ExperimentSpec {
            id,
            base: base.clone(),
            sweep: None,
            n_runs: DEFAULT_RUNS,
            base_seed: base.seed,
            scenario: Scenario::Fresh,
            warmup_days: 0,
            reference: None,
        };
        match id {
            ExperimentId::E1LoadValidation => {
                // Households start with every flexible appliance off, so
                // the first day is a warm-up and the second is measured.
                spec.base.horizon_days = 2;
                spec.base.schedule.clear();
                spec.base.demand_enabled = true;
                spec.warmup_days = 1;
                spec.reference = Some(bundled_reference());
            }
            ExperimentId::E2ExperienceEffect => {
                spec.base.horizon_days = E2_HORIZON_DAYS;
                spec.base.demand_enabled = true;
                spec.base.schedule.clear();
                spec.sweep = Some(Sweep {
                    key: "p_th".into(),
                    values: vec![0.8, 0.85, 0.9],
                });
                spec.scenario = Scenario::Experienced {
                    fraction: EXPERIENCED_FRACTION,
                    uplift: EXPERIENCED_UPLIFT,
                };
            }
            ExperimentId::E3ContactRate => {
                spec.base.horizon_days = 90;
                spec.base.demand_enabled = false;
                spec.base.schedule = fresh_with_meters;
                spec.sweep = Some(Sweep {
                    key: "contact_rate".into(),
                    values: vec![0.5, 0.3, 0.1],
                });
            }
            ExperimentId::E4Discontinuance => {
                spec.base.horizon_days = 90;
                spec.base.demand_enabled = false;
                spec.base.record_trajectories = true;
                spec.base.schedule.clear();
                spec.scenario = Scenario::Experienced {
                    fraction: EXPERIENCED_FRACTION,
                    uplift: EXPERIENCED_UPLIFT,
                };
            }
            ExperimentId::Custom => {}
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        use crate::error::Violation;
        let mut v: Vec<Violation> = self
            .base
            .violations()
            .into_iter()
            .map(|x| Violation::new(format!("base.{}", x.path), x.rule))
            .collect();
        if self.n_runs == 0 {
            v.push(Violation::new("n_runs", "n_runs >= 1"));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                v.push(Violation::new("sweep.values", "sweep needs at least one value"));
            }
            for (i, a) in s.values.iter().enumerate() {
                if s.values[..i].contains(a) {
                    v.push(Violation::new("sweep.values", format!("duplicate sweep value {a}")));
                }
                let mut c = self.base.clone();
                match set_parameter(&mut c, &s.key, *a) {
                    Err(e) => v.push(Violation::new("sweep.key", e.to_string())),
                    Ok(()) => v.extend(
                        c.violations()
                            .into_iter()
                            .map(|x| Violation::new(format!("sweep[{}={a}].{}", s.key, x.path), x.rule)),
                    ),
                }
            }
        }
        if let Scenario::Experienced { fraction, uplift } = self.scenario {
            if !(0.0..=1.0).contains(&fraction) {
                v.push(Violation::new("scenario.fraction", "0 <= fraction <= 1"));
            }
            if !(0.0..=1.0).contains(&uplift) {
                v.push(Violation::new("scenario.uplift", "0 <= uplift <= 1"));
            }
        }
        if self.warmup_days >= self.base.horizon_days && self.base.demand_enabled {
            v.push(Violation::new("warmup_days", "warm-up must leave at least one measured day"));
        }
        v.dedup();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    /// Sweep points in execution order. Experience-effect experiments get a
    /// leading baseline point: every agent metered, none experienced, and
    /// learning frozen.
    pub fn points(&self) -> Result<Vec<Point>> {
        let mut out = Vec::new();
        if self.id == ExperimentId::E2ExperienceEffect {
            let mut c = self.base.clone();
            c.tries_per_day = 0;
            out.push(Point {
                label: "baseline".into(),
                value: None,
                config: c,
                scenario: Scenario::Experienced {
                    fraction: 0.0,
                    uplift: 0.0,
                },
            });
        }
        match &self.sweep {
            None => out.push(Point {
                label: "default".into(),
                value: None,
                config: self.base.clone(),
                scenario: self.scenario,
            }),
            Some(s) => {
                for &v in &s.values {
                    let mut c = self.base.clone();
                    set_parameter(&mut c, &s.key, v)?;
                    out.push(Point {
                        label: format!("{}={v}", s.key),
                        value: Some(v),
                        config: c,
                        scenario: self.scenario,
                    });
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub label: String,
    pub value: Option<f64>,
    pub config: SimConfig,
    pub scenario: Scenario,
}

/// Initial state for one run of a point.
pub fn prepare_run(config: &SimConfig, scenario: Scenario) -> Result<SimState> {
    let mut state = SimState::new(config)?;
    if let Scenario::Experienced { fraction, uplift } = scenario {
        state.seed_experienced(fraction, uplift)?;
    }
    Ok(state)
}

/// A run in which `fraction` of the agents start experienced (see
/// [`SimState::seed_experienced`]), with the standard attitude uplift.
pub fn experienced_scenario_setup(config: &SimConfig, fraction: f64) -> Result<SimState> {
    prepare_run(
        config,
        Scenario::Experienced {
            fraction,
            uplift: EXPERIENCED_UPLIFT,
        },
    )
}

/// Everything kept from one run.
#[derive(Debug, Clone, Default)]
pub struct RunRecord {
    /// Per-agent energy of each simulated day.
    pub daily_energy_kwh: Vec<f64>,
    pub load_curve: Option<LoadCurve>,
    /// End-of-day values.
    pub ever_experienced: Vec<f64>,
    pub discontinued: Vec<f64>,
    pub mean_attitude: Vec<f64>,
    pub mean_awareness: Vec<f64>,
    pub final_agents: Option<Vec<ConsumerAgent>>,
    pub trajectories: Option<Trajectories>,
}

impl RunRecord {
    pub fn mean_daily_energy(&self) -> f64 {
        mean_std(&self.daily_energy_kwh).0
    }
}

pub fn execute_run(config: &SimConfig, scenario: Scenario, warmup_days: u32) -> Result<RunRecord> {
    let mut state = prepare_run(config, scenario)?;
    let n = config.n_agents as f64;
    let demand = config.demand_enabled;
    let mut rec = RunRecord::default();
    let mut curve = DailyCurveAccumulator::new(config.n_agents, warmup_days as u64);
    let mut day_kwh = 0.0;
    run_with(&mut state, |f| {
        if demand {
            curve.push(f);
            day_kwh += f.demand_kw / 60.0;
        }
        if f.tick % MINUTES_PER_DAY as u64 == MINUTES_PER_DAY as u64 - 1 {
            if demand {
                rec.daily_energy_kwh.push(day_kwh / n);
                day_kwh = 0.0;
            }
            rec.ever_experienced.push(f.ever_experienced() as f64);
            rec.discontinued.push(f.discontinued as f64);
            rec.mean_attitude.push(f.mean_attitude);
            rec.mean_awareness.push(f.mean_awareness);
        }
    });
    if demand && curve.days() > 0 {
        rec.load_curve = Some(curve.curve()?);
    }
    if config.record_trajectories {
        rec.final_agents = Some(state.agents().to_vec());
        rec.trajectories = state.trajectories().cloned();
    }
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiSeries {
    pub kpi: String,
    /// `day` (1-based, end of day) or `time` (start of half-hour bucket).
    pub index_name: String,
    pub index: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scalar {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub label: String,
    pub value: Option<f64>,
    pub n_runs: usize,
    pub series: Vec<KpiSeries>,
    pub scalars: BTreeMap<String, Scalar>,
}

impl PointResult {
    pub fn series(&self, kpi: &str) -> Option<&KpiSeries> {
        self.series.iter().find(|s| s.kpi == kpi)
    }

    pub fn scalar(&self, name: &str) -> Option<Scalar> {
        self.scalars.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadValidation {
    pub curve: LoadCurve,
    pub shape: ProfileShape,
    pub bimodal: bool,
    pub comparison: Option<CurveComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub label: String,
    pub value: Option<f64>,
    /// Reduction of the run-averaged mean daily energy.
    pub reduction_pct: f64,
    /// Mean and spread of the per-run paired reductions.
    pub per_run: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub id: ExperimentId,
    pub n_runs: usize,
    pub sweep_key: Option<String>,
    pub points: Vec<PointResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub load_validation: Option<LoadValidation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reductions: Vec<Reduction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discontinuance: Option<DiscontinuanceAnalysis>,
}

impl ExperimentResult {
    pub fn point(&self, label: &str) -> Option<&PointResult> {
        self.points.iter().find(|p| p.label == label)
    }
}

fn aggregate(kpi: &str, index_name: &str, index: Vec<String>, runs: &[&[f64]]) -> KpiSeries {
    let len = runs.iter().map(|r| r.len()).min().unwrap_or(0);
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    let mut col = Vec::with_capacity(runs.len());
    for i in 0..len {
        col.clear();
        col.extend(runs.iter().map(|r| r[i]));
        let (m, s) = mean_std(&col);
        mean.push(m);
        std.push(s);
    }
    KpiSeries {
        kpi: kpi.into(),
        index_name: index_name.into(),
        index: index.into_iter().take(len).collect(),
        mean,
        std,
    }
}

fn day_index(n: usize) -> Vec<String> {
    (1..=n).map(|d| d.to_string()).collect()
}

fn summarise_point(point: &Point, runs: &[RunRecord]) -> PointResult {
    let days = runs.first().map_or(0, |r| r.ever_experienced.len());
    let mut series = Vec::new();
    let col = |f: fn(&RunRecord) -> &Vec<f64>| runs.iter().map(|r| f(r).as_slice()).collect::<Vec<_>>();
    if point.config.demand_enabled {
        series.push(aggregate("daily_energy_kwh", "day", day_index(days), &col(|r| &r.daily_energy_kwh)));
        let curves: Vec<&[f64]> = runs
            .iter()
            .filter_map(|r| r.load_curve.as_ref().map(|c| c.values.as_slice()))
            .collect();
        if curves.len() == runs.len() && !curves.is_empty() {
            let times = (0..BUCKETS_PER_DAY)
                .map(|b| format!("{:02}:{:02}", b / 2, (b % 2) * 30))
                .collect();
            series.push(aggregate("load_curve_kw", "time", times, &curves));
        }
    }
    series.push(aggregate("ever_experienced", "day", day_index(days), &col(|r| &r.ever_experienced)));
    series.push(aggregate("discontinued", "day", day_index(days), &col(|r| &r.discontinued)));
    series.push(aggregate("mean_attitude", "day", day_index(days), &col(|r| &r.mean_attitude)));
    series.push(aggregate("mean_awareness", "day", day_index(days), &col(|r| &r.mean_awareness)));

    let mut scalars = BTreeMap::new();
    let mut put = |name: &str, v: Vec<f64>| {
        let (mean, std) = mean_std(&v);
        scalars.insert(name.to_string(), Scalar { mean, std });
    };
    if point.config.demand_enabled {
        put("mean_daily_energy_kwh", runs.iter().map(RunRecord::mean_daily_energy).collect());
    }
    put(
        "final_ever_experienced",
        runs.iter().map(|r| r.ever_experienced.last().copied().unwrap_or(0.0)).collect(),
    );
    put(
        "final_discontinued",
        runs.iter().map(|r| r.discontinued.last().copied().unwrap_or(0.0)).collect(),
    );
    PointResult {
        label: point.label.clone(),
        value: point.value,
        n_runs: runs.len(),
        series,
        scalars,
    }
}

/// Runs every (sweep point, run) pair, on at most `jobs` threads (`0`
/// means one per core), and aggregates in a fixed order.
pub fn run_experiment_with_jobs(spec: &ExperimentSpec, jobs: usize) -> Result<ExperimentResult> {
    spec.validate()?;
    let points = spec.points()?;
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.n_runs).map(move |r| (p, r)))
        .collect();
    let exec = |&(p, r): &(usize, usize)| -> Result<RunRecord> {
        let point = &points[p];
        let cfg = SimConfig {
            seed: spec.base_seed.wrapping_add(r as u64),
            ..point.config.clone()
        };
        execute_run(&cfg, point.scenario, spec.warmup_days).map_err(|e| Error::Run {
            point: point.label.clone(),
            run: r,
            source: Box::new(e),
        })
    };
    let records: Vec<RunRecord> = if jobs == 1 {
        tasks.iter().map(exec).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(exec).collect::<Result<_>>())?
    };
    let by_point: Vec<&[RunRecord]> = records.chunks(spec.n_runs).collect();

    let mut result = ExperimentResult {
        id: spec.id,
        n_runs: spec.n_runs,
        sweep_key: spec.sweep.as_ref().map(|s| s.key.clone()),
        points: points
            .iter()
            .zip(&by_point)
            .map(|(p, runs)| summarise_point(p, runs))
            .collect(),
        load_validation: None,
        reductions: Vec::new(),
        discontinuance: None,
    };

    if spec.id == ExperimentId::E1LoadValidation {
        let curves: Vec<&[f64]> = by_point[0]
            .iter()
            .filter_map(|r| r.load_curve.as_ref().map(|c| c.values.as_slice()))
            .collect();
        let values = aggregate("load_curve_kw", "time", Vec::new(), &curves).mean;
        let curve = LoadCurve::new(stats::HALF_HOUR, values);
        let shape = ProfileShape::of(&curve);
        let comparison = match &spec.reference {
            Some(r) => Some(compare_to_reference(&curve, r)?),
            None => None,
        };
        result.load_validation = Some(LoadValidation {
            bimodal: shape.is_bimodal(),
            curve,
            shape,
            comparison,
        });
    }

    if spec.id == ExperimentId::E2ExperienceEffect {
        let baseline = by_point[0];
        let base_mean = mean_std(&baseline.iter().map(RunRecord::mean_daily_energy).collect::<Vec<_>>()).0;
        for (p, runs) in points.iter().zip(&by_point).skip(1) {
            let treated_mean = mean_std(&runs.iter().map(RunRecord::mean_daily_energy).collect::<Vec<_>>()).0;
            let paired = baseline
                .iter()
                .zip(runs.iter())
                .map(|(b, t)| energy_reduction(b.mean_daily_energy(), t.mean_daily_energy()))
                .collect::<Result<Vec<_>>>()?;
            let (mean, std) = mean_std(&paired);
            result.reductions.push(Reduction {
                label: p.label.clone(),
                value: p.value,
                reduction_pct: energy_reduction(base_mean, treated_mean)?,
                per_run: Scalar { mean, std },
            });
        }
    }

    if spec.id == ExperimentId::E4Discontinuance || (spec.id == ExperimentId::Custom && spec.base.record_trajectories) {
        let runs = by_point[0].iter().filter_map(|r| match (&r.final_agents, &r.trajectories) {
            (Some(a), Some(t)) => Some((a.as_slice(), t)),
            _ => None,
        });
        result.discontinuance = Some(discontinuance_analysis(runs)?);
    }
    Ok(result)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_experiment_with_jobs(spec, 0)
}
