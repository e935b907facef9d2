//! Load-curve statistics and the per-experiment reductions.

use serde::{Deserialize, Serialize};

use crate::agent::ConsumerAgent;
use crate::demand::LoadCurve;
use crate::engine::{MetricsFrame, Trajectories};
use crate::error::{Error, Result};
use crate::time::MINUTES_PER_DAY;

pub const HALF_HOUR: u32 = 30;
pub const BUCKETS_PER_DAY: usize = (MINUTES_PER_DAY / HALF_HOUR) as usize;

/// Accumulates community demand into a per-agent mean daily curve.
#[derive(Debug, Clone)]
pub struct DailyCurveAccumulator {
    n_agents: usize,
    skip_days: u64,
    sums: Vec<f64>,
    minutes: u64,
}

impl DailyCurveAccumulator {
    pub fn new(n_agents: usize, skip_days: u64) -> Self {
        Self {
            n_agents,
            skip_days,
            sums: vec![0.0; BUCKETS_PER_DAY],
            minutes: 0,
        }
    }

    #[inline]
    pub fn push(&mut self, f: &MetricsFrame) {
        if crate::time::day_of(f.tick) < self.skip_days {
            return;
        }
        let b = (crate::time::minute_of_day(f.tick) / HALF_HOUR) as usize;
        self.sums[b] += f.demand_kw;
        self.minutes += 1;
    }

    /// Complete days seen so far.
    pub fn days(&self) -> u64 {
        self.minutes / MINUTES_PER_DAY as u64
    }

    pub fn curve(&self) -> Result<LoadCurve> {
        let days = self.days();
        if days == 0 {
            return Err(Error::Shape("no complete day of demand to average".into()));
        }
        if self.n_agents == 0 {
            return Err(Error::Domain("cannot average over zero agents".into()));
        }
        let scale = 1.0 / (days as f64 * HALF_HOUR as f64 * self.n_agents as f64);
        Ok(LoadCurve::new(
            HALF_HOUR,
            self.sums.iter().map(|s| s * scale).collect(),
        ))
    }
}

/// Per-agent mean daily half-hourly curve over every day of every run,
/// ignoring the first `skip_days` of each run.
pub fn mean_daily_load_curve(runs: &[&[MetricsFrame]], n_agents: usize, skip_days: u64) -> Result<LoadCurve> {
    if runs.is_empty() {
        return Err(Error::Shape("no runs to average".into()));
    }
    let mut acc = DailyCurveAccumulator::new(n_agents, skip_days);
    for run in runs {
        if run.len() < MINUTES_PER_DAY as usize {
            return Err(Error::Shape(format!("run of {} minutes is shorter than one day", run.len())));
        }
        for f in *run {
            acc.push(f);
        }
    }
    acc.curve()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveComparison {
    pub rmse: f64,
    /// Mean absolute percentage error over buckets with non-zero reference.
    pub mape: f64,
    /// Signed bucket offsets (simulated minus reference) of the peak before
    /// and after midday.
    pub morning_peak_offset: i64,
    pub evening_peak_offset: i64,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn compare_to_reference(sim: &LoadCurve, reference: &LoadCurve) -> Result<CurveComparison> {
    if sim.resolution_minutes != reference.resolution_minutes || sim.values.len() != reference.values.len() {
        return Err(Error::Shape(format!(
            "simulated curve has {} x {} min buckets, reference {} x {} min",
            sim.values.len(),
            sim.resolution_minutes,
            reference.values.len(),
            reference.resolution_minutes
        )));
    }
    let n = sim.values.len();
    if n == 0 {
        return Err(Error::Shape("empty curves".into()));
    }
    let mut sq = 0.0;
    let mut ape = 0.0;
    let mut counted = 0usize;
    for (s, r) in sim.values.iter().zip(&reference.values) {
        sq += (s - r) * (s - r);
        if *r != 0.0 {
            ape += ((s - r) / r).abs();
            counted += 1;
        }
    }
    let mid = n / 2;
    let (ms, mr) = (argmax(&sim.values[..mid]), argmax(&reference.values[..mid]));
    let (es, er) = (argmax(&sim.values[mid..]), argmax(&reference.values[mid..]));
    Ok(CurveComparison {
        rmse: (sq / n as f64).sqrt(),
        mape: if counted == 0 { 0.0 } else { 100.0 * ape / counted as f64 },
        morning_peak_offset: ms as i64 - mr as i64,
        evening_peak_offset: es as i64 - er as i64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileShape {
    pub morning_peak_kw: f64,
    pub evening_peak_kw: f64,
    /// Minimum between midnight and 06:00.
    pub overnight_trough_kw: f64,
}

impl ProfileShape {
    pub fn of(curve: &LoadCurve) -> Self {
        let n = curve.values.len();
        let mid = n / 2;
        let night_end = (n / 4).max(1);
        let max = |s: &[f64]| s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self {
            morning_peak_kw: max(&curve.values[..mid]),
            evening_peak_kw: max(&curve.values[mid..]),
            overnight_trough_kw: curve.values[..night_end].iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Evening peak above the morning peak, which is above the night trough.
    pub fn is_bimodal(&self) -> bool {
        self.evening_peak_kw > self.morning_peak_kw && self.morning_peak_kw > self.overnight_trough_kw
    }
}

/// `(E_base - E_treated) / E_base * 100`.
pub fn energy_reduction(baseline_kwh: f64, treated_kwh: f64) -> Result<f64> {
    if baseline_kwh == 0.0 {
        return Err(Error::Domain("baseline energy is zero".into()));
    }
    Ok((baseline_kwh - treated_kwh) / baseline_kwh * 100.0)
}

/// Least-squares slope of `y` against its index.
pub fn slope(y: &[f64]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let mx = (n - 1) as f64 / 2.0;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - mx;
        num += dx * (v - my);
        den += dx * dx;
    }
    num / den
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupTrajectory {
    pub agents: usize,
    pub mean_attitude: Vec<f64>,
    pub mean_awareness: Vec<f64>,
}

impl GroupTrajectory {
    pub fn attitude_slope(&self) -> f64 {
        slope(&self.mean_attitude)
    }

    pub fn awareness_slope(&self) -> f64 {
        slope(&self.mean_awareness)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuanceAnalysis {
    /// Discontinuers over every agent that was ever experienced, pooled
    /// across runs.
    pub discontinuer_fraction: f64,
    pub per_run_fraction_mean: f64,
    pub per_run_fraction_std: f64,
    pub experienced_agents: usize,
    pub continuers: GroupTrajectory,
    pub discontinuers: GroupTrajectory,
}

/// Splits every run's ever-experienced agents into continuers and
/// discontinuers and averages each group's daily A and ESA, pooling agents
/// across runs.
pub fn discontinuance_analysis<'a>(
    runs: impl IntoIterator<Item = (&'a [ConsumerAgent], &'a Trajectories)>,
) -> Result<DiscontinuanceAnalysis> {
    let mut days = None;
    let mut sums = [(0usize, Vec::<f64>::new(), Vec::<f64>::new()), (0, Vec::new(), Vec::new())];
    let mut fractions = Vec::new();
    for (agents, tr) in runs {
        let d = tr.days();
        if *days.get_or_insert(d) != d {
            return Err(Error::Shape("runs have different trajectory lengths".into()));
        }
        if tr.n_agents != agents.len() {
            return Err(Error::Shape("trajectory width does not match the population".into()));
        }
        for s in sums.iter_mut() {
            if s.1.is_empty() {
                s.1 = vec![0.0; d];
                s.2 = vec![0.0; d];
            }
        }
        let (mut exp, mut disc) = (0usize, 0usize);
        for (i, a) in agents.iter().enumerate() {
            if !a.is_experienced() {
                continue;
            }
            exp += 1;
            let g = usize::from(a.discontinued);
            disc += g;
            let s = &mut sums[g];
            s.0 += 1;
            for day in 0..d {
                s.1[day] += tr.attitude_at(day, i) as f64;
                s.2[day] += tr.awareness_at(day, i) as f64;
            }
        }
        if exp > 0 {
            fractions.push(disc as f64 / exp as f64);
        }
    }
    let experienced = sums[0].0 + sums[1].0;
    if experienced == 0 {
        return Err(Error::Domain("no agent was ever experienced".into()));
    }
    let group = |s: &(usize, Vec<f64>, Vec<f64>)| {
        if s.0 == 0 {
            return GroupTrajectory::default();
        }
        let k = s.0 as f64;
        GroupTrajectory {
            agents: s.0,
            mean_attitude: s.1.iter().map(|x| x / k).collect(),
            mean_awareness: s.2.iter().map(|x| x / k).collect(),
        }
    };
    let (m, sd) = mean_std(&fractions);
    Ok(DiscontinuanceAnalysis {
        discontinuer_fraction: sums[1].0 as f64 / experienced as f64,
        per_run_fraction_mean: m,
        per_run_fraction_std: sd,
        experienced_agents: experienced,
        continuers: group(&sums[0]),
        discontinuers: group(&sums[1]),
    })
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(kw: impl Fn(u64) -> f64, minutes: u64) -> Vec<MetricsFrame> {
        (0..minutes)
            .map(|t| MetricsFrame {
                tick: t,
                demand_kw: kw(t),
                uninfluenced: 1,
                influenced_inexperienced: 0,
                experienced: 0,
                discontinued: 0,
                mean_attitude: 0.0,
                mean_awareness: 0.0,
            })
            .collect()
    }

    #[test]
    fn single_day_curve_is_per_agent() {
        let f = frames(|t| (t / 30) as f64 * 10.0, 1440);
        let c = mean_daily_load_curve(&[&f], 10, 0).unwrap();
        assert_eq!(c.values.len(), 48);
        for (i, v) in c.values.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_load_is_flat() {
        let f = frames(|_| 5.0, 2880);
        let c = mean_daily_load_curve(&[&f, &f], 5, 0).unwrap();
        assert!(c.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn empty_and_short_inputs() {
        assert!(mean_daily_load_curve(&[], 1, 0).is_err());
        let f = frames(|_| 1.0, 100);
        assert!(mean_daily_load_curve(&[&f], 1, 0).is_err());
    }

    #[test]
    fn comparison_identities() {
        let r = LoadCurve::new(30, (0..48).map(|i| 1.0 + (i as f64 / 7.0).sin().abs()).collect());
        let c = compare_to_reference(&r, &r).unwrap();
        assert_eq!(c.rmse, 0.0);
        assert_eq!(c.mape, 0.0);
        assert_eq!((c.morning_peak_offset, c.evening_peak_offset), (0, 0));
        let shifted = LoadCurve::new(30, r.values.iter().map(|v| v + 0.1).collect());
        let c = compare_to_reference(&r, &shifted).unwrap();
        assert!((c.rmse - 0.1).abs() < 1e-12);
        let wrong = LoadCurve::new(60, vec![1.0; 24]);
        assert!(matches!(compare_to_reference(&r, &wrong), Err(Error::Shape(_))));
    }

    #[test]
    fn reduction_arithmetic() {
        assert_eq!(energy_reduction(10.0, 10.0).unwrap(), 0.0);
        assert!((energy_reduction(10.0, 8.0).unwrap() - 20.0).abs() < 1e-12);
        assert!(energy_reduction(0.0, 1.0).is_err());
    }

    #[test]
    fn slope_of_a_line() {
        assert!((slope(&[1.0, 3.0, 5.0, 7.0]) - 2.0).abs() < 1e-12);
        assert_eq!(slope(&[4.0]), 0.0);
    }
}
