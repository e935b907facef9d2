//! Appliance-level household demand: always-on base load, stochastically
//! switched flexible appliances, the peak-price response, and aggregation of
//! per-minute demand into load curves.
//!
//! Flexible appliances follow a two-state on/off chain per minute while the
//! occupant is at home. The chain uses a monotone coupling: one uniform draw
//! per appliance per tick, compared against a state-dependent threshold, so
//! that two runs sharing the same behaviour stream keep `off-run <= on-run`
//! appliance-by-appliance. Forcing appliances off during a peak response can
//! therefore never raise demand relative to the unforced run.

use std::path::Path;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::agent::{ArchetypeSpec, ConsumerAgent};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::time::{MinuteWindow, MINUTES_PER_DAY};

pub const DEFAULT_CATALOG_CSV: &str = include_str!("../data/default_catalog.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplianceCategory {
    Base,
    Flexible,
}

/// One catalog row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplianceKind {
    pub name: String,
    pub rated_kw: f64,
    pub category: ApplianceCategory,
    /// Probability that a household owns the appliance.
    pub ownership: f64,
    /// Expected switch-ons per day for an occupant at home all day.
    pub starts_per_day: f64,
    pub mean_on_minutes: f64,
    /// Relative switch-on propensity per hour of the day.
    pub hourly_weights: [f64; 24],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplianceCatalog {
    pub kinds: Vec<ApplianceKind>,
}

impl ApplianceCatalog {
    pub fn default_uk() -> Self {
        Self::from_csv_str(DEFAULT_CATALOG_CSV).expect("bundled catalog parses")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }

    /// Parses the tabular catalog format: a header row, then
    /// `name,kw,category,ownership,starts_per_day,mean_on_minutes,h00..h23`.
    /// Lines starting with `#` are comments.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse {
            what: format!("appliance catalog (line {line})"),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut kinds = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != 30 {
                return Err(parse_err(line, format!("expected 30 fields, found {}", record.len())));
            }
            let num = |i: usize, what: &str| -> Result<f64> {
                record[i]
                    .parse::<f64>()
                    .map_err(|_| parse_err(line, format!("{what}: {:?} is not a number", &record[i])))
            };
            let category = match &record[2] {
                "base" => ApplianceCategory::Base,
                "flexible" => ApplianceCategory::Flexible,
                other => return Err(parse_err(line, format!("unknown category {other:?}"))),
            };
            let mut hourly_weights = [0.0; 24];
            for (h, w) in hourly_weights.iter_mut().enumerate() {
                *w = num(6 + h, "hourly weight")?;
            }
            kinds.push(ApplianceKind {
                name: record[0].to_string(),
                rated_kw: num(1, "kw")?,
                category,
                ownership: num(3, "ownership")?,
                starts_per_day: num(4, "starts_per_day")?,
                mean_on_minutes: num(5, "mean_on_minutes")?,
                hourly_weights,
            });
        }
        let catalog = ApplianceCatalog { kinds };
        let problems = catalog.violations();
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        Ok(catalog)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,kw,category,ownership,starts_per_day,mean_on_minutes");
        for h in 0..24 {
            out.push_str(&format!(",h{h:02}"));
        }
        out.push('\n');
        for k in &self.kinds {
            let cat = match k.category {
                ApplianceCategory::Base => "base",
                ApplianceCategory::Flexible => "flexible",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}",
                k.name, k.rated_kw, cat, k.ownership, k.starts_per_day, k.mean_on_minutes
            ));
            for w in k.hourly_weights {
                out.push_str(&format!(",{w}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn violations(&self) -> Vec<crate::error::Violation> {
        use crate::error::Violation;
        let mut v = Vec::new();
        if self.kinds.is_empty() {
            v.push(Violation::new("catalog", "catalog must list at least one appliance"));
        }
        for (i, k) in self.kinds.iter().enumerate() {
            let p = |f: &str| format!("catalog[{i}:{}].{f}", k.name);
            if !(k.rated_kw > 0.0) {
                v.push(Violation::new(p("kw"), "rated power must be > 0"));
            }
            if !(0.0..=1.0).contains(&k.ownership) {
                v.push(Violation::new(p("ownership"), "must lie in [0, 1]"));
            }
            if k.category == ApplianceCategory::Flexible {
                if !(k.starts_per_day >= 0.0) {
                    v.push(Violation::new(p("starts_per_day"), "must be >= 0"));
                }
                if !(k.mean_on_minutes >= 1.0) {
                    v.push(Violation::new(p("mean_on_minutes"), "must be >= 1"));
                }
                if k.hourly_weights.iter().any(|w| !(*w >= 0.0)) {
                    v.push(Violation::new(p("hourly_weights"), "weights must be >= 0"));
                }
                if k.starts_per_day > 0.0 && k.hourly_weights.iter().sum::<f64>() <= 0.0 {
                    v.push(Violation::new(p("hourly_weights"), "at least one weight must be > 0"));
                }
            }
        }
        v
    }
}

/// One appliance instance in a household.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Appliance {
    /// Index into the catalog the household was built from.
    pub kind: u16,
    pub rated_kw: f64,
    pub category: ApplianceCategory,
    pub on: bool,
}

/// Per-minute switching thresholds, precomputed per (archetype, appliance
/// kind, hour) as fractions of `2^32`.
#[derive(Debug, Clone)]
pub struct SwitchTables {
    kinds: usize,
    on: Vec<u32>,
    off: Vec<u32>,
}

#[inline]
fn milliwatts(kw: f64) -> u64 {
    (kw * 1e6).round() as u64
}

fn to_threshold(p: f64) -> u32 {
    (p.clamp(0.0, 1.0) * 4_294_967_295.0).round() as u32
}

impl SwitchTables {
    pub fn new(catalog: &ApplianceCatalog, archetypes: &[ArchetypeSpec]) -> Result<Self> {
        let kinds = catalog.kinds.len();
        let mut on = vec![0; archetypes.len() * kinds * 24];
        let mut off = vec![0; kinds];
        let mut problems = Vec::new();
        for (k, kind) in catalog.kinds.iter().enumerate() {
            if kind.category == ApplianceCategory::Base && kind.starts_per_day == 0.0 {
                continue;
            }
            let p_off = 1.0 / kind.mean_on_minutes;
            off[k] = to_threshold(p_off);
            let total: f64 = kind.hourly_weights.iter().sum();
            for (a, spec) in archetypes.iter().enumerate() {
                for h in 0..24 {
                    let p_on = if total > 0.0 {
                        kind.starts_per_day * spec.behaviour.activity_scale * kind.hourly_weights[h]
                            / total
                            / 60.0
                    } else {
                        0.0
                    };
                    if p_on + p_off > 1.0 {
                        problems.push(crate::error::Violation::new(
                            format!("catalog[{k}:{}]", kind.name),
                            format!("switch-on ({p_on:.4}) plus switch-off ({p_off:.4}) per-minute probability exceeds 1 at hour {h} for {}", spec.id.name()),
                        ));
                    }
                    on[(a * kinds + k) * 24 + h] = to_threshold(p_on);
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        Ok(Self { kinds, on, off })
    }

    #[inline]
    fn on_threshold(&self, archetype: usize, kind: usize, hour: usize) -> u32 {
        self.on[(archetype * self.kinds + kind) * 24 + hour]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Household {
    pub agent_id: u32,
    /// Index of the agent's archetype in the simulation config.
    pub archetype_index: usize,
    pub base_need_scale: f64,
    pub seasonal_factor: f64,
    pub appliances: Vec<Appliance>,
    /// Always-on base load, kW.
    pub(crate) base_kw: f64,
    /// First duty-cycled base appliance; those before it are always on.
    pub(crate) cycle_start: usize,
    pub(crate) flex_start: usize,
    /// Rated power of the cycling appliances currently on, in milliwatts;
    /// integer so the running totals never drift.
    pub(crate) cycle_on_mw: u64,
    pub(crate) flex_on_mw: u64,
    /// Peak window index the occupants are currently responding in.
    pub(crate) responding: Option<usize>,
    /// Peak window whose response has already been decided today.
    pub(crate) decided: Option<usize>,
}

/// Builds a household: every base appliance, plus each flexible appliance
/// with probability `ownership * ownership_scale`. Draws come from the
/// household stream in catalog order.
pub fn build_household(
    agent: &ConsumerAgent,
    archetype_index: usize,
    spec: &ArchetypeSpec,
    catalog: &ApplianceCatalog,
    seasonal_factor: f64,
    rng: &mut SimRng,
) -> Result<Household> {
    if catalog.kinds.is_empty() {
        return Err(Error::Domain("appliance catalog is empty".into()));
    }
    let mut appliances = Vec::new();
    let scale = spec.behaviour.base_need_scale;
    for (k, kind) in catalog.kinds.iter().enumerate() {
        let u: f64 = rng.random();
        let owned = match kind.category {
            ApplianceCategory::Base => true,
            ApplianceCategory::Flexible => {
                u < (kind.ownership * spec.behaviour.ownership_scale).min(1.0)
            }
        };
        if owned {
            let base = kind.category == ApplianceCategory::Base;
            appliances.push(Appliance {
                kind: k as u16,
                rated_kw: if base { kind.rated_kw * scale } else { kind.rated_kw },
                category: kind.category,
                on: base && kind.starts_per_day == 0.0,
            });
        }
    }
    // Always-on base first, then duty-cycled base, then flexible, so the
    // per-tick loop only walks the tail.
    let rank = |a: &Appliance| match a.category {
        ApplianceCategory::Base if catalog.kinds[a.kind as usize].starts_per_day == 0.0 => 0,
        ApplianceCategory::Base => 1,
        ApplianceCategory::Flexible => 2,
    };
    appliances.sort_by_key(|a| (rank(a), a.kind));
    let cycle_start = appliances.iter().position(|a| rank(a) > 0).unwrap_or(appliances.len());
    let flex_start = appliances.iter().position(|a| rank(a) > 1).unwrap_or(appliances.len());
    let base_kw = appliances[..cycle_start].iter().map(|a| a.rated_kw).sum::<f64>();
    Ok(Household {
        agent_id: agent.id,
        archetype_index,
        base_need_scale: scale,
        seasonal_factor,
        appliances,
        base_kw,
        cycle_start,
        flex_start,
        cycle_on_mw: 0,
        flex_on_mw: 0,
        responding: None,
        decided: None,
    })
}

impl Household {
    /// `seasonal_factor * sum of rated power over appliances that are on`.
    pub fn instantaneous_demand(&self) -> f64 {
        let on: f64 = self.appliances.iter().filter(|a| a.on).map(|a| a.rated_kw).sum();
        self.seasonal_factor * on
    }

    pub fn flexible(&self) -> &[Appliance] {
        &self.appliances[self.flex_start..]
    }

    fn flexible_mut(&mut self) -> &mut [Appliance] {
        &mut self.appliances[self.flex_start..]
    }

    pub fn flexible_on_count(&self) -> usize {
        self.flexible().iter().filter(|a| a.on).count()
    }

    pub fn switch_off_flexible(&mut self) {
        for a in self.flexible_mut() {
            a.on = false;
        }
        self.flex_on_mw = 0;
    }

    /// Nobody is home: every cycling appliance, base or flexible, goes off.
    pub fn switch_off_cycling(&mut self) {
        for a in &mut self.appliances[self.cycle_start..] {
            a.on = false;
        }
        self.cycle_on_mw = 0;
        self.flex_on_mw = 0;
    }

    /// Same value as [`Household::instantaneous_demand`], from the running
    /// on-power total kept by the switching code.
    #[inline]
    pub fn tracked_demand(&self) -> f64 {
        self.seasonal_factor * (self.base_kw + (self.cycle_on_mw + self.flex_on_mw) as f64 * 1e-6)
    }

    pub fn is_responding(&self) -> bool {
        self.responding.is_some()
    }

    /// Advances every cycling appliance by one minute. Exactly one draw is
    /// taken per cycling appliance whatever its state; a suppressed flexible
    /// appliance stays off.
    #[inline]
    pub fn step_appliances(&mut self, tables: &SwitchTables, hour: usize, rng: &mut SimRng) {
        let archetype = self.archetype_index;
        let suppressed = self.responding.is_some();
        let flex_start = self.flex_start;
        let mut on_mw = [self.cycle_on_mw, self.flex_on_mw];
        // Two 32-bit uniforms per generator output.
        let mut spare: Option<u32> = None;
        for (i, a) in self.appliances.iter_mut().enumerate().skip(self.cycle_start) {
            let u = match spare.take() {
                Some(u) => u,
                None => {
                    let w = rng.next_u64();
                    spare = Some((w >> 32) as u32);
                    w as u32
                }
            };
            let flex = i >= flex_start;
            let next_on = if a.on {
                u >= tables.off[a.kind as usize]
            } else {
                u > u32::MAX - tables.on_threshold(archetype, a.kind as usize, hour)
            } && !(flex && suppressed);
            if next_on != a.on {
                a.on = next_on;
                let mw = milliwatts(a.rated_kw);
                let slot = &mut on_mw[flex as usize];
                if next_on {
                    *slot += mw;
                } else {
                    *slot -= mw;
                }
            }
        }
        self.cycle_on_mw = on_mw[0];
        self.flex_on_mw = on_mw[1];
    }
}

/// Time-of-day windows during which the meter shows a high-price signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSignal {
    pub peak_windows: Vec<MinuteWindow>,
}

impl Default for PriceSignal {
    fn default() -> Self {
        Self {
            peak_windows: vec![MinuteWindow::hours(7, 9), MinuteWindow::hours(16, 20)],
        }
    }
}

impl PriceSignal {
    pub fn window_at(&self, minute: u32) -> Option<usize> {
        self.peak_windows
            .iter()
            .position(|w| w.contains_half_open(minute))
    }

    pub fn violations(&self, path: &str) -> Vec<crate::error::Violation> {
        use crate::error::Violation;
        let mut v = Vec::new();
        for (i, w) in self.peak_windows.iter().enumerate() {
            if w.start.0 >= w.end.0 || w.end.0 > MINUTES_PER_DAY {
                v.push(Violation::new(
                    format!("{path}[{i}]"),
                    format!("window {w} must satisfy start < end <= 24:00"),
                ));
            }
        }
        let mut sorted: Vec<_> = self.peak_windows.clone();
        sorted.sort_by_key(|w| w.start);
        for pair in sorted.windows(2) {
            if pair[1].start.0 < pair[0].end.0 {
                v.push(Violation::new(
                    path.to_string(),
                    format!("windows {} and {} overlap", pair[0], pair[1]),
                ));
            }
        }
        v
    }
}

/// How likely an at-home agent is to shed flexible load when a peak window
/// starts (or when it comes home during one).
pub fn peak_response_probability(agent: &ConsumerAgent, intervention_active: bool, experienced_always_respond: bool) -> f64 {
    if !intervention_active || !agent.is_influenced() || agent.discontinued {
        return 0.0;
    }
    if experienced_always_respond && agent.is_experienced() {
        return 1.0;
    }
    agent.current_p()
}

/// One minute of appliance behaviour for an at-home agent.
///
/// On the first at-home minute of each peak window one draw is taken from the
/// agent's response stream; with probability `respond_p` every flexible
/// appliance is switched off and kept off for the rest of the window.
/// Outside a response the archetype's default switching applies.
#[allow(clippy::too_many_arguments)]
pub fn switch_behaviour(
    agent: &ConsumerAgent,
    household: &mut Household,
    minute: u32,
    signal: &PriceSignal,
    tables: &SwitchTables,
    respond_p: f64,
    behaviour_rng: &mut SimRng,
    response_rng: &mut SimRng,
) {
    if agent.occupancy != crate::agent::Occupancy::AtHome {
        return;
    }
    household.step_at_home(
        signal.window_at(minute),
        (minute / 60) as usize,
        tables,
        || respond_p,
        behaviour_rng,
        response_rng,
    );
}

impl Household {
    /// Engine fast path of [`switch_behaviour`]: the peak window is looked up
    /// once per tick for everyone and the response probability is only
    /// evaluated when a decision is due.
    #[inline]
    pub(crate) fn step_at_home(
        &mut self,
        window: Option<usize>,
        hour: usize,
        tables: &SwitchTables,
        respond_p: impl FnOnce() -> f64,
        behaviour_rng: &mut SimRng,
        response_rng: &mut SimRng,
    ) {
        match window {
            Some(w) => {
                if self.decided != Some(w) {
                    self.decided = Some(w);
                    let u: f64 = response_rng.random();
                    if u < respond_p() {
                        self.responding = Some(w);
                        self.switch_off_flexible();
                    }
                }
            }
            None => {
                self.responding = None;
                self.decided = None;
            }
        }
        self.step_appliances(tables, hour, behaviour_rng);
    }
}

/// A demand series bucketed at a fixed resolution (mean kW per bucket).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadCurve {
    pub resolution_minutes: u32,
    pub values: Vec<f64>,
}

impl LoadCurve {
    pub fn new(resolution_minutes: u32, values: Vec<f64>) -> Self {
        Self {
            resolution_minutes,
            values,
        }
    }

    pub fn horizon_minutes(&self) -> u64 {
        self.values.len() as u64 * self.resolution_minutes as u64
    }

    pub fn energy_kwh(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.resolution_minutes as f64 / 60.0
    }

    pub fn bucket_of_minute(&self, minute: u32) -> usize {
        (minute / self.resolution_minutes) as usize
    }

    /// Loads a reference curve: one `bucket,kw` row per bucket after a header
    /// line, `#` comments allowed. The resolution is inferred from the bucket
    /// count over one day.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut values = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse {
                what: "load curve".into(),
                message: e.to_string(),
            })?;
            let field = record.get(record.len().saturating_sub(1)).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                what: "load curve".into(),
                message: format!("{field:?} is not a number"),
            })?;
            if v < 0.0 {
                return Err(Error::Parse {
                    what: "load curve".into(),
                    message: format!("negative demand {v}"),
                });
            }
            values.push(v);
        }
        if values.is_empty() || MINUTES_PER_DAY as usize % values.len() != 0 {
            return Err(Error::Shape(format!(
                "a daily reference curve needs a bucket count dividing 1440, got {}",
                values.len()
            )));
        }
        Ok(Self::new(MINUTES_PER_DAY / values.len() as u32, values))
    }

    pub fn to_csv(&self, value_header: &str) -> String {
        let mut out = format!("time,{value_header}\n");
        for (i, v) in self.values.iter().enumerate() {
            let m = i as u64 * self.resolution_minutes as u64;
            out.push_str(&format!("{:02}:{:02},{v}\n", (m / 60) % 24, m % 60));
        }
        out
    }
}

/// Buckets a per-minute kW series into means over `resolution` minutes.
pub fn aggregate_load(per_minute_kw: &[f64], resolution: u32) -> Result<LoadCurve> {
    if resolution == 0 || per_minute_kw.len() % resolution as usize != 0 {
        return Err(Error::Shape(format!(
            "series of {} minutes is not divisible into {resolution}-minute buckets",
            per_minute_kw.len()
        )));
    }
    let values = per_minute_kw
        .chunks_exact(resolution as usize)
        .map(|c| c.iter().sum::<f64>() / resolution as f64)
        .collect();
    Ok(LoadCurve::new(resolution, values))
}

pub fn per_agent_average(curve: &LoadCurve, n_agents: usize) -> Result<LoadCurve> {
    if n_agents == 0 {
        return Err(Error::Domain("cannot average over zero agents".into()));
    }
    Ok(LoadCurve::new(
        curve.resolution_minutes,
        curve.values.iter().map(|v| v / n_agents as f64).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{council_archetypes, Influence};
    use crate::rng::{stream, Stream};

    fn agent_for(spec: &ArchetypeSpec) -> ConsumerAgent {
        ConsumerAgent::sample(0, spec, &mut stream(1, Stream::Population, 0))
    }

    #[test]
    fn bundled_catalog_is_valid() {
        let c = ApplianceCatalog::default_uk();
        assert!(c.kinds.iter().any(|k| k.category == ApplianceCategory::Base));
        assert!(c.kinds.iter().any(|k| k.category == ApplianceCategory::Flexible));
        let again = ApplianceCatalog::from_csv_str(&c.to_csv()).unwrap();
        assert_eq!(again, c);
        SwitchTables::new(&c, &council_archetypes(true)).unwrap();
    }

    #[test]
    fn catalog_errors() {
        let header = "name,kw,category,ownership,starts_per_day,mean_on_minutes,h00,h01,h02,h03,h04,h05,h06,h07,h08,h09,h10,h11,h12,h13,h14,h15,h16,h17,h18,h19,h20,h21,h22,h23\n";
        let zeros = ",0".repeat(24);
        assert!(matches!(
            ApplianceCatalog::from_csv_str(header),
            Err(Error::InvalidConfig(_))
        ));
        let bad_kw = format!("{header}fridge,0,base,1,0,1{zeros}\n");
        assert!(matches!(
            ApplianceCatalog::from_csv_str(&bad_kw),
            Err(Error::InvalidConfig(_))
        ));
        let bad_cat = format!("{header}fridge,0.1,sometimes,1,0,1{zeros}\n");
        assert!(matches!(
            ApplianceCatalog::from_csv_str(&bad_cat),
            Err(Error::Parse { .. })
        ));
        let short = format!("{header}fridge,0.1,base\n");
        assert!(ApplianceCatalog::from_csv_str(&short).is_err());
    }

    #[test]
    fn demand_arithmetic() {
        let specs = council_archetypes(true);
        let catalog = ApplianceCatalog::from_csv_str(&format!(
            "name,kw,category,ownership,starts_per_day,mean_on_minutes{}\na,0.3,flexible,1,1,10{}\nb,0.5,flexible,1,1,10{}\n",
            (0..24).map(|h| format!(",h{h:02}")).collect::<String>(),
            ",1".repeat(24),
            ",1".repeat(24)
        ))
        .unwrap();
        let agent = agent_for(&specs[0]);
        let mut h = build_household(&agent, 0, &specs[2], &catalog, 1.0, &mut stream(1, Stream::Households, 0)).unwrap();
        assert_eq!(h.instantaneous_demand(), 0.0);
        for a in h.appliances.iter_mut() {
            a.on = true;
        }
        assert!((h.instantaneous_demand() - 0.8).abs() < 1e-12);
        h.seasonal_factor = 1.2;
        h.appliances[1].on = false;
        h.appliances[0].rated_kw = 1.0;
        assert!((h.instantaneous_demand() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn single_base_catalog_gives_identical_households() {
        let specs = council_archetypes(true);
        let catalog = ApplianceCatalog::from_csv_str(&format!(
            "name,kw,category,ownership,starts_per_day,mean_on_minutes{}\nfridge,0.09,base,1,0,1{}\n",
            (0..24).map(|h| format!(",h{h:02}")).collect::<String>(),
            ",0".repeat(24)
        ))
        .unwrap();
        let mut first: Option<Vec<Appliance>> = None;
        for (i, spec) in specs.iter().enumerate() {
            let agent = agent_for(spec);
            let h = build_household(&agent, i, spec, &catalog, 1.0, &mut stream(5, Stream::Households, i as u64)).unwrap();
            assert!((h.instantaneous_demand() - 0.09).abs() < 1e-12);
            match &first {
                None => first = Some(h.appliances.clone()),
                Some(f) => assert_eq!(f, &h.appliances),
            }
        }
    }

    #[test]
    fn empty_catalog_is_rejected() {
        let specs = council_archetypes(true);
        let empty = ApplianceCatalog { kinds: vec![] };
        let agent = agent_for(&specs[0]);
        assert!(build_household(&agent, 0, &specs[0], &empty, 1.0, &mut stream(0, Stream::Households, 0)).is_err());
    }

    #[test]
    fn households_are_deterministic_under_seed() {
        let specs = council_archetypes(true);
        let c = ApplianceCatalog::default_uk();
        let agent = agent_for(&specs[3]);
        let a = build_household(&agent, 3, &specs[3], &c, 1.15, &mut stream(8, Stream::Households, 4)).unwrap();
        let b = build_household(&agent, 3, &specs[3], &c, 1.15, &mut stream(8, Stream::Households, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn certain_response_clears_flexible_load_for_the_window() {
        let specs = council_archetypes(true);
        let c = ApplianceCatalog::default_uk();
        let tables = SwitchTables::new(&c, &specs).unwrap();
        let mut agent = agent_for(&specs[2]);
        agent.influence = Influence::Influenced;
        let mut h = build_household(&agent, 2, &specs[2], &c, 1.0, &mut stream(2, Stream::Households, 0)).unwrap();
        for a in h.appliances.iter_mut() {
            a.on = true;
        }
        let signal = PriceSignal::default();
        let mut b = stream(2, Stream::Behaviour, 0);
        let mut r = stream(2, Stream::Response, 0);
        for minute in 420..540 {
            switch_behaviour(&agent, &mut h, minute, &signal, &tables, 1.0, &mut b, &mut r);
            assert_eq!(h.flexible_on_count(), 0, "minute {minute}");
        }
        switch_behaviour(&agent, &mut h, 540, &signal, &tables, 1.0, &mut b, &mut r);
        assert!(!h.is_responding());
    }

    #[test]
    fn cycling_base_load_is_not_shed() {
        let specs = council_archetypes(true);
        let c = ApplianceCatalog::default_uk();
        let tables = SwitchTables::new(&c, &specs).unwrap();
        let mut agent = agent_for(&specs[2]);
        agent.influence = Influence::Influenced;
        let mut h = build_household(&agent, 2, &specs[2], &c, 1.0, &mut stream(3, Stream::Households, 0)).unwrap();
        let cycling = h.cycle_start..h.flex_start;
        assert!(!cycling.is_empty());
        let signal = PriceSignal::default();
        let mut b = stream(3, Stream::Behaviour, 0);
        let mut r = stream(3, Stream::Response, 0);
        let mut cycling_on = 0;
        for minute in 960..1200 {
            switch_behaviour(&agent, &mut h, minute, &signal, &tables, 1.0, &mut b, &mut r);
            assert_eq!(h.flexible_on_count(), 0);
            cycling_on += h.appliances[cycling.clone()].iter().filter(|a| a.on).count();
            assert!((h.tracked_demand() - h.instantaneous_demand()).abs() < 1e-9);
        }
        assert!(cycling_on > 0);
    }

    #[test]
    fn tracked_demand_follows_switching() {
        let specs = council_archetypes(true);
        let c = ApplianceCatalog::default_uk();
        let tables = SwitchTables::new(&c, &specs).unwrap();
        let agent = agent_for(&specs[3]);
        let mut h = build_household(&agent, 3, &specs[3], &c, 1.15, &mut stream(4, Stream::Households, 0)).unwrap();
        let mut b = stream(4, Stream::Behaviour, 0);
        for minute in 0..1440u32 {
            h.step_appliances(&tables, (minute / 60) as usize, &mut b);
            assert!((h.tracked_demand() - h.instantaneous_demand()).abs() < 1e-9);
        }
        h.switch_off_cycling();
        assert!((h.tracked_demand() - h.instantaneous_demand()).abs() < 1e-9);
    }

    #[test]
    fn out_agent_leaves_household_untouched() {
        let specs = council_archetypes(true);
        let c = ApplianceCatalog::default_uk();
        let tables = SwitchTables::new(&c, &specs).unwrap();
        let mut agent = agent_for(&specs[0]);
        agent.occupancy = crate::agent::Occupancy::Out;
        let mut h = build_household(&agent, 0, &specs[0], &c, 1.0, &mut stream(2, Stream::Households, 0)).unwrap();
        let before = h.clone();
        let mut b = stream(2, Stream::Behaviour, 0);
        let mut r = stream(2, Stream::Response, 0);
        for minute in 0..1440 {
            switch_behaviour(&agent, &mut h, minute, &PriceSignal::default(), &tables, 1.0, &mut b, &mut r);
        }
        assert_eq!(h, before);
    }

    #[test]
    fn zero_response_probability_matches_uninfluenced_behaviour() {
        let specs = council_archetypes(true);
        let c = ApplianceCatalog::default_uk();
        let tables = SwitchTables::new(&c, &specs).unwrap();
        let agent = agent_for(&specs[2]);
        let mut influenced = agent.clone();
        influenced.influence = Influence::Influenced;
        let mk = || build_household(&agent, 2, &specs[2], &c, 1.0, &mut stream(4, Stream::Households, 0)).unwrap();
        let (mut h1, mut h2) = (mk(), mk());
        let (mut b1, mut b2) = (stream(4, Stream::Behaviour, 0), stream(4, Stream::Behaviour, 0));
        let (mut r1, mut r2) = (stream(4, Stream::Response, 0), stream(4, Stream::Response, 0));
        let p = peak_response_probability(&influenced, true, true);
        assert_eq!(p, 0.0);
        for minute in 0..1440 {
            switch_behaviour(&agent, &mut h1, minute, &PriceSignal::default(), &tables, 0.0, &mut b1, &mut r1);
            switch_behaviour(&influenced, &mut h2, minute, &PriceSignal::default(), &tables, p, &mut b2, &mut r2);
            assert_eq!(h1.appliances, h2.appliances);
        }
    }

    #[test]
    fn aggregation_cases() {
        let flat = aggregate_load(&vec![1.0; 1440], 30).unwrap();
        assert_eq!(flat.values.len(), 48);
        assert!(flat.values.iter().all(|&v| v == 1.0));
        let mut step = vec![0.0; 30];
        step.extend(vec![2.0; 30]);
        assert_eq!(aggregate_load(&step, 30).unwrap().values, vec![0.0, 2.0]);
        assert!(matches!(aggregate_load(&[1.0; 31], 30), Err(Error::Shape(_))));
        assert!(aggregate_load(&[1.0; 30], 0).is_err());
    }

    #[test]
    fn per_agent_cases() {
        let c = LoadCurve::new(30, vec![48.0, 96.0]);
        assert_eq!(per_agent_average(&c, 48).unwrap().values, vec![1.0, 2.0]);
        assert_eq!(per_agent_average(&c, 1).unwrap(), c);
        assert!(per_agent_average(&c, 0).is_err());
    }

    #[test]
    fn price_signal_validation() {
        assert!(PriceSignal::default().violations("p").is_empty());
        let overlapping = PriceSignal {
            peak_windows: vec![MinuteWindow::hours(7, 10), MinuteWindow::hours(9, 11)],
        };
        assert_eq!(overlapping.violations("p").len(), 1);
        let inverted = PriceSignal {
            peak_windows: vec![MinuteWindow::hours(10, 9)],
        };
        assert_eq!(inverted.violations("p").len(), 1);
        assert_eq!(PriceSignal::default().window_at(419), None);
        assert_eq!(PriceSignal::default().window_at(420), Some(0));
        assert_eq!(PriceSignal::default().window_at(1199), Some(1));
        assert_eq!(PriceSignal::default().window_at(1200), None);
    }

    #[test]
    fn reference_profile_parses() {
        let text = "time,kw\n00:00,1\n12:00,2\n";
        let c = LoadCurve::from_csv_str(text).unwrap();
        assert_eq!(c.resolution_minutes, 720);
        assert!(LoadCurve::from_csv_str("time,kw\n00:00,1\n01:00,1\n02:00,1\n03:00,1\n04:00,1\n05:00,1\n06:00,1\n").is_err());
        assert!(LoadCurve::from_csv_str("time,kw\n00:00,-1\n").is_err());
    }
}
