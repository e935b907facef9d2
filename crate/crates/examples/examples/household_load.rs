//! Half-hourly demand per household over one day.

use learnsim_core::experiments::DailyCurveAccumulator;
use learnsim_core::{engine, SimConfig, SimState};

fn main() {
    let config = SimConfig {
        n_agents: 200,
        horizon_days: 2,
        ..SimConfig::default()
    };
    let mut state = SimState::new(&config).unwrap();
    // The first day starts with every cycling appliance off.
    let mut acc = DailyCurveAccumulator::new(config.n_agents, 1);
    engine::run_with(&mut state, |f| acc.push(f));
    let curve = acc.curve().unwrap();

    let max = curve.values.iter().cloned().fold(0.0, f64::max);
    for (i, kw) in curve.values.iter().enumerate() {
        let m = i as u32 * curve.resolution_minutes;
        let bar = "#".repeat((kw / max * 50.0).round() as usize);
        println!("{:02}:{:02} {kw:6.3} kW {bar}", m / 60, m % 60);
    }
    println!("daily energy {:.2} kWh per household", curve.energy_kwh());
}
