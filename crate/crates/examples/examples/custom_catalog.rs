//! Running with an edited appliance catalog.

use learnsim_core::demand::{ApplianceCatalog, DEFAULT_CATALOG_CSV};
use learnsim_core::experiments::DailyCurveAccumulator;
use learnsim_core::{engine, SimConfig, SimState};

fn daily_energy(config: &SimConfig) -> f64 {
    let mut state = SimState::new(config).unwrap();
    let mut acc = DailyCurveAccumulator::new(config.n_agents, 1);
    engine::run_with(&mut state, |f| acc.push(f));
    acc.curve().unwrap().energy_kwh()
}

fn main() {
    let mut catalog = ApplianceCatalog::from_csv_str(DEFAULT_CATALOG_CSV).unwrap();
    // Every household owns an electric heater.
    for kind in catalog.kinds.iter_mut().filter(|k| k.name == "electric_heater") {
        kind.ownership = 1.0;
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("catalog.csv");
    std::fs::write(&path, catalog.to_csv()).unwrap();

    let base = SimConfig {
        n_agents: 200,
        horizon_days: 2,
        ..SimConfig::default()
    };
    let edited = SimConfig {
        catalog: Some(path),
        ..base.clone()
    };
    println!("default catalog {:.2} kWh/day", daily_energy(&base));
    println!("edited catalog  {:.2} kWh/day", daily_energy(&edited));
}
