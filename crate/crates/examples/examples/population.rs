//! Samples a population from the default archetypes.

use std::collections::BTreeMap;

use learnsim_core::{SimConfig, SimState};

fn main() {
    let config = SimConfig {
        n_agents: 2000,
        horizon_days: 1,
        demand_enabled: false,
        ..SimConfig::default()
    };
    let state = SimState::new(&config).unwrap();

    let mut groups: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for a in state.agents() {
        groups.entry(a.archetype.name()).or_default().push((a.attitude, a.awareness));
    }
    println!("{:<26}{:>7}{:>10}{:>10}", "archetype", "share", "mean A", "mean ESA");
    for (name, v) in &groups {
        let n = v.len() as f64;
        let a = v.iter().map(|x| x.0).sum::<f64>() / n;
        let esa = v.iter().map(|x| x.1).sum::<f64>() / n;
        println!("{name:<26}{:>7.3}{a:>10.3}{esa:>10.3}", n / config.n_agents as f64);
    }
}
