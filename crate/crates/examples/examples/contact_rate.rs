//! Spread of experience at different contact rates.

use learnsim_core::experiments::{run_experiment, ExperimentId, ExperimentSpec};
use learnsim_core::SimConfig;

fn main() {
    let base = SimConfig { n_agents: 300, ..SimConfig::default() };
    let mut spec = ExperimentSpec::preset(ExperimentId::E3ContactRate, &base);
    spec.n_runs = 3;
    let result = run_experiment(&spec).unwrap();

    for p in &result.points {
        let s = p.series("ever_experienced").unwrap();
        let pick: Vec<String> = [9, 29, 59, 89]
            .iter()
            .filter_map(|&d| s.mean.get(d).map(|v| format!("day {}: {v:.1}", d + 1)))
            .collect();
        println!("{:<20} {}", p.label, pick.join("  "));
    }
}
