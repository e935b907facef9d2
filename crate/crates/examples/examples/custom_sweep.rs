//! Sweeping rewiring probability.

use learnsim_core::experiments::{run_experiment, ExperimentId, ExperimentSpec, Sweep};
use learnsim_core::SimConfig;

fn main() {
    let sweep: Sweep = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "network.beta=0,0.1,1".into())
        .parse()
        .unwrap();
    let base = SimConfig { n_agents: 300, ..SimConfig::default() };
    let mut spec = ExperimentSpec::preset(ExperimentId::E3ContactRate, &base);
    spec.sweep = Some(sweep);
    spec.n_runs = 3;
    let result = run_experiment(&spec).unwrap();

    for p in &result.points {
        let s = p.series("ever_experienced").unwrap();
        println!("{:<20} ever experienced at day {}: {:.1}", p.label, s.mean.len(), s.mean.last().unwrap());
    }
}
