//! Who stops using the meter, and where their attitudes go.

use learnsim_core::experiments::{run_experiment, ExperimentId, ExperimentSpec};
use learnsim_core::SimConfig;

fn main() {
    let base = SimConfig { n_agents: 300, ..SimConfig::default() };
    let mut spec = ExperimentSpec::preset(ExperimentId::E4Discontinuance, &base);
    spec.n_runs = 3;
    let result = run_experiment(&spec).unwrap();

    let d = result.discontinuance.unwrap();
    println!(
        "{} of {} experienced agents discontinued ({:.1}%)",
        d.discontinuers.agents,
        d.experienced_agents,
        100.0 * d.discontinuer_fraction
    );
    for (name, g) in [("continuers", &d.continuers), ("discontinuers", &d.discontinuers)] {
        println!(
            "{name:<14} A slope {:+.5}/day  ESA slope {:+.5}/day",
            g.attitude_slope(),
            g.awareness_slope()
        );
    }
}
