//! Energy saved when most residents already know how to use the meter.

use learnsim_core::experiments::{run_experiment, ExperimentId, ExperimentSpec};
use learnsim_core::SimConfig;

fn main() {
    let base = SimConfig { n_agents: 200, ..SimConfig::default() };
    let mut spec = ExperimentSpec::preset(ExperimentId::E2ExperienceEffect, &base);
    spec.n_runs = 3;
    spec.base.horizon_days = 7;
    let result = run_experiment(&spec).unwrap();

    for r in &result.reductions {
        println!(
            "{:<12} reduction {:5.2}%  (per run {:.2} +- {:.2})",
            r.label, r.reduction_pct, r.per_run.mean, r.per_run.std
        );
    }
}
