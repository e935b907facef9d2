//! Simulated daily profile against the bundled reference.

use learnsim_core::experiments::{run_experiment, ExperimentId, ExperimentSpec};
use learnsim_core::SimConfig;

fn main() {
    let base = SimConfig { n_agents: 300, ..SimConfig::default() };
    let mut spec = ExperimentSpec::preset(ExperimentId::E1LoadValidation, &base);
    spec.n_runs = 3;
    let result = run_experiment(&spec).unwrap();

    let lv = result.load_validation.unwrap();
    let cmp = lv.comparison.unwrap();
    let reference = spec.reference.unwrap();
    for (i, (s, r)) in lv.curve.values.iter().zip(&reference.values).enumerate().step_by(2) {
        println!("{:02}:{:02}  sim {s:.3}  ref {r:.3}", i / 2, (i % 2) * 30);
    }
    println!("bimodal {}  MAPE {:.1}%  RMSE {:.3} kW", lv.bimodal, cmp.mape, cmp.rmse);
    println!("peak offsets: morning {} evening {} half-hours", cmp.morning_peak_offset, cmp.evening_peak_offset);
}
