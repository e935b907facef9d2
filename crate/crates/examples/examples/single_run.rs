//! One run to the horizon.

use learnsim_core::engine::metrics_digest;
use learnsim_core::{run, SimConfig};

fn main() {
    let config = SimConfig {
        n_agents: 300,
        horizon_days: 90,
        demand_enabled: false,
        ..SimConfig::default()
    };
    let out = run(&config, 42, &config.schedule).unwrap();

    println!("{:>4}{:>8}{:>10}{:>8}{:>8}{:>8}", "day", "uninf", "inf-inexp", "exp", "disc", "mean A");
    for f in out.frames.iter().filter(|f| (f.tick + 1) % 1440 == 0).step_by(9) {
        println!(
            "{:>4}{:>8}{:>10}{:>8}{:>8}{:>8.3}",
            (f.tick + 1) / 1440,
            f.uninfluenced,
            f.influenced_inexperienced,
            f.experienced,
            f.discontinued,
            f.mean_attitude
        );
    }
    println!("digest {}", metrics_digest(&out.frames));
}
