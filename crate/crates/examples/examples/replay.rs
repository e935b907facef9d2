//! A configuration written to TOML and read back reproduces the run.

use learnsim_core::engine::metrics_digest;
use learnsim_core::{run, Command, ScheduledCommand, SimConfig};

fn main() {
    let mut config = SimConfig {
        n_agents: 200,
        horizon_days: 10,
        seed: 2024,
        ..SimConfig::default()
    };
    config.schedule.push(ScheduledCommand {
        tick: 5 * 1440,
        command: Command::SetContactRate { rate: 0.6 },
    });

    let text = config.to_toml_string();
    let reread = SimConfig::from_toml_str(&text).unwrap();
    let a = run(&config, config.seed, &config.schedule).unwrap();
    let b = run(&reread, reread.seed, &reread.schedule).unwrap();

    println!("fingerprint {}", config.fingerprint());
    println!("original {}", metrics_digest(&a.frames));
    println!("reread   {}", metrics_digest(&b.frames));
    assert_eq!(a.frames, b.frames);
}
