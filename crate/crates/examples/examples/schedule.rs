//! Steering a run with scheduled commands.

use learnsim_core::{run, Command, ScheduledCommand, SimConfig};

fn main() {
    let config = SimConfig {
        n_agents: 300,
        horizon_days: 60,
        demand_enabled: false,
        ..SimConfig::default()
    };
    let day = |d: u64| d * 1440;
    let steered = vec![
        ScheduledCommand { tick: 0, command: Command::ApplyIntervention { coverage: 0.5 } },
        ScheduledCommand { tick: day(10), command: Command::SetContactRate { rate: 0.8 } },
        ScheduledCommand { tick: day(20), command: Command::SetPTh { p_th: 0.75 } },
        ScheduledCommand { tick: day(40), command: Command::WithdrawIntervention },
    ];

    for (name, schedule) in [("default", config.schedule.clone()), ("steered", steered)] {
        let out = run(&config, 5, &schedule).unwrap();
        let at = |d: u64| out.frames[(day(d) - 1) as usize];
        print!("{name:<8}");
        for d in [10, 20, 40, 60] {
            let f = at(d);
            print!("  day {d}: {} ever exp", f.ever_experienced());
        }
        println!();
    }
}
