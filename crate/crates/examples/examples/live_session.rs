//! Steering a live session, then replaying its command log offline.

use std::time::Duration;

use learnsim_core::engine::metrics_digest;
use learnsim_core::{run, Command, SimConfig};
use learnsim_service::api::{CreateSession, SessionCommand, Status};
use learnsim_service::{SessionHandle, SessionParams};

#[tokio::main]
async fn main() {
    let req: CreateSession = serde_json::from_value(serde_json::json!({
        "overrides": { "n_agents": 200, "horizon_days": 10, "contact_rate": 0.1 },
        "seed": 9,
        "minutes_per_second": 20000.0
    }))
    .unwrap();
    let session = SessionHandle::spawn(1, SessionParams::from_request(req).unwrap()).unwrap();
    session.command(SessionCommand::Start).await.unwrap();

    let mut raised = false;
    let summary = loop {
        let s = session.summary().await.unwrap();
        if s.status == Status::Finished {
            break s;
        }
        if !raised && s.day >= 3 {
            let ack = session
                .command(SessionCommand::Sim(Command::SetContactRate { rate: 0.6 }))
                .await
                .unwrap();
            println!("contact rate raised at tick {} (sent at {})", ack.effective_tick, ack.received_tick);
            raised = true;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    };
    let log = session.log().await.unwrap();
    session.shutdown();

    let replayed = SimConfig::from_toml_str(&log.to_toml()).unwrap();
    let out = run(&replayed, replayed.seed, &replayed.schedule).unwrap();
    println!("live   {}", summary.digest);
    println!("replay {}", metrics_digest(&out.frames));
}
