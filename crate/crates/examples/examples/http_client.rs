//! The control service over HTTP: create, command, stream, export.

use std::net::SocketAddr;

use learnsim_service::{serve, ServeOptions};
use serde_json::{json, Value};
use tokio::sync::oneshot;

#[tokio::main]
async fn main() {
    let (tx, rx) = oneshot::channel::<SocketAddr>();
    let opts = ServeOptions {
        addr: "127.0.0.1:0".parse().unwrap(),
        static_dir: None,
    };
    tokio::spawn(async move {
        serve(opts, |a| {
            let _ = tx.send(a);
        })
        .await
    });
    let base = format!("http://{}", rx.await.unwrap());
    let http = reqwest::Client::new();

    let created: Value = http
        .post(format!("{base}/sessions"))
        .json(&json!({ "overrides": { "n_agents": 150, "horizon_days": 3 }, "stride_minutes": 360 }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let id = created["id"].as_u64().unwrap();
    println!("session {id}, status {}", created["status"]);

    let cmd = |body: Value| {
        let http = http.clone();
        let url = format!("{base}/sessions/{id}/commands");
        async move { http.post(url).json(&body).send().await.unwrap().json::<Value>().await.unwrap() }
    };
    let ack = cmd(json!({ "command": "set_contact_rate", "rate": 0.7 })).await;
    println!("accepted: effective tick {}", ack["accepted"]["effective_tick"]);
    cmd(json!({ "command": "set_pacing", "minutes_per_second": null })).await;
    cmd(json!({ "command": "start" })).await;

    let mut events = http.get(format!("{base}/sessions/{id}/events")).send().await.unwrap();
    let mut buf = String::new();
    let mut seen = 0;
    while seen < 5 {
        let Some(chunk) = events.chunk().await.unwrap() else { break };
        buf.push_str(&String::from_utf8_lossy(&chunk));
        while let Some(end) = buf.find("\n\n") {
            let event: String = buf.drain(..end + 2).collect();
            if let Some(data) = event.lines().find_map(|l| l.strip_prefix("data: ")) {
                let frame: Value = serde_json::from_str(data).unwrap();
                println!("frame tick {} experienced {}", frame["tick"], frame["metrics"]["experienced"]);
                seen += 1;
            }
        }
    }
    drop(events);

    let log = http
        .get(format!("{base}/sessions/{id}/log"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    println!("{}", log.lines().take(4).collect::<Vec<_>>().join("\n"));
}
