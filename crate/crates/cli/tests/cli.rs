use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use learnsim_cli::Manifest;
use learnsim_core::SimConfig;
use learnsim_service::api::{CreateSession, SessionCommand, Status};
use learnsim_service::{SessionHandle, SessionParams};
use serde_json::Value;

fn learnsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_learnsim"))
        .args(args)
        .current_dir(cwd)
        .env_remove("LEARNSIM_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("small.toml");
    fs::write(&p, format!("n_agents = 80\nhorizon_days = 3\nseed = 11\n{body}")).unwrap();
    p
}

fn summary_digest(dir: &Path) -> String {
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    v["metrics_digest"].as_str().unwrap().to_string()
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    let ok = learnsim(&["validate"], d);
    assert_eq!(code(&ok), 0);
    assert_eq!(stdout(&ok).trim(), "valid");

    fs::write(d.join("bad.toml"), "p_th = 1.5\ncontact_rate = -1\n").unwrap();
    let bad = learnsim(&["validate", "--config", "bad.toml"], d);
    assert_eq!(code(&bad), 1);
    let out = stdout(&bad);
    assert!(out.contains("p_th: "), "{out}");
    assert!(out.contains("contact_rate: "), "{out}");

    fs::write(d.join("garbled.toml"), "n_agents = [").unwrap();
    let garbled = learnsim(&["run", "--config", "garbled.toml"], d);
    assert_eq!(code(&garbled), 1);
    assert!(String::from_utf8_lossy(&garbled.stderr).contains("line 1"));

    assert_eq!(code(&learnsim(&["run", "--config", "missing.toml"], d)), 3);
    assert_eq!(code(&learnsim(&["frobnicate"], d)), 1);
    assert_eq!(code(&learnsim(&["--help"], d)), 0);

    // An output path that is a regular file cannot be created as a directory.
    fs::write(d.join("occupied"), "").unwrap();
    let cfg = small_config(d, "");
    let io = learnsim(&["run", "--config", cfg.to_str().unwrap(), "--out", "occupied/x"], d);
    assert_eq!(code(&io), 3);

    // An hourly reference cannot be compared with half-hourly simulated curves.
    let hourly: String = std::iter::once("time,kw\n".to_string())
        .chain((0..24).map(|h| format!("{h:02}:00,0.5\n")))
        .collect();
    fs::write(d.join("hourly.csv"), hourly).unwrap();
    let rt = learnsim(
        &["experiment", "--id", "E1", "--config", cfg.to_str().unwrap(), "--runs", "1", "--reference", "hourly.csv", "--out", "e1"],
        d,
    );
    assert_eq!(code(&rt), 2, "{}", String::from_utf8_lossy(&rt.stderr));
}

#[test]
fn missing_catalog_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "catalog = \"nowhere.csv\"\n").unwrap();
    let o = learnsim(&["validate", "--config", "c.toml"], tmp.path());
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("catalog: "), "{}", stdout(&o));
}

#[test]
fn exported_defaults_are_valid_and_editable() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = learnsim(&["export-defaults", "--out", "defaults"], d);
    assert_eq!(code(&o), 0);
    for f in ["learnsim.toml", "catalog.csv", "reference_profile.csv"] {
        assert!(d.join("defaults").join(f).is_file(), "{f}");
    }
    assert_eq!(code(&learnsim(&["validate", "--config", "defaults/learnsim.toml"], d)), 0);
    let loaded = SimConfig::load(&d.join("defaults/learnsim.toml")).unwrap();
    assert_eq!(
        loaded.load_catalog().unwrap(),
        SimConfig::default().load_catalog().unwrap()
    );

    let printed = learnsim(&["export-defaults"], d);
    assert_eq!(SimConfig::from_toml_str(&stdout(&printed)).unwrap(), SimConfig::default());
}

#[test]
fn runs_are_reproducible_and_manifests_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = small_config(d, "");
    let cfg = cfg.to_str().unwrap();
    for out in ["a", "b"] {
        assert_eq!(code(&learnsim(&["run", "--config", cfg, "--out", out, "--every", "60"], d)), 0);
    }
    let files = [
        "metrics.csv",
        "agents.csv",
        "network.edges",
        "load_curve.csv",
        "summary.json",
        "config.toml",
    ];
    for f in files {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
    let metrics = fs::read_to_string(d.join("a/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 3 * 1440 / 60);
    assert_eq!(fs::read_to_string(d.join("a/network.edges")).unwrap().lines().count(), 80 * 4 / 2);

    let m: Manifest = serde_json::from_str(&fs::read_to_string(d.join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(m.seeds, vec![11]);
    assert_eq!(m.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(m.config_sha256, m.config.fingerprint());
    assert_eq!(m.files.len(), files.len());
    assert!(m.wall_time_s >= 0.0);

    let again = learnsim(&["run", "--manifest", "a/manifest.json", "--out", "c"], d);
    assert_eq!(code(&again), 0);
    assert_eq!(summary_digest(&d.join("c")), summary_digest(&d.join("a")));
    assert_eq!(fs::read(d.join("c/metrics.csv")).unwrap(), fs::read(d.join("a/metrics.csv")).unwrap());

    let seeded = learnsim(&["run", "--config", cfg, "--seed", "12", "--out", "s"], d);
    assert_eq!(code(&seeded), 0);
    assert_ne!(summary_digest(&d.join("s")), summary_digest(&d.join("a")));
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = small_config(d, "demand_enabled = false\n");
    let o = Command::new(env!("CARGO_BIN_EXE_learnsim"))
        .args(["run", "--config", cfg.to_str().unwrap()])
        .current_dir(d)
        .env("LEARNSIM_OUT", d.join("root"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let dir = d.join("root/run-seed11");
    assert!(dir.join("summary.json").is_file());
    // No demand, no load curve.
    assert!(!dir.join("load_curve.csv").exists());
}

#[test]
fn contact_rate_experiment_writes_one_series_per_setting() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = small_config(d, "");
    let o = learnsim(
        &["experiment", "--id", "E3", "--config", cfg.to_str().unwrap(), "--runs", "2", "--out", "e3"],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ever: Vec<_> = fs::read_dir(d.join("e3"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with("_ever_experienced.csv"))
        .collect();
    assert_eq!(ever.len(), 3, "{ever:?}");
    let m: Manifest = serde_json::from_str(&fs::read_to_string(d.join("e3/manifest.json")).unwrap()).unwrap();
    let rec = m.experiment.unwrap();
    assert_eq!(rec.n_runs, 2);
    assert_eq!(m.seeds, vec![rec.base_seed, rec.base_seed + 1]);

    let again = learnsim(&["experiment", "--manifest", "e3/manifest.json", "--out", "e3b", "--jobs", "3"], d);
    assert_eq!(code(&again), 0);
    for n in &ever {
        assert_eq!(fs::read(d.join("e3").join(n)).unwrap(), fs::read(d.join("e3b").join(n)).unwrap());
    }

    let custom = learnsim(
        &[
            "experiment", "--id", "custom", "--config", cfg.to_str().unwrap(), "--runs", "1",
            "--sweep", "p_th=0.8,0.9", "--out", "cu",
        ],
        d,
    );
    assert_eq!(code(&custom), 0, "{}", String::from_utf8_lossy(&custom.stderr));
    assert!(stdout(&custom).contains("p_th=0.9"));

    let bad = learnsim(&["experiment", "--id", "E3", "--sweep", "no_such_key=1", "--out", "x"], d);
    assert_eq!(code(&bad), 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn service_logs_replay_through_the_cli() {
    let mut req = CreateSession {
        seed: Some(21),
        ..CreateSession::default()
    };
    req.overrides.insert("n_agents".into(), 90.0);
    req.overrides.insert("horizon_days".into(), 4.0);
    let h = SessionHandle::spawn(1, SessionParams::from_request(req).unwrap()).unwrap();
    h.command(SessionCommand::SetPacing { minutes_per_second: None }).await.unwrap();
    h.command(SessionCommand::Sim(learnsim_core::Command::SetContactRate { rate: 0.9 }))
        .await
        .unwrap();
    h.command(SessionCommand::Start).await.unwrap();
    let summary = loop {
        let s = h.summary().await.unwrap();
        if s.status == Status::Finished {
            break s;
        }
        if s.tick > 2000 && s.p_th > 0.8 {
            h.command(SessionCommand::Sim(learnsim_core::Command::SetPTh { p_th: 0.7 }))
                .await
                .unwrap();
        }
        tokio::time::sleep(Duration::from_millis(5)).await;
    };
    let export = h.log().await.unwrap();
    h.shutdown();

    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().to_path_buf();
    fs::write(d.join("session.toml"), export.to_toml()).unwrap();
    let out = tokio::task::spawn_blocking(move || {
        let o = learnsim(&["run", "--config", "session.toml", "--out", "replay"], &d);
        (o, summary_digest(&d.join("replay")))
    })
    .await
    .unwrap();
    assert_eq!(code(&out.0), 0);
    assert_eq!(out.1, summary.digest);
}

#[test]
fn serve_answers_http() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_learnsim"))
        .args(["serve", "--addr", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").expect("bound address").to_string();
    let mut s = TcpStream::connect(&addr).unwrap();
    write!(s, "GET /sessions HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut resp = String::new();
    s.read_to_string(&mut resp).unwrap();
    child.kill().unwrap();
    let _ = child.wait();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"api_version\":1"), "{resp}");
}
