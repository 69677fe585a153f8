//! Scripted WebSocket clients driving whole blocks against a live server.

use std::collections::BTreeSet;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use spv_core::session::{read_records, CSV_HEADER};
use spv_core::stimuli::Timing;
use spv_core::{run_block, BlockConfig, Condition, IdealObserver, ObserverConfig, Response, TestFamily};
use spv_service::protocol::{Envelope, Phase, ServerMessage};
use spv_service::{Service, ServiceConfig};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

const TIMING: Timing = Timing {
    pre_ms: 40,
    tone_lead_ms: 40,
    response_window_ms: 600,
};

async fn start(out_dir: Option<std::path::PathBuf>) -> (Service, String) {
    let service = Service::new(ServiceConfig {
        fps: 100,
        timing: TIMING,
        inter_trial: Duration::from_millis(10),
        default_frame_px: 32,
        seed: Some(1),
        out_dir,
        ..Default::default()
    })
    .unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("ws://{}/ws", listener.local_addr().unwrap());
    tokio::spawn(service.clone().serve(listener));
    (service, url)
}

struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    seq: u64,
    last_server_seq: u64,
}

impl Client {
    async fn connect(url: &str) -> Client {
        let (ws, _) = tokio_tungstenite::connect_async(url).await.unwrap();
        Client {
            ws,
            seq: 0,
            last_server_seq: 0,
        }
    }

    async fn send(&mut self, kind: &str, payload: Value) {
        self.seq += 1;
        let text = json!({"type": kind, "seq": self.seq, "payload": payload}).to_string();
        self.ws.send(Message::Text(text.into())).await.unwrap();
    }

    async fn key(&mut self, key: &str) {
        self.send("response", json!({ "key": key })).await;
    }

    async fn recv(&mut self) -> ServerMessage {
        loop {
            let msg = tokio::time::timeout(Duration::from_secs(10), self.ws.next())
                .await
                .expect("server went quiet")
                .expect("stream ended")
                .unwrap();
            if let Message::Text(text) = msg {
                let env: Envelope<ServerMessage> = serde_json::from_str(&text).unwrap();
                assert!(env.seq > self.last_server_seq, "server seq must increase");
                self.last_server_seq = env.seq;
                return env.message;
            }
        }
    }
}

fn lit(frame: &spv_service::protocol::FramePayload) -> bool {
    frame.pixels().unwrap().iter().any(|&p| p > 0)
}

#[tokio::test(flavor = "multi_thread")]
async fn light_block_over_the_wire() {
    let dir = tempfile::tempdir().unwrap();
    let (service, url) = start(Some(dir.path().to_path_buf())).await;
    let mut c = Client::connect(&url).await;
    c.send("hello", json!({"session_id": "wire", "condition": "C3", "test": "light"})).await;

    let ServerMessage::Config(cfg) = c.recv().await else { panic!("expected config") };
    assert_eq!((cfg.n_trials, cfg.frame_width, cfg.frame_height), (24, 32, 32));
    assert_eq!(cfg.eye, "right");
    assert_eq!(cfg.level_count, 8);
    assert_eq!(cfg.condition_label, "C3");

    let mut acks = 0;
    let mut toned = false;
    let report = loop {
        match c.recv().await {
            ServerMessage::Tone(t) => {
                assert_eq!(t.trial, acks);
                toned = true;
            }
            ServerMessage::Frame(f) => {
                assert_eq!(f.pixels().unwrap().len(), 32 * 32);
                assert_eq!(f.trial, acks);
                if f.phase == Phase::Stimulus {
                    assert!(toned, "tone precedes the imperative stimulus");
                    c.key(if lit(&f) { "left" } else { "right" }).await;
                    // wait for the ack so one key is sent per trial
                    loop {
                        match c.recv().await {
                            ServerMessage::Response(a) => {
                                assert_eq!(a.trial, acks);
                                assert!(a.rt_ms.unwrap() <= TIMING.response_window_ms);
                                acks += 1;
                                toned = false;
                                break;
                            }
                            ServerMessage::Frame(_) => {}
                            other => panic!("unexpected {other:?}"),
                        }
                    }
                }
            }
            ServerMessage::BlockDone(done) => break done,
            other => panic!("unexpected {other:?}"),
        }
    };
    assert_eq!(acks, 24);
    assert!(!report.report.aborted);
    assert_eq!(report.report.summary.n_trials, 24);
    assert!(report.report.summary.performance_pct >= 95.0, "{}", report.report.summary.performance_pct);

    // the wire log has exactly the shape of a simulated log
    let header = report.trials_csv.lines().next().unwrap();
    assert_eq!(header, CSV_HEADER.join(","));
    let wire = read_records(report.trials_csv.as_bytes()).unwrap();
    assert_eq!(wire.len(), 24);
    let cond = Condition::standard("C3").unwrap();
    let cfg = BlockConfig::new("sim", TestFamily::Light, cond.clone(), 1).unwrap();
    let sim = run_block(cfg, &mut IdealObserver::new(&cond, ObserverConfig::default()).unwrap()).unwrap();
    let keys = |v: &spv_core::TrialRecord| -> BTreeSet<String> {
        let j = serde_json::to_value(&v.stimulus).unwrap();
        j.as_object().unwrap().keys().cloned().collect()
    };
    for (w, s) in wire.iter().zip(&sim.records) {
        assert_eq!(keys(w), keys(s));
        assert_eq!(w.condition, s.condition);
        assert!(matches!(w.response, Response::Key(_)));
    }

    let blocks = service.completed_blocks();
    assert_eq!(blocks.len(), 1);
    assert_eq!(blocks[0].records, wire);
    let on_disk = std::fs::read_to_string(dir.path().join("wire_light_C3.csv")).unwrap();
    assert_eq!(on_disk, report.trials_csv);
    assert!(dir.path().join("wire_light_C3.json").exists());
}

#[tokio::test(flavor = "multi_thread")]
async fn early_and_repeated_keys_are_ignored() {
    let (_, url) = start(None).await;
    let mut c = Client::connect(&url).await;
    c.send("hello", json!({"condition": "C1", "test": "landolt", "n_trials": 3})).await;
    let ServerMessage::Config(cfg) = c.recv().await else { panic!() };
    assert_eq!(cfg.answer_keys.len(), 4);

    let mut acks = Vec::new();
    let mut pressed_early = None;
    let mut pressed = None;
    while acks.len() < 3 {
        match c.recv().await {
            ServerMessage::Frame(f) if f.phase == Phase::Fixation && pressed_early != Some(f.trial) => {
                pressed_early = Some(f.trial);
                c.key("up").await;
            }
            ServerMessage::Frame(f) if f.phase == Phase::Stimulus && pressed != Some(f.trial) => {
                pressed = Some(f.trial);
                c.key("left").await;
                c.key("right").await;
            }
            ServerMessage::Response(a) => acks.push(a),
            ServerMessage::Error(e) => panic!("{}", e.message),
            _ => {}
        }
    }
    // every trial scored the first post-onset key, never the early one or the duplicate
    assert!(acks.iter().enumerate().all(|(i, a)| a.trial == i && a.response == "left"));
    let done = loop {
        match c.recv().await {
            ServerMessage::BlockDone(d) => break d,
            ServerMessage::Response(a) => panic!("extra ack {a:?}"),
            _ => {}
        }
    };
    let records = read_records(done.trials_csv.as_bytes()).unwrap();
    assert!(records.iter().all(|r| r.response == Response::Key(spv_core::Direction::Left)));
}

#[tokio::test(flavor = "multi_thread")]
async fn silence_times_out_and_invalid_keys_are_refused() {
    let (_, url) = start(None).await;
    let mut c = Client::connect(&url).await;
    c.send("hello", json!({"condition": "C1", "test": "time", "n_trials": 2})).await;
    let ServerMessage::Config(_) = c.recv().await else { panic!() };
    let mut acks = Vec::new();
    let mut complained = false;
    let mut tried = false;
    loop {
        match c.recv().await {
            ServerMessage::Frame(f) if f.phase == Phase::Stimulus && !tried => {
                tried = true;
                c.key("up").await; // not an answer in the time-resolution test
            }
            ServerMessage::Error(e) => {
                assert!(!e.fatal, "{}", e.message);
                complained = true;
            }
            ServerMessage::Response(a) => acks.push(a),
            ServerMessage::BlockDone(done) => {
                assert_eq!(done.report.summary.n_correct, 0);
                assert_eq!(done.report.summary.mean_rt_s, None);
                break;
            }
            _ => {}
        }
    }
    assert!(complained);
    assert_eq!(acks.len(), 2);
    assert!(acks.iter().all(|a| a.response == "timeout" && a.rt_ms.is_none()));
}

#[tokio::test(flavor = "multi_thread")]
async fn pose_moves_the_view() {
    let (_, url) = start(None).await;
    let mut c = Client::connect(&url).await;
    c.send("hello", json!({"condition": "C1", "test": "light", "n_trials": 1, "seed": 4})).await;
    let ServerMessage::Config(_) = c.recv().await else { panic!() };
    // find a lit stimulus frame, look away, and expect darkness
    let mut looked_away = false;
    let mut saw_dark = false;
    loop {
        match c.recv().await {
            ServerMessage::Frame(f) if f.phase == Phase::Stimulus => {
                if !looked_away {
                    if !lit(&f) {
                        // this trial has no light; nothing to pan away from
                        c.key("right").await;
                        continue;
                    }
                    looked_away = true;
                    c.send("pose", json!({"yaw_deg": 10.0, "pitch_deg": 0.0})).await;
                } else if !lit(&f) {
                    saw_dark = true;
                    c.key("left").await;
                }
            }
            ServerMessage::BlockDone(_) => break,
            _ => {}
        }
    }
    assert!(!looked_away || saw_dark);
}

#[tokio::test(flavor = "multi_thread")]
async fn disconnect_mid_block_keeps_completed_trials() {
    let dir = tempfile::tempdir().unwrap();
    let (service, url) = start(Some(dir.path().to_path_buf())).await;
    let mut c = Client::connect(&url).await;
    c.send("hello", json!({"session_id": "gone", "condition": "C2", "test": "location", "n_trials": 5})).await;
    let ServerMessage::Config(_) = c.recv().await else { panic!() };
    let mut acks = 0;
    let mut pressed = None;
    loop {
        match c.recv().await {
            ServerMessage::Frame(f) if acks == 2 => {
                assert_eq!(f.trial, 2);
                break;
            }
            ServerMessage::Frame(f) if f.phase == Phase::Stimulus && pressed != Some(f.trial) => {
                pressed = Some(f.trial);
                c.key("down").await;
            }
            ServerMessage::Response(_) => acks += 1,
            _ => {}
        }
    }
    drop(c);
    let mut blocks = Vec::new();
    for _ in 0..200 {
        blocks = service.completed_blocks();
        if !blocks.is_empty() {
            break;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    assert_eq!(blocks.len(), 1);
    assert!(blocks[0].aborted);
    assert_eq!(blocks[0].records.len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("gone_location_C2.csv")).unwrap();
    assert_eq!(read_records(csv.as_bytes()).unwrap().len(), 2);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("gone_location_C2.json")).unwrap()).unwrap();
    assert_eq!(report["aborted"], true);
}

#[tokio::test(flavor = "multi_thread")]
async fn bad_hello_is_reported_and_recoverable() {
    let (_, url) = start(None).await;
    let mut c = Client::connect(&url).await;
    c.send("hello", json!({"condition": "C9", "test": "light"})).await;
    let ServerMessage::Error(e) = c.recv().await else { panic!() };
    assert!(!e.fatal);
    c.ws.send(Message::Text("{not json".into())).await.unwrap();
    let ServerMessage::Error(e) = c.recv().await else { panic!() };
    assert!(e.message.contains("malformed"));
    c.send("hello", json!({"condition": {"phosphene_count": 64, "fov_deg": 12}, "test": "light", "n_trials": 1, "training": true, "frame_px": 48})).await;
    let ServerMessage::Config(cfg) = c.recv().await else { panic!() };
    assert!(cfg.training);
    assert_eq!(cfg.frame_width, 48);
    assert_eq!(cfg.condition.phosphene_count, 64);
}

#[tokio::test(flavor = "multi_thread")]
async fn health_and_static_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>hi</h1>").unwrap();
    let service = Service::new(ServiceConfig {
        static_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(service.serve(listener));
    let get = |path: &'static str| async move {
        use tokio::io::{AsyncReadExt, AsyncWriteExt};
        let mut s = TcpStream::connect(addr).await.unwrap();
        s.write_all(format!("GET {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").as_bytes())
            .await
            .unwrap();
        let mut out = String::new();
        s.read_to_string(&mut out).await.unwrap();
        out
    };
    assert!(get("/health").await.ends_with("ok"));
    assert!(get("/index.html").await.contains("<h1>hi</h1>"));
}
