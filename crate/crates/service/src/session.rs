//! One WebSocket connection: wait for `hello`, stream a block trial by trial,
//! report it, and wait for the next `hello`.

use std::time::Duration;

use axum::extract::ws::{Message, WebSocket};
use futures_util::stream::{SplitSink, StreamExt};
use futures_util::SinkExt;
use spv_core::{BlockConfig, BlockRunner, HeadPose, Pipeline, Reaction};
use tokio::sync::mpsc;
use tokio::time::{self, Instant, MissedTickBehavior};

use crate::frames::TrialFrames;
use crate::protocol::{
    BlockDone, ClientMessage, Envelope, ErrorPayload, FramePayload, Hello, Phase, ResponseAck, ServerMessage,
    SessionConfig, Tone,
};
use crate::Service;

/// Why a session stopped early.
#[derive(Debug)]
enum End {
    /// The client went away.
    Closed,
    /// Something the session cannot recover from; reported to the client.
    Fatal(String),
}

enum Event {
    Message(ClientMessage, Instant),
    Deadline,
    Closed,
}

enum Inbound {
    Message(Envelope<ClientMessage>, Instant),
    Malformed(String),
}

struct Conn {
    sink: SplitSink<WebSocket, Message>,
    inbound: mpsc::UnboundedReceiver<Inbound>,
    opened: Instant,
    seq: u64,
    last_client_seq: Option<u64>,
    heartbeat: time::Interval,
}

impl Conn {
    async fn send(&mut self, message: ServerMessage) -> Result<(), End> {
        self.seq += 1;
        let env = Envelope {
            message,
            seq: self.seq,
            t_server_ms: self.opened.elapsed().as_millis() as u64,
        };
        let text = serde_json::to_string(&env).map_err(|e| End::Fatal(e.to_string()))?;
        self.sink.send(Message::Text(text.into())).await.map_err(|_| End::Closed)
    }

    async fn send_error(&mut self, message: impl Into<String>, fatal: bool) -> Result<(), End> {
        self.send(ServerMessage::Error(ErrorPayload {
            message: message.into(),
            fatal,
        }))
        .await
    }

    /// Next client message, or `Deadline` once `deadline` passes. Heartbeats,
    /// malformed input and out-of-order sequence numbers are handled here.
    async fn next_event(&mut self, deadline: Option<Instant>) -> Event {
        loop {
            let sleep = time::sleep_until(deadline.unwrap_or_else(|| Instant::now() + Duration::from_secs(3600)));
            tokio::select! {
                biased;
                inbound = self.inbound.recv() => match inbound {
                    None => return Event::Closed,
                    Some(Inbound::Malformed(why)) => {
                        if self.send_error(format!("malformed message: {why}"), false).await.is_err() {
                            return Event::Closed;
                        }
                    }
                    Some(Inbound::Message(env, at)) => {
                        if self.last_client_seq.is_some_and(|last| env.seq <= last) {
                            let msg = format!("seq {} does not increase", env.seq);
                            if self.send_error(msg, false).await.is_err() {
                                return Event::Closed;
                            }
                            continue;
                        }
                        self.last_client_seq = Some(env.seq);
                        return Event::Message(env.message, at);
                    }
                },
                _ = self.heartbeat.tick() => {
                    if self.sink.send(Message::Ping(Default::default())).await.is_err() {
                        return Event::Closed;
                    }
                }
                _ = sleep, if deadline.is_some() => return Event::Deadline,
            }
        }
    }
}

pub(crate) async fn run_connection(socket: WebSocket, service: Service) {
    let (sink, mut stream) = socket.split();
    let (tx, inbound) = mpsc::unbounded_channel();
    // Receive times are taken here, the moment a frame arrives, so reaction
    // times never depend on how busy the session task is.
    let reader = tokio::spawn(async move {
        while let Some(Ok(msg)) = stream.next().await {
            let at = Instant::now();
            let item = match msg {
                Message::Text(text) => match serde_json::from_str::<Envelope<ClientMessage>>(&text) {
                    Ok(env) => Inbound::Message(env, at),
                    Err(e) => Inbound::Malformed(e.to_string()),
                },
                Message::Binary(_) => Inbound::Malformed("binary messages are not part of the protocol".into()),
                Message::Close(_) => break,
                Message::Ping(_) | Message::Pong(_) => continue,
            };
            if tx.send(item).is_err() {
                break;
            }
        }
    });

    let mut heartbeat = time::interval(service.config().heartbeat);
    heartbeat.set_missed_tick_behavior(MissedTickBehavior::Delay);
    heartbeat.reset();
    let mut conn = Conn {
        sink,
        inbound,
        opened: Instant::now(),
        seq: 0,
        last_client_seq: None,
        heartbeat,
    };
    if let Err(End::Fatal(why)) = serve_blocks(&mut conn, &service).await {
        tracing::warn!("session ended: {why}");
        let _ = conn.send_error(why, true).await;
    }
    let _ = conn.sink.close().await;
    reader.abort();
}

async fn serve_blocks(conn: &mut Conn, service: &Service) -> Result<(), End> {
    loop {
        let hello = match conn.next_event(None).await {
            Event::Closed => return Err(End::Closed),
            Event::Deadline => continue,
            Event::Message(ClientMessage::Hello(h), _) => h,
            Event::Message(ClientMessage::Response(_), _) => {
                tracing::debug!("key outside a block ignored");
                continue;
            }
            Event::Message(ClientMessage::Pose(_), _) => continue,
        };
        let setup = match prepare_block(&hello, service) {
            Ok(s) => s,
            Err(why) => {
                conn.send_error(why, false).await?;
                continue;
            }
        };
        run_block(conn, service, setup).await?;
    }
}

struct BlockSetup {
    runner: BlockRunner,
    pipeline: Pipeline,
    frame_px: usize,
    training: bool,
}

fn prepare_block(hello: &Hello, service: &Service) -> Result<BlockSetup, String> {
    let cfg = service.config();
    let condition = hello.condition.resolve().map_err(|e| e.to_string())?;
    let frame_px = hello.frame_px.unwrap_or(cfg.default_frame_px);
    if !(16..=cfg.max_frame_px).contains(&frame_px) {
        return Err(format!("frame_px must be in 16..={}, got {frame_px}", cfg.max_frame_px));
    }
    let n_trials = hello.n_trials.unwrap_or(cfg.default_trials);
    if n_trials == 0 {
        return Err("n_trials must be positive".into());
    }
    let number = service.next_block_number();
    let session_id = hello.session_id.clone().unwrap_or_else(|| format!("live{number:04}"));
    let seed = hello.seed.unwrap_or_else(|| service.block_seed(number));
    let block = BlockConfig::new(session_id, hello.test, condition.clone(), seed)
        .and_then(|b| b.with_src_px_per_deg(cfg.src_px_per_deg))
        .map(|b| b.with_trials(n_trials).with_timing(cfg.timing))
        .map_err(|e| e.to_string())?;
    let mut runner = BlockRunner::new(block).map_err(|e| e.to_string())?;
    // surfaces stimulus/timing conflicts now instead of mid-block
    runner.next_stimulus().map_err(|e| e.to_string())?;
    let pipeline = Pipeline::with_output_size(&condition, frame_px).map_err(|e| e.to_string())?;
    Ok(BlockSetup {
        runner,
        pipeline,
        frame_px,
        training: hello.training,
    })
}

async fn run_block(conn: &mut Conn, service: &Service, mut setup: BlockSetup) -> Result<(), End> {
    let cfg = service.config();
    let block_cfg = setup.runner.config().clone();
    conn.send(ServerMessage::Config(SessionConfig {
        session_id: block_cfg.session_id.clone(),
        condition_label: block_cfg.condition.display_label(),
        condition: block_cfg.condition.clone(),
        test: block_cfg.family,
        n_trials: block_cfg.n_trials,
        frame_width: setup.frame_px,
        frame_height: setup.frame_px,
        level_count: setup.pipeline.params().level_count,
        fps: cfg.fps,
        eye: "right".into(),
        training: setup.training,
        timing: block_cfg.setup.timing,
        inter_trial_ms: cfg.inter_trial.as_millis() as u64,
        heartbeat_ms: cfg.heartbeat.as_millis() as u64,
        answer_keys: answer_keys(&mut setup.runner),
    }))
    .await?;

    let mut pose = HeadPose::CENTER;
    let outcome = loop {
        if setup.runner.is_done() {
            break Ok(());
        }
        if let Err(end) = run_trial(conn, service, &mut setup, &mut pose).await {
            setup.runner.abort();
            break Err(end);
        }
        if !setup.runner.is_done() {
            if let Err(end) = inter_trial(conn, cfg.inter_trial, &mut pose).await {
                setup.runner.abort();
                break Err(end);
            }
        }
    };

    let training = setup.training;
    let block = setup.runner.finish();
    let persisted = service.record_block(&block, training);
    match outcome {
        Ok(()) => {
            persisted.map_err(End::Fatal)?;
            let report = block.report().map_err(|e| End::Fatal(e.to_string()))?;
            let trials_csv = spv_core::session::records_to_csv(&block.records).map_err(|e| End::Fatal(e.to_string()))?;
            conn.send(ServerMessage::BlockDone(BlockDone { report, trials_csv })).await
        }
        Err(end) => {
            if let Err(why) = persisted {
                tracing::error!("could not persist aborted block: {why}");
            }
            Err(end)
        }
    }
}

fn answer_keys(runner: &mut BlockRunner) -> Vec<spv_core::Key> {
    runner
        .next_stimulus()
        .ok()
        .flatten()
        .map(|s| s.spec.answer_keys().to_vec())
        .unwrap_or_default()
}

async fn run_trial(conn: &mut Conn, service: &Service, setup: &mut BlockSetup, pose: &mut HeadPose) -> Result<(), End> {
    let trial = setup.runner.trial_index();
    let stimulus = match setup.runner.next_stimulus() {
        Ok(Some(s)) => s.clone(),
        Ok(None) => return Ok(()),
        Err(e) => return Err(End::Fatal(e.to_string())),
    };
    let timeline = &stimulus.timeline;
    let (tone_ms, onset_ms, close_ms) = (timeline.tone_ms().unwrap_or(0), timeline.onset_ms(), timeline.close_ms());
    let margin = service.config().pan_margin_fraction * setup.pipeline.condition().fov_deg;
    let mut frames = TrialFrames::new(&setup.pipeline, &stimulus, setup.frame_px, margin, setup.training);
    let period = Duration::from_secs_f64(1.0 / service.config().fps as f64);

    let start = Instant::now();
    let mut next_tick = start;
    let mut tone_sent = false;
    let mut onset_at: Option<Instant> = None;
    loop {
        match conn.next_event(Some(next_tick)).await {
            Event::Closed => return Err(End::Closed),
            Event::Deadline => {
                let now = Instant::now();
                let t = (now - start).as_millis() as u64;
                if t >= close_ms {
                    setup.runner.record(Reaction::timeout()).map_err(|e| End::Fatal(e.to_string()))?;
                    return conn
                        .send(ServerMessage::Response(ResponseAck {
                            trial,
                            response: "timeout".into(),
                            rt_ms: None,
                        }))
                        .await;
                }
                if !tone_sent && t >= tone_ms {
                    tone_sent = true;
                    conn.send(ServerMessage::Tone(Tone { trial })).await?;
                }
                let phase = if t >= onset_ms {
                    onset_at.get_or_insert(now);
                    Phase::Stimulus
                } else {
                    Phase::Fixation
                };
                let px = frames.pixels(t, *pose).map_err(|e| End::Fatal(e.to_string()))?;
                let frame = FramePayload::new(trial, phase, setup.frame_px, setup.frame_px, px);
                conn.send(ServerMessage::Frame(frame)).await?;
                next_tick += period;
                if next_tick < Instant::now() {
                    next_tick = Instant::now() + period;
                }
            }
            Event::Message(ClientMessage::Response(press), at) => {
                let Some(onset) = onset_at.filter(|&on| at >= on) else {
                    tracing::debug!(trial, key = %press.key, "key before onset ignored");
                    continue;
                };
                let rt_ms = (at - onset).as_millis() as u64;
                match setup.runner.record(Reaction::key(press.key, rt_ms)) {
                    Ok(rec) => {
                        let ack = ResponseAck {
                            trial,
                            response: rec.response.to_string(),
                            rt_ms: rec.rt_ms,
                        };
                        return conn.send(ServerMessage::Response(ack)).await;
                    }
                    Err(e) => conn.send_error(e.to_string(), false).await?,
                }
            }
            Event::Message(ClientMessage::Pose(p), _) => match p.to_head_pose() {
                Ok(hp) => *pose = hp,
                Err(e) => conn.send_error(e.to_string(), false).await?,
            },
            Event::Message(ClientMessage::Hello(_), _) => {
                conn.send_error("a block is already running", false).await?;
            }
        }
    }
}

/// Pause between trials. Keys that arrive now are late duplicates and ignored.
async fn inter_trial(conn: &mut Conn, pause: Duration, pose: &mut HeadPose) -> Result<(), End> {
    let until = Instant::now() + pause;
    loop {
        match conn.next_event(Some(until)).await {
            Event::Deadline => return Ok(()),
            Event::Closed => return Err(End::Closed),
            Event::Message(ClientMessage::Pose(p), _) => {
                if let Ok(hp) = p.to_head_pose() {
                    *pose = hp;
                }
            }
            Event::Message(ClientMessage::Response(_), _) => tracing::debug!("key between trials ignored"),
            Event::Message(ClientMessage::Hello(_), _) => {
                conn.send_error("a block is already running", false).await?;
            }
        }
    }
}
