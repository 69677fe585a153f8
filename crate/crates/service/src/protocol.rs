//! Wire format. Every message is a JSON envelope
//! `{"type": ..., "seq": n, "t_server_ms": t, "payload": {...}}`; see
//! `PROTOCOL.md` at the crate root for the full schema.

use base64::Engine;
use serde::{Deserialize, Serialize};
use spv_core::stimuli::Timing;
use spv_core::{BlockReport, Condition, HeadPose, Key, TestFamily};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<M> {
    #[serde(flatten)]
    pub message: M,
    pub seq: u64,
    /// Milliseconds since the connection opened, stamped by the server.
    /// Clients may omit it; the server never reads client clocks.
    #[serde(default)]
    pub t_server_ms: u64,
}

/// Client → server.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello(Hello),
    Response(KeyPress),
    Pose(Pose),
}

/// Server → client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum ServerMessage {
    Config(SessionConfig),
    Tone(Tone),
    Frame(FramePayload),
    Response(ResponseAck),
    BlockDone(BlockDone),
    Error(ErrorPayload),
}

/// A standard label (`"C4"`) or an explicit condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConditionRequest {
    Label(String),
    Custom { phosphene_count: usize, fov_deg: f64 },
}

impl ConditionRequest {
    pub fn resolve(&self) -> spv_core::Result<Condition> {
        match self {
            ConditionRequest::Label(l) => Condition::standard(l),
            ConditionRequest::Custom {
                phosphene_count,
                fov_deg,
            } => Condition::new(*phosphene_count, *fov_deg),
        }
    }
}

/// Starts a block. Missing fields take the server defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    #[serde(default)]
    pub session_id: Option<String>,
    pub condition: ConditionRequest,
    pub test: TestFamily,
    #[serde(default)]
    pub n_trials: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Side of the square frames the client wants, in pixels.
    #[serde(default)]
    pub frame_px: Option<usize>,
    /// Training blocks stream the stimulus without phosphenization.
    #[serde(default)]
    pub training: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPress {
    pub key: Key,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
}

impl Pose {
    pub fn to_head_pose(self) -> spv_core::Result<HeadPose> {
        HeadPose::new(self.yaw_deg, self.pitch_deg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub session_id: String,
    pub condition: Condition,
    pub condition_label: String,
    pub test: TestFamily,
    pub n_trials: usize,
    pub frame_width: usize,
    pub frame_height: usize,
    pub level_count: u16,
    pub fps: u32,
    /// Monocular presentation: always `"right"`.
    pub eye: String,
    pub training: bool,
    pub timing: Timing,
    pub inter_trial_ms: u64,
    pub heartbeat_ms: u64,
    /// Keys that count as answers in this test.
    pub answer_keys: Vec<Key>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tone {
    pub trial: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Before imperative onset; keys are ignored.
    Fixation,
    /// Onset reached; the first key is the response.
    Stimulus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePayload {
    pub trial: usize,
    pub phase: Phase,
    pub width: usize,
    pub height: usize,
    /// Base64 of `width * height` 8-bit grayscale pixels, row-major, top row first.
    pub data: String,
}

impl FramePayload {
    pub fn new(trial: usize, phase: Phase, width: usize, height: usize, pixels: &[u8]) -> Self {
        FramePayload {
            trial,
            phase,
            width,
            height,
            data: base64::engine::general_purpose::STANDARD.encode(pixels),
        }
    }

    pub fn pixels(&self) -> Result<Vec<u8>, base64::DecodeError> {
        base64::engine::general_purpose::STANDARD.decode(&self.data)
    }
}

/// Sent once per trial when it is scored: the accepted key, or `"timeout"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseAck {
    pub trial: usize,
    pub response: String,
    pub rt_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDone {
    pub report: BlockReport,
    /// The block's trial log in the standard CSV format.
    pub trials_csv: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub message: String,
    /// The connection is closed after a fatal error.
    pub fatal: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::{json, Value};

    #[test]
    fn envelope_layout() {
        let msg = Envelope {
            message: ServerMessage::Tone(Tone { trial: 3 }),
            seq: 7,
            t_server_ms: 1234,
        };
        let v: Value = serde_json::to_value(&msg).unwrap();
        assert_eq!(v, json!({"type": "tone", "seq": 7, "t_server_ms": 1234, "payload": {"trial": 3}}));
        let back: Envelope<ServerMessage> = serde_json::from_value(v).unwrap();
        assert_eq!(back, msg);
    }

    #[test]
    fn hello_accepts_labels_and_custom_conditions() {
        let text = r#"{"type":"hello","seq":1,"payload":{"condition":"C4","test":"landolt"}}"#;
        let env: Envelope<ClientMessage> = serde_json::from_str(text).unwrap();
        assert_eq!(env.t_server_ms, 0);
        let ClientMessage::Hello(h) = env.message else { panic!() };
        assert_eq!(h.condition.resolve().unwrap().phosphene_count, 1000);
        assert!(!h.training);

        let text = r#"{"type":"hello","seq":1,"payload":{"condition":{"phosphene_count":400,"fov_deg":15},"test":"motion","n_trials":5}}"#;
        let env: Envelope<ClientMessage> = serde_json::from_str(text).unwrap();
        let ClientMessage::Hello(h) = env.message else { panic!() };
        assert_eq!(h.condition.resolve().unwrap().fov_deg, 15.0);
        assert_eq!(h.n_trials, Some(5));
    }

    #[test]
    fn response_and_pose_parse() {
        let env: Envelope<ClientMessage> =
            serde_json::from_str(r#"{"type":"response","seq":4,"payload":{"key":"up"}}"#).unwrap();
        assert_eq!(env.message, ClientMessage::Response(KeyPress { key: Key::Up }));
        let env: Envelope<ClientMessage> =
            serde_json::from_str(r#"{"type":"pose","seq":5,"payload":{"yaw_deg":-3.5,"pitch_deg":1}}"#).unwrap();
        assert_eq!(
            env.message,
            ClientMessage::Pose(Pose {
                yaw_deg: -3.5,
                pitch_deg: 1.0
            })
        );
    }

    #[test]
    fn unknown_types_are_rejected() {
        assert!(serde_json::from_str::<Envelope<ClientMessage>>(r#"{"type":"frame","seq":1,"payload":{}}"#).is_err());
        assert!(serde_json::from_str::<Envelope<ClientMessage>>(r#"{"type":"response","payload":{"key":"up"}}"#).is_err());
    }

    #[test]
    fn frame_pixels_round_trip() {
        let px: Vec<u8> = (0..=255).collect();
        let f = FramePayload::new(0, Phase::Stimulus, 16, 16, &px);
        assert_eq!(f.pixels().unwrap(), px);
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["phase"], "stimulus");
    }
}
