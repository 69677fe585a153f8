//! Live session server. A browser connects to `/ws`, sends `hello` to start a
//! block, and receives phosphenized frames at a fixed cadence; key presses and
//! head-pose updates flow back. Timing is measured on the server only.

pub mod frames;
pub mod protocol;
mod session;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::ws::WebSocketUpgrade;
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use spv_core::session::{records_to_csv, DEFAULT_SRC_PX_PER_DEG, DEFAULT_TRIALS, INTER_TRIAL_INTERVAL_MS};
use spv_core::stimuli::Timing;
use spv_core::Block;
use tower_http::services::ServeDir;

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub default_trials: usize,
    pub src_px_per_deg: f64,
    pub default_frame_px: usize,
    pub max_frame_px: usize,
    pub fps: u32,
    pub heartbeat: Duration,
    pub inter_trial: Duration,
    pub timing: Timing,
    /// Black border around the stimulus scene, as a fraction of the field of
    /// view, so head panning can look away from it.
    pub pan_margin_fraction: f64,
    /// Base seed for blocks whose `hello` carries none; clock-derived if unset.
    pub seed: Option<u64>,
    /// Finished (and aborted) blocks are written here as CSV + JSON.
    pub out_dir: Option<PathBuf>,
    /// Static files (the web UI) served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            default_trials: DEFAULT_TRIALS,
            src_px_per_deg: DEFAULT_SRC_PX_PER_DEG,
            default_frame_px: 512,
            max_frame_px: 2048,
            fps: 30,
            heartbeat: Duration::from_secs(5),
            inter_trial: Duration::from_millis(INTER_TRIAL_INTERVAL_MS),
            timing: Timing::default(),
            pan_margin_fraction: 1.0,
            seed: None,
            out_dir: None,
            static_dir: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid service configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ServiceError> {
        let bad = |m: &str| Err(ServiceError::Config(m.into()));
        if self.fps == 0 || self.fps > 240 {
            return bad("fps must be in 1..=240");
        }
        if self.default_trials == 0 {
            return bad("default_trials must be positive");
        }
        if !(self.src_px_per_deg.is_finite() && self.src_px_per_deg > 0.0) {
            return bad("src_px_per_deg must be positive");
        }
        if !(16..=self.max_frame_px).contains(&self.default_frame_px) {
            return bad("default_frame_px must be between 16 and max_frame_px");
        }
        if self.heartbeat.is_zero() {
            return bad("heartbeat must be positive");
        }
        if !(self.pan_margin_fraction.is_finite() && self.pan_margin_fraction >= 0.0) {
            return bad("pan_margin_fraction must be non-negative");
        }
        if let Some(dir) = &self.static_dir {
            if !dir.is_dir() {
                return Err(ServiceError::Config(format!("static dir {} does not exist", dir.display())));
            }
        }
        Ok(())
    }
}

struct Inner {
    config: ServiceConfig,
    blocks: Mutex<Vec<Block>>,
    counter: AtomicU64,
    clock_seed: u64,
}

/// Shared server state; cheap to clone.
#[derive(Clone)]
pub struct Service {
    inner: Arc<Inner>,
}

impl Service {
    pub fn new(config: ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        if let Some(dir) = &config.out_dir {
            std::fs::create_dir_all(dir)?;
        }
        let clock_seed = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
        Ok(Service {
            inner: Arc::new(Inner {
                config,
                blocks: Mutex::new(Vec::new()),
                counter: AtomicU64::new(0),
                clock_seed,
            }),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    /// `/ws` for sessions, `/health` for probes, static files otherwise.
    pub fn router(&self) -> Router {
        let router = Router::new()
            .route("/ws", get(ws_handler))
            .route("/health", get(|| async { "ok" }))
            .with_state(self.clone());
        match &self.config().static_dir {
            Some(dir) => router.fallback_service(ServeDir::new(dir)),
            None => router,
        }
    }

    /// Blocks finished or aborted since start-up, in completion order.
    pub fn completed_blocks(&self) -> Vec<Block> {
        self.inner.blocks.lock().expect("block list poisoned").clone()
    }

    pub async fn serve(self, listener: tokio::net::TcpListener) -> std::io::Result<()> {
        axum::serve(listener, self.router()).await
    }

    fn next_block_number(&self) -> u64 {
        self.inner.counter.fetch_add(1, Ordering::Relaxed) + 1
    }

    fn block_seed(&self, number: u64) -> u64 {
        let base = self.config().seed.unwrap_or(self.inner.clock_seed);
        base.wrapping_add(number.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn record_block(&self, block: &Block, training: bool) -> Result<(), String> {
        self.inner.blocks.lock().expect("block list poisoned").push(block.clone());
        match &self.config().out_dir {
            Some(dir) => persist_block(dir, block, training).map_err(|e| format!("writing block log: {e}")),
            None => Ok(()),
        }
    }
}

/// Binds `addr` and serves until the process stops.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> Result<(), ServiceError> {
    let service = Service::new(config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    service.serve(listener).await?;
    Ok(())
}

async fn ws_handler(ws: WebSocketUpgrade, State(service): State<Service>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| session::run_connection(socket, service))
}

/// File stem for a block's logs: `<session>_<test>_<condition>`, with anything
/// outside `[A-Za-z0-9.-]` replaced.
pub fn block_file_stem(block: &Block, training: bool) -> String {
    let raw = format!(
        "{}{}_{}_{}",
        if training { "training_" } else { "" },
        block.session_id,
        block.test,
        block.condition
    );
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

fn persist_block(dir: &Path, block: &Block, training: bool) -> Result<(), Box<dyn std::error::Error>> {
    let stem = block_file_stem(block, training);
    write_atomic(&dir.join(format!("{stem}.csv")), records_to_csv(&block.records)?.as_bytes())?;
    let report = serde_json::to_string_pretty(&block.report()?)?;
    write_atomic(&dir.join(format!("{stem}.json")), report.as_bytes())?;
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
