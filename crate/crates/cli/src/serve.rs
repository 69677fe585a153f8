use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Args;
use spv_core::session::{DEFAULT_SRC_PX_PER_DEG, DEFAULT_TRIALS};
use spv_service::ServiceConfig;

use crate::CliError;

#[derive(Args, Clone, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Directory served at `/` (the web UI build).
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Where finished blocks are written.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub fps: u32,
    /// Trials per block when a client's hello gives none.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Base seed for blocks whose hello gives none (default: clock-derived).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SRC_PX_PER_DEG)]
    pub src_px_per_deg: f64,
}

impl ServeArgs {
    pub fn service_config(&self) -> Result<ServiceConfig, CliError> {
        let cfg = ServiceConfig {
            default_trials: self.trials,
            src_px_per_deg: self.src_px_per_deg,
            fps: self.fps,
            seed: self.seed,
            out_dir: self.out.clone(),
            static_dir: self.static_dir.clone(),
            ..ServiceConfig::default()
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let cfg = args.service_config()?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(format!("tokio runtime: {e}")))?;
    rt.block_on(spv_service::serve(args.bind, cfg))
        .map_err(|e| CliError::Runtime(e.to_string()))
}
