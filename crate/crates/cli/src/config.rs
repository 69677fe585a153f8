//! Sweep configuration: TOML file keys mirror the command-line flags, and
//! flags win over the file.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use spv_core::session::{DEFAULT_SRC_PX_PER_DEG, DEFAULT_TRIALS};
use spv_core::{Condition, TestFamily};

use crate::CliError;

/// Flags shared by `simulate` and `serve`.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct RunArgs {
    /// Standard conditions to run, e.g. `C1,C4` (default: all six).
    #[arg(long, value_delimiter = ',')]
    pub conditions: Option<Vec<String>>,
    /// Field of view of an extra ad-hoc condition; needs `--phosphenes`.
    #[arg(long)]
    pub fov: Option<f64>,
    /// Phosphene count of an extra ad-hoc condition; needs `--fov`.
    #[arg(long)]
    pub phosphenes: Option<usize>,
    /// Tests to run: light,time,location,motion,landolt (default: all).
    #[arg(long, value_delimiter = ',')]
    pub tests: Option<Vec<String>>,
    /// Trials per block.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Source-image calibration in pixels per degree.
    #[arg(long)]
    pub src_px_per_deg: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Simulated subjects; each runs every test under every condition.
    #[arg(long)]
    pub subjects: Option<usize>,
    /// TOML file with the same keys as these flags (`src_px_per_deg`, ...).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub conditions: Option<Vec<String>>,
    pub fov: Option<f64>,
    pub phosphenes: Option<usize>,
    pub tests: Option<Vec<String>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub src_px_per_deg: Option<f64>,
    pub out: Option<PathBuf>,
    pub subjects: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_OUT_DIR: &str = "spv-out";

/// A fully resolved sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub conditions: Vec<Condition>,
    pub tests: Vec<TestFamily>,
    pub trials_per_block: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub src_px_per_deg: f64,
    pub subjects: usize,
}

impl RunConfig {
    /// Layers defaults, then the config file, then flags.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let conditions = args.conditions.clone().or(file.conditions);
        let (fov, phosphenes) = match (args.fov, args.phosphenes) {
            (None, None) => (file.fov, file.phosphenes),
            pair => pair,
        };
        let mut resolved = Vec::new();
        if let Some(labels) = &conditions {
            for l in labels {
                resolved.push(Condition::standard(l.trim()).map_err(|e| CliError::Usage(e.to_string()))?);
            }
        }
        match (fov, phosphenes) {
            (Some(f), Some(n)) => {
                let c = Condition::new(n, f).map_err(|e| CliError::Usage(e.to_string()))?;
                if !resolved.iter().any(|r| r.phosphene_count == c.phosphene_count && r.fov_deg == c.fov_deg) {
                    resolved.push(c);
                }
            }
            (None, None) => {}
            _ => return Err(CliError::Usage("--fov and --phosphenes must be given together".into())),
        }
        if conditions.is_none() && resolved.is_empty() {
            resolved = Condition::all_standard();
        }
        if resolved.is_empty() {
            return Err(CliError::Usage("no conditions selected".into()));
        }

        let tests = match args.tests.clone().or(file.tests) {
            Some(names) => names
                .iter()
                .filter(|n| !n.trim().is_empty())
                .map(|n| n.parse::<TestFamily>().map_err(|e| CliError::Usage(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?,
            None => TestFamily::ALL.to_vec(),
        };
        if tests.is_empty() {
            return Err(CliError::Usage("no tests selected".into()));
        }
        let mut unique = Vec::new();
        for t in tests {
            if !unique.contains(&t) {
                unique.push(t);
            }
        }

        let cfg = RunConfig {
            conditions: resolved,
            tests: unique,
            trials_per_block: args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            out_dir: args.out.clone().or(file.out).unwrap_or_else(|| DEFAULT_OUT_DIR.into()),
            src_px_per_deg: args.src_px_per_deg.or(file.src_px_per_deg).unwrap_or(DEFAULT_SRC_PX_PER_DEG),
            subjects: args.subjects.or(file.subjects).unwrap_or(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.conditions.is_empty() || self.tests.is_empty() {
            return Err(CliError::Usage("at least one condition and one test are required".into()));
        }
        if self.trials_per_block == 0 {
            return Err(CliError::Usage("--trials must be positive".into()));
        }
        if self.subjects == 0 {
            return Err(CliError::Usage("--subjects must be positive".into()));
        }
        if !(self.src_px_per_deg.is_finite() && self.src_px_per_deg > 0.0) {
            return Err(CliError::Usage("--src-px-per-deg must be positive".into()));
        }
        Ok(())
    }
}
