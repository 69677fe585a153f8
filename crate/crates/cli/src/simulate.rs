use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use spv_core::session::{records_to_csv, run_block, BlockConfig, SessionSummary, TrialRecord};
use spv_core::{Condition, IdealObserver, ObserverConfig, TestFamily};

use crate::config::{RunArgs, RunConfig};
use crate::io::write_atomic;
use crate::CliError;

/// Order in which a subject works through the condition × test blocks.
/// Every block's seed depends only on (seed, subject, test, condition), so
/// the order changes the log layout, never a block's trials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionOrder {
    /// Conditions in the order given, each running every test.
    #[default]
    Given,
    /// A seeded shuffle of the condition order per subject.
    Shuffled,
}

#[derive(Args, Clone, Debug, Default)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value_t)]
    pub order: ConditionOrder,
}

#[derive(Clone, Debug)]
pub struct SimulateOutput {
    pub out_dir: PathBuf,
    pub records: Vec<TrialRecord>,
    pub summary: SessionSummary,
    pub block_files: Vec<PathBuf>,
}

#[derive(Clone, Debug)]
struct Job {
    subject: usize,
    condition: Condition,
    test: TestFamily,
}

pub fn session_id(subject: usize) -> String {
    format!("sim{:02}", subject + 1)
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

/// Seed of one block, independent of sweep composition and order.
pub fn block_seed(seed: u64, subject: usize, test: TestFamily, condition: &Condition) -> u64 {
    let key = format!("{}/{}/{}", subject, test.as_str(), condition.display_label());
    mix(mix(seed) ^ fnv1a(key.as_bytes()))
}

fn jobs(cfg: &RunConfig, order: ConditionOrder) -> Vec<Job> {
    let mut jobs = Vec::new();
    for subject in 0..cfg.subjects {
        let mut conditions = cfg.conditions.clone();
        if order == ConditionOrder::Shuffled {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed ^ mix(subject as u64 + 1)));
            conditions.shuffle(&mut rng);
        }
        for condition in conditions {
            for &test in &cfg.tests {
                jobs.push(Job {
                    subject,
                    condition: condition.clone(),
                    test,
                });
            }
        }
    }
    jobs
}

pub fn block_file_name(records: &[TrialRecord]) -> String {
    let r = &records[0];
    let raw = format!("{}_{}_{}.csv", r.session_id, r.test.as_str(), r.condition);
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

#[derive(Serialize)]
struct RunManifest<'a> {
    version: &'a str,
    conditions: Vec<String>,
    tests: &'a [TestFamily],
    trials_per_block: usize,
    seed: u64,
    src_px_per_deg: f64,
    subjects: usize,
    order: ConditionOrder,
    blocks: usize,
}

/// Runs the sweep against the ideal observer. Blocks run in parallel;
/// outputs are collected in job order and written atomically:
/// `blocks/<session>_<test>_<condition>.csv`, `trials.csv`, `summary.json`
/// and `run.json`.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateOutput, CliError> {
    let cfg = RunConfig::resolve(&args.run)?;
    simulate(&cfg, args.order)
}

pub fn simulate(cfg: &RunConfig, order: ConditionOrder) -> Result<SimulateOutput, CliError> {
    cfg.validate()?;
    let jobs = jobs(cfg, order);
    let blocks = jobs
        .par_iter()
        .map(|job| {
            let seed = block_seed(cfg.seed, job.subject, job.test, &job.condition);
            let block = BlockConfig::new(session_id(job.subject), job.test, job.condition.clone(), seed)?
                .with_trials(cfg.trials_per_block)
                .with_src_px_per_deg(cfg.src_px_per_deg)?;
            let mut observer = IdealObserver::new(
                &job.condition,
                ObserverConfig {
                    seed: mix(seed),
                    ..ObserverConfig::default()
                },
            )?;
            let block = run_block(block, &mut observer)?;
            let report = block.report()?;
            Ok((block.records, report))
        })
        .collect::<Result<Vec<_>, spv_core::Error>>()?;

    let blocks_dir = cfg.out_dir.join("blocks");
    let mut block_files = Vec::with_capacity(blocks.len());
    let mut records = Vec::new();
    let mut summary = SessionSummary::default();
    for (block_records, report) in blocks {
        let path = blocks_dir.join(block_file_name(&block_records));
        write_atomic(&path, records_to_csv(&block_records)?.as_bytes())?;
        block_files.push(path);
        records.extend(block_records);
        summary.blocks.push(report);
    }
    write_atomic(&cfg.out_dir.join("trials.csv"), records_to_csv(&records)?.as_bytes())?;
    write_atomic(&cfg.out_dir.join("summary.json"), summary.to_json()?.as_bytes())?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        conditions: cfg.conditions.iter().map(|c| c.display_label()).collect(),
        tests: &cfg.tests,
        trials_per_block: cfg.trials_per_block,
        seed: cfg.seed,
        src_px_per_deg: cfg.src_px_per_deg,
        subjects: cfg.subjects,
        order,
        blocks: summary.blocks.len(),
    };
    let manifest = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))? + "\n";
    write_atomic(&cfg.out_dir.join("run.json"), manifest.as_bytes())?;

    Ok(SimulateOutput {
        out_dir: cfg.out_dir.clone(),
        records,
        summary,
        block_files,
    })
}
