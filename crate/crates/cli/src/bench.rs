use std::fmt;
use std::time::Instant;

use clap::Args;
use spv_core::{Condition, Frame, HeadPose, Pipeline};

use crate::CliError;

#[derive(Args, Clone, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1000)]
    pub phosphenes: usize,
    #[arg(long, default_value_t = 20.0)]
    pub fov: f64,
    /// Output side in pixels.
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    #[arg(long, default_value_t = 300)]
    pub frames: usize,
    #[arg(long, default_value_t = 3.0)]
    pub src_px_per_deg: f64,
}

impl Default for BenchArgs {
    fn default() -> Self {
        BenchArgs {
            phosphenes: 1000,
            fov: 20.0,
            size: 512,
            frames: 300,
            src_px_per_deg: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub condition: Condition,
    pub side_px: usize,
    pub frames: usize,
    pub seconds: f64,
}

impl BenchResult {
    pub fn fps(&self) -> f64 {
        self.frames as f64 / self.seconds
    }

    pub fn ms_per_frame(&self) -> f64 {
        1000.0 * self.seconds / self.frames as f64
    }
}

impl fmt::Display for BenchResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} phosphenes, {} deg, {}x{}: {} frames in {:.3} s = {:.1} frames/s ({:.2} ms/frame, single thread)",
            self.condition.phosphene_count,
            self.condition.fov_deg,
            self.side_px,
            self.side_px,
            self.frames,
            self.seconds,
            self.fps(),
            self.ms_per_frame()
        )
    }
}

/// Full pipeline (crop, sample, quantize, render) on the calling thread over
/// a textured scene while the head pans, as during a live session.
pub fn cmd_bench(args: &BenchArgs) -> Result<BenchResult, CliError> {
    if args.frames == 0 || args.size == 0 {
        return Err(CliError::Usage("--frames and --size must be positive".into()));
    }
    let condition = Condition::new(args.phosphenes, args.fov).map_err(|e| CliError::Usage(e.to_string()))?;
    let pipeline = Pipeline::with_output_size(&condition, args.size)?;
    let extent = 2.0 * args.fov;
    let side = (extent * args.src_px_per_deg).round() as usize;
    let scene = Frame::from_fn(side, side, args.src_px_per_deg, |x, y| {
        0.5 + 0.25 * (0.7 * x).sin() * (0.45 * y).cos() + 0.2 * (0.13 * (x * x + y * y)).sin()
    })?;
    let pose = |i: usize| {
        let phase = i as f64 / args.frames as f64 * std::f64::consts::TAU;
        HeadPose::new(0.25 * args.fov * phase.cos(), 0.25 * args.fov * phase.sin())
    };
    // warm-up
    std::hint::black_box(pipeline.run(&scene, pose(0)?)?);
    let start = Instant::now();
    for i in 0..args.frames {
        std::hint::black_box(pipeline.run(&scene, pose(i)?)?);
    }
    Ok(BenchResult {
        condition,
        side_px: args.size,
        frames: args.frames,
        seconds: start.elapsed().as_secs_f64(),
    })
}
