//! Per-trial frame production: stimulus scene at time `t`, padded so head
//! panning has room to move, then phosphenized (or passed through in training).

use spv_core::pipeline::crop_viewport;
use spv_core::stimuli::{stimulus_frame, StimulusParams};
use spv_core::{Frame, HeadPose, Pipeline, Result, Stimulus};

/// Renders one trial's frames and reuses the last one while nothing visible changed.
pub struct TrialFrames<'a> {
    pipeline: &'a Pipeline,
    stimulus: &'a Stimulus,
    frame_px: usize,
    margin_deg: f64,
    training: bool,
    cached: Option<(CacheKey, Vec<u8>)>,
}

#[derive(Clone, Copy, PartialEq)]
struct CacheKey {
    frame_index: usize,
    /// Only motion frames depend on time within a frame index.
    t_ms: Option<u64>,
    yaw: f64,
    pitch: f64,
}

impl<'a> TrialFrames<'a> {
    pub fn new(pipeline: &'a Pipeline, stimulus: &'a Stimulus, frame_px: usize, margin_deg: f64, training: bool) -> Self {
        TrialFrames {
            pipeline,
            stimulus,
            frame_px,
            margin_deg,
            training,
            cached: None,
        }
    }

    /// 8-bit pixels of the `frame_px`-square view at trial time `t_ms`.
    pub fn pixels(&mut self, t_ms: u64, pose: HeadPose) -> Result<&[u8]> {
        let timeline = &self.stimulus.timeline;
        let moving = matches!(self.stimulus.spec.params, StimulusParams::MotionPerception { .. }) && t_ms > timeline.onset_ms();
        let key = CacheKey {
            frame_index: timeline.frame_index_at(t_ms),
            t_ms: moving.then_some(t_ms),
            yaw: pose.yaw_deg,
            pitch: pose.pitch_deg,
        };
        if self.cached.as_ref().map(|(k, _)| *k) != Some(key) {
            let scene = stimulus_frame(&self.stimulus.spec, timeline, t_ms)?;
            let world = pad(&scene, self.margin_deg)?;
            let bytes = if self.training {
                let view = crop_viewport(&world, pose, self.pipeline.condition().fov_deg)?;
                resize_nearest(&view.frame, self.frame_px).to_u8()
            } else {
                self.pipeline.run(&world, pose)?.frame.to_u8()
            };
            self.cached = Some((key, bytes));
        }
        Ok(&self.cached.as_ref().expect("filled above").1)
    }
}

/// Centers `frame` on a black canvas `margin_deg` larger on every side.
pub fn pad(frame: &Frame, margin_deg: f64) -> Result<Frame> {
    let m = (margin_deg * frame.px_per_deg()).round().max(0.0) as usize;
    if m == 0 {
        return Ok(frame.clone());
    }
    let (w, h) = (frame.width(), frame.height());
    let (pw, ph) = (w + 2 * m, h + 2 * m);
    let mut data = vec![0.0; pw * ph];
    for row in 0..h {
        data[(row + m) * pw + m..(row + m) * pw + m + w].copy_from_slice(&frame.data()[row * w..(row + 1) * w]);
    }
    Frame::new(pw, ph, frame.px_per_deg(), data)
}

/// Pixel-replicating resize to a `side`-square frame.
pub fn resize_nearest(frame: &Frame, side: usize) -> Frame {
    let (w, h) = (frame.width(), frame.height());
    let data = (0..side * side)
        .map(|i| frame.get((i / side) * h / side, (i % side) * w / side))
        .collect();
    Frame::new(side, side, side as f64 / frame.width_deg(), data).expect("dimensions are positive")
}
