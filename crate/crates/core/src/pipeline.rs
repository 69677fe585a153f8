//! Head-pose viewport cropping and the full crop → sample → quantize → render pipeline.

use crate::condition::{Condition, HeadPose};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::map::{build_phosphene_map_with, PhospheneMap, DEFAULT_SIGMA_FRACTION};
use crate::render::{quantize, render, sample, PhospheneActivation, RenderParams, DEFAULT_LEVEL_COUNT};

/// A cropped view and whether the requested pose had to be clamped to the source edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Viewport {
    pub frame: Frame,
    pub clamped: bool,
}

/// Square sub-frame of angular size `fov_deg` centered at the pose.
pub fn crop_viewport(source: &Frame, pose: HeadPose, fov_deg: f64) -> Result<Viewport> {
    if !(fov_deg.is_finite() && fov_deg > 0.0) {
        return Err(Error::InvalidParameter(format!("fov_deg must be positive, got {fov_deg}")));
    }
    if !(pose.yaw_deg.is_finite() && pose.pitch_deg.is_finite()) {
        return Err(Error::InvalidParameter("head pose must be finite".into()));
    }
    let ppd = source.px_per_deg();
    let side = (fov_deg * ppd).round().max(1.0) as usize;
    let (w, h) = (source.width(), source.height());
    if side > w || side > h {
        return Err(Error::ViewportTooLarge {
            fov_deg,
            extent_deg: source.width_deg().min(source.height_deg()),
        });
    }
    let want_x = (w as f64 / 2.0 + pose.yaw_deg * ppd - side as f64 / 2.0).round();
    let want_y = (h as f64 / 2.0 - pose.pitch_deg * ppd - side as f64 / 2.0).round();
    let max_x = (w - side) as f64;
    let max_y = (h - side) as f64;
    let x0 = want_x.clamp(0.0, max_x);
    let y0 = want_y.clamp(0.0, max_y);
    let clamped = x0 != want_x || y0 != want_y;
    let (x0, y0) = (x0 as usize, y0 as usize);

    let src = source.data();
    let mut data = Vec::with_capacity(side * side);
    for row in y0..y0 + side {
        data.extend_from_slice(&src[row * w + x0..row * w + x0 + side]);
    }
    Ok(Viewport {
        frame: Frame::from_raw_unchecked(side, side, ppd, data),
        clamped,
    })
}

/// Pipeline constants shared by every frame of a condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineParams {
    pub level_count: u16,
    pub sigma_fraction: f64,
    pub render: RenderParams,
}

impl PipelineParams {
    pub fn new(out_px_per_deg: f64) -> Self {
        PipelineParams {
            level_count: DEFAULT_LEVEL_COUNT,
            sigma_fraction: DEFAULT_SIGMA_FRACTION,
            render: RenderParams::new(out_px_per_deg),
        }
    }
}

/// One phosphenized view.
#[derive(Clone, Debug, PartialEq)]
pub struct Percept {
    pub frame: Frame,
    pub activation: PhospheneActivation,
    pub clamped: bool,
}

/// A condition's phosphene map built once and reused across frames.
#[derive(Clone, Debug)]
pub struct Pipeline {
    map: PhospheneMap,
    params: PipelineParams,
}

impl Pipeline {
    pub fn new(condition: &Condition, params: PipelineParams) -> Result<Self> {
        let map = build_phosphene_map_with(condition, params.sigma_fraction)?;
        Ok(Pipeline { map, params })
    }

    /// Pipeline whose output is `side_px` square.
    pub fn with_output_size(condition: &Condition, side_px: usize) -> Result<Self> {
        Pipeline::new(condition, PipelineParams::new(side_px as f64 / condition.fov_deg))
    }

    pub fn map(&self) -> &PhospheneMap {
        &self.map
    }

    pub fn params(&self) -> &PipelineParams {
        &self.params
    }

    pub fn condition(&self) -> &Condition {
        &self.map.condition
    }

    pub fn run(&self, source: &Frame, pose: HeadPose) -> Result<Percept> {
        let view = crop_viewport(source, pose, self.map.fov_deg())?;
        let samples = sample(&view.frame, &self.map)?;
        let activation = quantize(&samples, self.params.level_count)?;
        let frame = render(&self.map, &activation, &self.params.render)?;
        Ok(Percept {
            frame,
            activation,
            clamped: view.clamped,
        })
    }
}

/// Convenience form of [`Pipeline::run`] with default constants.
pub fn phosphenize(source: &Frame, pose: HeadPose, condition: &Condition, out_px_per_deg: f64) -> Result<Frame> {
    Pipeline::new(condition, PipelineParams::new(out_px_per_deg))?
        .run(source, pose)
        .map(|p| p.frame)
}
