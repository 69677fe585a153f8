//! Frame → phosphene intensities → quantized levels → Gaussian percept.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::map::PhospheneMap;

/// Default number of brightness levels per phosphene.
pub const DEFAULT_LEVEL_COUNT: u16 = 8;

/// Quantized per-phosphene brightness, one entry per phosphene in map order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhospheneActivation {
    pub levels: Vec<u16>,
    pub level_count: u16,
}

impl PhospheneActivation {
    pub fn new(levels: Vec<u16>, level_count: u16) -> Result<Self> {
        if level_count < 2 {
            return Err(Error::InvalidParameter(format!("level_count must be >= 2, got {level_count}")));
        }
        if let Some(bad) = levels.iter().find(|&&l| l >= level_count) {
            return Err(Error::InvalidParameter(format!("level {bad} >= level_count {level_count}")));
        }
        Ok(PhospheneActivation { levels, level_count })
    }

    pub fn uniform(len: usize, level: u16, level_count: u16) -> Result<Self> {
        PhospheneActivation::new(vec![level; len], level_count)
    }

    /// `level / (level_count - 1)`.
    pub fn amplitude(&self, index: usize) -> f64 {
        self.levels[index] as f64 / (self.level_count - 1) as f64
    }
}

/// Mean source intensity inside each phosphene's square window.
///
/// A pixel belongs to a window when its center lies in `[c - w/2, c + w/2)` on
/// both axes. A window narrower than a pixel that catches no pixel center takes
/// the pixel under the phosphene center.
pub fn sample(source: &Frame, map: &PhospheneMap) -> Result<Vec<f64>> {
    let ppd = source.px_per_deg();
    let need_x = map.grid_cols as f64 * map.spacing_deg;
    let need_y = map.grid_rows as f64 * map.spacing_deg;
    let slack = 1.0 / ppd + 1e-9;
    if source.width_deg() + slack < need_x || source.height_deg() + slack < need_y {
        return Err(Error::FovMismatch {
            frame_deg: source.width_deg().min(source.height_deg()),
            map_deg: need_x.max(need_y),
        });
    }

    let (w, h) = (source.width() as f64, source.height() as f64);
    let data = source.data();
    let width = source.width();
    let mut out = Vec::with_capacity(map.len());
    for p in &map.phosphenes {
        let (cx, cy) = p.center_deg;
        let half = p.window_deg / 2.0;
        // col j is in when (cx - half)*ppd <= j + 0.5 - w/2 < (cx + half)*ppd
        let col_lo = ceil_idx((cx - half) * ppd + w / 2.0 - 0.5, source.width());
        let col_hi = ceil_idx((cx + half) * ppd + w / 2.0 - 0.5, source.width());
        // row i is in when (cy - half)*ppd <= h/2 - i - 0.5 < (cy + half)*ppd
        let row_lo = floor_excl_idx(h / 2.0 - 0.5 - (cy + half) * ppd, source.height());
        let row_hi = floor_excl_idx(h / 2.0 - 0.5 - (cy - half) * ppd, source.height());

        if col_lo < col_hi && row_lo < row_hi {
            let mut sum = 0.0;
            for row in row_lo..row_hi {
                let base = row * width;
                sum += data[base + col_lo..base + col_hi].iter().sum::<f64>();
            }
            out.push(sum / ((col_hi - col_lo) * (row_hi - row_lo)) as f64);
        } else {
            let col = ((cx * ppd + w / 2.0).floor().max(0.0) as usize).min(source.width() - 1);
            let row = ((h / 2.0 - cy * ppd).floor().max(0.0) as usize).min(source.height() - 1);
            out.push(source.get(row, col));
        }
    }
    Ok(out)
}

/// Smallest index `j` with `j >= t`, clamped to `[0, n]`.
fn ceil_idx(t: f64, n: usize) -> usize {
    let v = t.ceil();
    if v <= 0.0 {
        0
    } else {
        (v as usize).min(n)
    }
}

/// Smallest index `i` with `i > t`, clamped to `[0, n]`.
fn floor_excl_idx(t: f64, n: usize) -> usize {
    let v = t.floor() + 1.0;
    if v <= 0.0 {
        0
    } else {
        (v as usize).min(n)
    }
}

/// Uniform-bin quantizer: `level = min(floor(sample * L), L - 1)`.
pub fn quantize(samples: &[f64], level_count: u16) -> Result<PhospheneActivation> {
    if level_count < 2 {
        return Err(Error::InvalidParameter(format!("level_count must be >= 2, got {level_count}")));
    }
    let l = level_count as f64;
    let levels = samples
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::SampleOutOfRange { index, value });
            }
            Ok(((value * l).floor() as u16).min(level_count - 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhospheneActivation { levels, level_count })
}

/// Rendering constants. Splat spread is `sigma * (size_base + size_gain * amplitude)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderParams {
    pub out_px_per_deg: f64,
    pub size_base: f64,
    pub size_gain: f64,
    /// Splats are cut off beyond this many effective sigmas.
    pub truncate_sigmas: f64,
}

impl RenderParams {
    pub fn new(out_px_per_deg: f64) -> Self {
        RenderParams {
            out_px_per_deg,
            size_base: 0.5,
            size_gain: 0.5,
            truncate_sigmas: 3.0,
        }
    }

    /// Calibration that makes a `fov_deg` map render at `side_px` square.
    pub fn for_output_size(fov_deg: f64, side_px: usize) -> Self {
        RenderParams::new(side_px as f64 / fov_deg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.out_px_per_deg.is_finite() && self.out_px_per_deg > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "out_px_per_deg must be positive, got {}",
                self.out_px_per_deg
            )));
        }
        if !(self.size_base >= 0.0 && self.size_gain >= 0.0 && self.size_base + self.size_gain > 0.0) {
            return Err(Error::InvalidParameter("size modulation must be non-negative".into()));
        }
        if self.truncate_sigmas.is_nan() || self.truncate_sigmas <= 0.0 {
            return Err(Error::InvalidParameter("truncate_sigmas must be positive".into()));
        }
        Ok(())
    }
}

/// Effective Gaussian spread in degrees of a phosphene at a given amplitude.
pub fn effective_sigma_deg(sigma_deg: f64, amplitude: f64, params: &RenderParams) -> f64 {
    sigma_deg * (params.size_base + params.size_gain * amplitude)
}

/// Output side length in pixels for a map at a calibration.
pub fn output_side_px(map: &PhospheneMap, out_px_per_deg: f64) -> usize {
    (map.fov_deg() * out_px_per_deg).round().max(1.0) as usize
}

/// Draws the percept on a black square covering the map's field of view.
/// Overlapping splats combine by per-pixel maximum.
pub fn render(map: &PhospheneMap, activation: &PhospheneActivation, params: &RenderParams) -> Result<Frame> {
    params.validate()?;
    if activation.levels.len() != map.len() {
        return Err(Error::ActivationMismatch {
            expected: map.len(),
            got: activation.levels.len(),
        });
    }
    let ppd = params.out_px_per_deg;
    let side = output_side_px(map, ppd);
    let mut out = vec![0.0f64; side * side];
    let half = side as f64 / 2.0;

    let mut gx: Vec<f64> = Vec::new();
    let mut gy: Vec<f64> = Vec::new();
    let mut dx2: Vec<f64> = Vec::new();
    let mut dy2: Vec<f64> = Vec::new();

    for (i, p) in map.phosphenes.iter().enumerate() {
        if activation.levels[i] == 0 {
            continue;
        }
        let amp = activation.amplitude(i);
        let sigma_px = effective_sigma_deg(p.sigma_deg, amp, params) * ppd;
        if sigma_px <= 0.0 {
            continue;
        }
        let radius = params.truncate_sigmas * sigma_px;
        let r2 = radius * radius;
        let inv = 1.0 / (2.0 * sigma_px * sigma_px);
        let cx = half + p.center_deg.0 * ppd;
        let cy = half - p.center_deg.1 * ppd;

        let (c0, c1) = pixel_span(cx, radius, side);
        let (r0, r1) = pixel_span(cy, radius, side);
        if c0 >= c1 || r0 >= r1 {
            continue;
        }
        fill_axis(c0, c1, cx, inv, &mut gx, &mut dx2);
        fill_axis(r0, r1, cy, inv, &mut gy, &mut dy2);

        for (ri, row) in (r0..r1).enumerate() {
            let ay = amp * gy[ri];
            let dy = dy2[ri];
            let line = &mut out[row * side + c0..row * side + c1];
            for (ci, px) in line.iter_mut().enumerate() {
                if dx2[ci] + dy <= r2 {
                    let v = ay * gx[ci];
                    if v > *px {
                        *px = v;
                    }
                }
            }
        }
    }
    for v in &mut out {
        *v = v.min(1.0);
    }
    Ok(Frame::from_raw_unchecked(side, side, ppd, out))
}

/// Pixel index range whose centers lie within `radius` of `center` on one axis.
fn pixel_span(center: f64, radius: f64, n: usize) -> (usize, usize) {
    let lo = (center - radius - 0.5).ceil().max(0.0);
    let hi = (center + radius - 0.5).floor() + 1.0;
    let hi = hi.max(0.0).min(n as f64);
    (lo.min(n as f64) as usize, hi as usize)
}

fn fill_axis(lo: usize, hi: usize, center: f64, inv: f64, g: &mut Vec<f64>, d2: &mut Vec<f64>) {
    g.clear();
    d2.clear();
    for k in lo..hi {
        let d = k as f64 + 0.5 - center;
        let dd = d * d;
        d2.push(dd);
        g.push((-dd * inv).exp());
    }
}
