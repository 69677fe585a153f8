//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every image crosses the boundary as 8-bit grayscale, row-major, top row
//! first, `side × side`.

use spv_core::stimuli::stimulus_frame;
use spv_core::{Condition, Direction, Frame, HeadPose, Pipeline, StimulusSetup};
use wasm_bindgen::prelude::*;

/// Calibration of generated optotypes.
pub const SOURCE_PX_PER_DEG: f64 = 3.0;

fn condition(phosphenes: u32, fov_deg: f64) -> Result<Condition, String> {
    Condition::new(phosphenes as usize, fov_deg).map_err(|e| e.to_string())
}

fn landolt_source(fov_deg: f64, gap_arcmin: f64, orientation: &str) -> Result<Frame, String> {
    let dir: Direction = orientation.parse().map_err(|e: spv_core::Error| e.to_string())?;
    let setup = StimulusSetup::new(fov_deg, SOURCE_PX_PER_DEG).map_err(|e| e.to_string())?;
    let stim = setup.landolt_c(gap_arcmin, dir, 0).map_err(|e| e.to_string())?;
    stimulus_frame(&stim.spec, &stim.timeline, setup.timing.onset_ms()).map_err(|e| e.to_string())
}

/// Nearest-neighbour upscale so the source can sit next to the percept.
fn resize_nearest(frame: &Frame, side: usize) -> Vec<u8> {
    let bytes = frame.to_u8();
    let (w, h) = (frame.width(), frame.height());
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        let sr = (r * h / side).min(h - 1);
        for c in 0..side {
            out.push(bytes[sr * w + (c * w / side).min(w - 1)]);
        }
    }
    out
}

/// `[source..., percept...]`, each `side × side`: a Landolt C of the given
/// gap as shown and as perceived through the phosphene grid.
pub fn landolt_pair(
    phosphenes: u32,
    fov_deg: f64,
    gap_arcmin: f64,
    orientation: &str,
    side: usize,
) -> Result<Vec<u8>, String> {
    let c = condition(phosphenes, fov_deg)?;
    let source = landolt_source(fov_deg, gap_arcmin, orientation)?;
    let percept = Pipeline::with_output_size(&c, side)
        .and_then(|p| p.run(&source, HeadPose::CENTER))
        .map_err(|e| e.to_string())?;
    let mut out = resize_nearest(&source, side);
    out.extend(percept.frame.to_u8());
    Ok(out)
}

/// Phosphenizes a `width × height` grayscale drawing whose shorter side
/// spans the field of view.
pub fn phosphenize_drawing(
    pixels: &[u8],
    width: usize,
    height: usize,
    phosphenes: u32,
    fov_deg: f64,
    side: usize,
) -> Result<Vec<u8>, String> {
    let c = condition(phosphenes, fov_deg)?;
    let ppd = width.min(height) as f64 / fov_deg;
    let source = Frame::from_u8(width, height, ppd, pixels).map_err(|e| e.to_string())?;
    let percept = Pipeline::with_output_size(&c, side)
        .and_then(|p| p.run(&source, HeadPose::CENTER))
        .map_err(|e| e.to_string())?;
    Ok(percept.frame.to_u8())
}

/// `[logMAR, pixels per phosphene at 3 px/deg]` for a gap under a condition.
pub fn acuity_numbers(phosphenes: u32, fov_deg: f64, gap_arcmin: f64) -> Result<Vec<f64>, String> {
    let c = condition(phosphenes, fov_deg)?;
    let logmar = spv_core::logmar_from_gap(gap_arcmin).map_err(|e| e.to_string())?;
    let px = spv_core::pixels_per_phosphene(&c, SOURCE_PX_PER_DEG).map_err(|e| e.to_string())?;
    Ok(vec![logmar, px as f64])
}

#[wasm_bindgen(js_name = landoltPair)]
pub fn js_landolt_pair(
    phosphenes: u32,
    fov_deg: f64,
    gap_arcmin: f64,
    orientation: &str,
    side: usize,
) -> Result<Vec<u8>, JsError> {
    landolt_pair(phosphenes, fov_deg, gap_arcmin, orientation, side).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = phosphenizeDrawing)]
pub fn js_phosphenize_drawing(
    pixels: &[u8],
    width: usize,
    height: usize,
    phosphenes: u32,
    fov_deg: f64,
    side: usize,
) -> Result<Vec<u8>, JsError> {
    phosphenize_drawing(pixels, width, height, phosphenes, fov_deg, side).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = acuityNumbers)]
pub fn js_acuity_numbers(phosphenes: u32, fov_deg: f64, gap_arcmin: f64) -> Result<Vec<f64>, JsError> {
    acuity_numbers(phosphenes, fov_deg, gap_arcmin).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = gapFromLogmar)]
pub fn js_gap_from_logmar(logmar: f64) -> f64 {
    spv_core::gap_from_logmar(logmar)
}
