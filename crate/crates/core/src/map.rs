//! Phosphene map geometry.
//!
//! Phosphenes sit on a regular near-square grid spanning the field of view:
//! `rows = round(sqrt(N))`, `cols = ceil(N / rows)`. Surplus grid cells are
//! trimmed from the corners inward, farthest-from-center first, ties broken
//! by row-major index. Each phosphene samples one grid cell.

use serde::{Deserialize, Serialize};

use crate::condition::Condition;
use crate::error::Result;

/// Default Gaussian spread as a fraction of grid spacing.
pub const DEFAULT_SIGMA_FRACTION: f64 = 1.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phosphene {
    /// `(x, y)` in degrees from the view center, y up.
    pub center_deg: (f64, f64),
    pub sigma_deg: f64,
    /// Side of the square receptive sampling window.
    pub window_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhospheneMap {
    pub condition: Condition,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub spacing_deg: f64,
    pub phosphenes: Vec<Phosphene>,
}

impl PhospheneMap {
    pub fn len(&self) -> usize {
        self.phosphenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phosphenes.is_empty()
    }

    pub fn fov_deg(&self) -> f64 {
        self.condition.fov_deg
    }
}

/// `(rows, cols)` of the grid that hosts `count` phosphenes.
pub fn grid_shape(count: usize) -> (usize, usize) {
    let rows = ((count as f64).sqrt().round() as usize).max(1);
    let cols = count.div_ceil(rows);
    (rows, cols)
}

/// Grid spacing in degrees for a condition.
pub fn grid_spacing_deg(condition: &Condition) -> f64 {
    let (rows, cols) = grid_shape(condition.phosphene_count);
    condition.fov_deg / rows.max(cols) as f64
}

pub fn build_phosphene_map(condition: &Condition) -> Result<PhospheneMap> {
    build_phosphene_map_with(condition, DEFAULT_SIGMA_FRACTION)
}

/// As [`build_phosphene_map`] with a custom `sigma = spacing * sigma_fraction`.
pub fn build_phosphene_map_with(condition: &Condition, sigma_fraction: f64) -> Result<PhospheneMap> {
    condition.validate()?;
    if !(sigma_fraction.is_finite() && sigma_fraction > 0.0) {
        return Err(crate::Error::InvalidParameter(format!(
            "sigma_fraction must be positive, got {sigma_fraction}"
        )));
    }
    let n = condition.phosphene_count;
    let (rows, cols) = grid_shape(n);
    let spacing = condition.fov_deg / rows.max(cols) as f64;

    let mut keep = vec![true; rows * cols];
    let surplus = rows * cols - n;
    if surplus > 0 {
        let rc = (rows as f64 - 1.0) / 2.0;
        let cc = (cols as f64 - 1.0) / 2.0;
        // squared distances in half-cell units are exact integers
        let mut order: Vec<(u64, usize)> = (0..rows * cols)
            .map(|idx| {
                let dr = (2.0 * (idx / cols) as f64 - 2.0 * rc) as i64;
                let dc = (2.0 * (idx % cols) as f64 - 2.0 * cc) as i64;
                ((dr * dr + dc * dc) as u64, idx)
            })
            .collect();
        order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, idx) in order.iter().take(surplus) {
            keep[idx] = false;
        }
    }

    let phosphenes = (0..rows * cols)
        .filter(|&idx| keep[idx])
        .map(|idx| {
            let (r, c) = (idx / cols, idx % cols);
            let x = (c as f64 - (cols as f64 - 1.0) / 2.0) * spacing;
            let y = ((rows as f64 - 1.0) / 2.0 - r as f64) * spacing;
            Phosphene {
                center_deg: (x, y),
                sigma_deg: spacing * sigma_fraction,
                window_deg: spacing,
            }
        })
        .collect();

    Ok(PhospheneMap {
        condition: condition.clone(),
        grid_rows: rows,
        grid_cols: cols,
        spacing_deg: spacing,
        phosphenes,
    })
}

/// Source pixels that fall inside one phosphene's sampling window:
/// `round(window_deg * src_px_per_deg)^2`, at least 1.
pub fn pixels_per_phosphene(condition: &Condition, src_px_per_deg: f64) -> Result<u64> {
    condition.validate()?;
    if !(src_px_per_deg.is_finite() && src_px_per_deg > 0.0) {
        return Err(crate::Error::InvalidParameter(format!(
            "src_px_per_deg must be positive, got {src_px_per_deg}"
        )));
    }
    let side = (grid_spacing_deg(condition) * src_px_per_deg).round() as u64;
    Ok((side * side).max(1))
}
