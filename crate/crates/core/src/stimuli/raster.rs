//! Pixel-level drawing helpers for stimulus frames.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Direction;

/// Area coverage of a shape on a `side × side` grid, estimated with
/// `ss × ss` subsamples per pixel. Subsample coordinates are built from
/// integers so that mirrored pixels see exactly negated coordinates.
pub(crate) fn coverage(side: usize, px_per_deg: f64, ss: usize, inside: impl Fn(f64, f64) -> bool) -> Vec<f64> {
    let n = side as i64;
    let s = ss as i64;
    let scale = 1.0 / (2.0 * ss as f64 * px_per_deg);
    let total = (ss * ss) as f64;
    let mut out = vec![0.0; side * side];
    for row in 0..n {
        for col in 0..n {
            let mut hits = 0u32;
            for ky in 0..s {
                // y grows upward, so negate the row offset
                let v = -(2 * s * row + 2 * ky + 1 - s * n);
                let y = v as f64 * scale;
                for kx in 0..s {
                    let u = 2 * s * col + 2 * kx + 1 - s * n;
                    if inside(u as f64 * scale, y) {
                        hits += 1;
                    }
                }
            }
            out[(row * n + col) as usize] = hits as f64 / total;
        }
    }
    out
}

/// Re-orients an image drawn pointing right so that it points in `dir`.
pub(crate) fn orient_from_right(src: &[f64], side: usize, dir: Direction) -> Vec<f64> {
    let n = side;
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let (sr, sc) = match dir {
                Direction::Right => (r, c),
                // counter-clockwise quarter turn
                Direction::Up => (c, n - 1 - r),
                // clockwise quarter turn
                Direction::Down => (n - 1 - c, r),
                Direction::Left => (r, n - 1 - c),
            };
            out[r * n + c] = src[sr * n + sc];
        }
    }
    out
}

/// Cyclic shift of the image content by `(dx, dy)` pixels, dy positive = downward.
pub(crate) fn roll(src: &[f64], side: usize, dx: i64, dy: i64) -> Vec<f64> {
    let n = side as i64;
    let mut out = vec![0.0; side * side];
    for r in 0..n {
        let sr = (r - dy).rem_euclid(n);
        for c in 0..n {
            let sc = (c - dx).rem_euclid(n);
            out[(r * n + c) as usize] = src[(sr * n + sc) as usize];
        }
    }
    out
}

/// Random binary pattern on a hexagonal lattice that tiles the square torus.
///
/// Lattice spacing is adjusted so an integer number of elements fits each axis
/// (an even number of rows so the row offsets wrap cleanly). Each pixel takes
/// the state of the nearest lattice site under the torus metric.
pub(crate) fn hex_pattern(side: usize, px_per_deg: f64, element_deg: f64, seed: u64) -> Vec<f64> {
    let extent = side as f64;
    let element_px = (element_deg * px_per_deg).max(1.0);
    let cols = ((extent / element_px).round() as usize).max(1);
    let row_px = element_px * 3f64.sqrt() / 2.0;
    let mut rows = ((extent / row_px).round() as usize).max(2);
    if rows % 2 == 1 {
        rows += 1;
    }
    let ex = extent / cols as f64;
    let ey = extent / rows as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<bool> = (0..rows * cols).map(|_| rng.gen_bool(0.5)).collect();

    let wrap = |d: f64| {
        let d = d.rem_euclid(extent);
        d.min(extent - d)
    };

    let mut out = vec![0.0; side * side];
    for r in 0..side {
        let y = r as f64 + 0.5;
        let base = (y / ey).floor() as i64;
        for c in 0..side {
            let x = c as f64 + 0.5;
            let mut best = (f64::INFINITY, 0usize);
            for lr in base - 1..=base + 1 {
                let lr_w = lr.rem_euclid(rows as i64) as usize;
                let sy = (lr as f64 + 0.5) * ey;
                let offset = if lr_w % 2 == 1 { 0.5 * ex } else { 0.0 };
                let lc0 = ((x - offset) / ex).floor() as i64;
                for lc in lc0 - 1..=lc0 + 1 {
                    let lc_w = lc.rem_euclid(cols as i64) as usize;
                    let sx = (lc as f64 + 0.5) * ex + offset;
                    let d = wrap(x - sx).powi(2) + wrap(y - sy).powi(2);
                    let idx = lr_w * cols + lc_w;
                    if d < best.0 || (d == best.0 && idx < best.1) {
                        best = (d, idx);
                    }
                }
            }
            out[r * side + c] = if states[best.1] { 1.0 } else { 0.0 };
        }
    }
    out
}
