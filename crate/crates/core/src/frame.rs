//! Grayscale rasters with angular calibration, plus binary PGM import/export.
//!
//! Coordinates: the frame center is the origin in degrees, x grows to the right
//! and y grows upward. Pixel `(row, col)` has its center at
//! `x = (col + 0.5 - width/2) / px_per_deg`, `y = (height/2 - row - 0.5) / px_per_deg`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    px_per_deg: f64,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, px_per_deg: f64, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, px_per_deg)?;
        if data.len() != width * height {
            return Err(Error::InvalidFrame(format!(
                "expected {} values for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidFrame(format!(
                "value {} at index {i} outside [0, 1]",
                data[i]
            )));
        }
        Ok(Frame {
            width,
            height,
            px_per_deg,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, px_per_deg: f64, value: f64) -> Result<Self> {
        Frame::new(width, height, px_per_deg, vec![value; width * height])
    }

    pub fn black(width: usize, height: usize, px_per_deg: f64) -> Result<Self> {
        Frame::filled(width, height, px_per_deg, 0.0)
    }

    /// Builds a frame by evaluating `f(x_deg, y_deg)` at every pixel center. Output is clamped to [0, 1].
    pub fn from_fn(
        width: usize,
        height: usize,
        px_per_deg: f64,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<Self> {
        check_dims(width, height, px_per_deg)?;
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                let (x, y) = pixel_center_deg(width, height, px_per_deg, row, col);
                data.push(clamp_unit(f(x, y)));
            }
        }
        Ok(Frame {
            width,
            height,
            px_per_deg,
            data,
        })
    }

    /// Square frame whose side spans `extent_deg` at the given calibration.
    pub fn square_for_extent(extent_deg: f64, px_per_deg: f64) -> Result<Self> {
        let side = (extent_deg * px_per_deg).round().max(1.0) as usize;
        Frame::black(side, side, px_per_deg)
    }

    pub(crate) fn from_raw_unchecked(width: usize, height: usize, px_per_deg: f64, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Frame {
            width,
            height,
            px_per_deg,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn px_per_deg(&self) -> f64 {
        self.px_per_deg
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn width_deg(&self) -> f64 {
        self.width as f64 / self.px_per_deg
    }

    pub fn height_deg(&self) -> f64 {
        self.height as f64 / self.px_per_deg
    }

    pub fn pixel_center_deg(&self, row: usize, col: usize) -> (f64, f64) {
        pixel_center_deg(self.width, self.height, self.px_per_deg, row, col)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Per-pixel mixture `alpha * self + (1 - alpha) * other`.
    pub fn blend(&self, other: &Frame, alpha: f64) -> Result<Frame> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::InvalidFrame("blend of differently sized frames".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| clamp_unit(alpha * a + (1.0 - alpha) * b))
            .collect();
        Ok(Frame::from_raw_unchecked(self.width, self.height, self.px_per_deg, data))
    }

    /// 8-bit quantized pixels, `round(v * 255)`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| to_byte(v)).collect()
    }

    pub fn from_u8(width: usize, height: usize, px_per_deg: f64, bytes: &[u8]) -> Result<Self> {
        let data = bytes.iter().map(|&b| b as f64 / 255.0).collect();
        Frame::new(width, height, px_per_deg, data)
    }

    /// Writes binary PGM (P5, maxval 255) with a `# px_per_deg=` comment line.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(
            out,
            "P5\n# px_per_deg={}\n{} {}\n255\n",
            self.px_per_deg, self.width, self.height
        )?;
        out.write_all(&self.to_u8())?;
        Ok(())
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.data.len() + 64);
        self.write_pgm(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    /// Reads binary PGM. The calibration comes from the `# px_per_deg=` comment
    /// when present, otherwise `default_px_per_deg`.
    pub fn read_pgm<R: BufRead>(mut input: R, default_px_per_deg: Option<f64>) -> Result<Self> {
        let mut tokens = Vec::with_capacity(4);
        let mut px_per_deg = None;
        let mut line = String::new();
        // header: magic, width, height, maxval, each possibly split across lines with comments
        while tokens.len() < 4 {
            line.clear();
            if input.read_line(&mut line)? == 0 {
                return Err(Error::InvalidFrame("truncated PGM header".into()));
            }
            let content = match line.find('#') {
                Some(pos) => {
                    let comment = line[pos + 1..].trim();
                    if let Some(v) = comment.strip_prefix("px_per_deg=") {
                        px_per_deg = Some(v.trim().parse::<f64>().map_err(|_| {
                            Error::InvalidFrame(format!("bad px_per_deg comment {comment:?}"))
                        })?);
                    }
                    &line[..pos]
                }
                None => &line[..],
            };
            tokens.extend(content.split_whitespace().map(str::to_owned));
        }
        if tokens[0] != "P5" {
            return Err(Error::InvalidFrame(format!("unsupported magic {:?}, expected P5", tokens[0])));
        }
        let parse = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::InvalidFrame(format!("bad PGM {what} {s:?}")))
        };
        let width = parse(&tokens[1], "width")?;
        let height = parse(&tokens[2], "height")?;
        let maxval = parse(&tokens[3], "maxval")?;
        if tokens.len() > 4 {
            return Err(Error::InvalidFrame("unexpected data in PGM header".into()));
        }
        if maxval == 0 || maxval > 255 {
            return Err(Error::InvalidFrame(format!("only 8-bit PGM supported, maxval {maxval}")));
        }
        let ppd = px_per_deg
            .or(default_px_per_deg)
            .ok_or_else(|| Error::InvalidFrame("PGM has no px_per_deg and no default given".into()))?;
        let mut bytes = vec![0u8; width * height];
        input
            .read_exact(&mut bytes)
            .map_err(|_| Error::InvalidFrame("truncated PGM pixel data".into()))?;
        let data = bytes.iter().map(|&b| (b as f64 / maxval as f64).min(1.0)).collect();
        Frame::new(width, height, ppd, data)
    }
}

pub(crate) fn pixel_center_deg(width: usize, height: usize, ppd: f64, row: usize, col: usize) -> (f64, f64) {
    let x = (col as f64 + 0.5 - width as f64 / 2.0) / ppd;
    let y = (height as f64 / 2.0 - row as f64 - 0.5) / ppd;
    (x, y)
}

fn check_dims(width: usize, height: usize, px_per_deg: f64) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidFrame(format!("dimensions must be positive, got {width}x{height}")));
    }
    if !(px_per_deg.is_finite() && px_per_deg > 0.0) {
        return Err(Error::InvalidFrame(format!("px_per_deg must be positive, got {px_per_deg}")));
    }
    Ok(())
}

pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

pub(crate) fn to_byte(v: f64) -> u8 {
    (clamp_unit(v) * 255.0).round() as u8
}
