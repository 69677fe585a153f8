use std::io::{BufReader, Cursor};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use spv_core::{Condition, Frame, HeadPose, Pipeline, PipelineParams};

use crate::io::{expand_inputs, write_atomic};
use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ImageFormat {
    #[default]
    Pgm,
    Png,
}

impl ImageFormat {
    fn extension(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Png => "png",
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct PhosphenizeArgs {
    /// Image files or directories (PGM or PNG, 8-bit grayscale or converted).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory; each input becomes `<stem>.<format>`.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Standard condition label (C1..C6).
    #[arg(long, conflicts_with_all = ["fov", "phosphenes"])]
    pub condition: Option<String>,
    #[arg(long, requires = "phosphenes")]
    pub fov: Option<f64>,
    #[arg(long, requires = "fov")]
    pub phosphenes: Option<usize>,
    /// Head yaw in degrees, positive to the right.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub yaw: f64,
    /// Head pitch in degrees, positive up.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub pitch: f64,
    /// Output side in pixels.
    #[arg(long, conflicts_with = "out_px_per_deg")]
    pub size: Option<usize>,
    /// Output resolution in pixels per degree (instead of --size).
    #[arg(long)]
    pub out_px_per_deg: Option<f64>,
    /// Source calibration; overrides a PGM `# px_per_deg=` comment.
    #[arg(long, conflicts_with = "fit")]
    pub src_px_per_deg: Option<f64>,
    /// Scale each image so its shorter side spans the field of view. This is
    /// also the fallback for images with no calibration.
    #[arg(long)]
    pub fit: bool,
    #[arg(long, value_enum, default_value_t)]
    pub format: ImageFormat,
}

pub const DEFAULT_OUTPUT_SIDE: usize = 512;

impl PhosphenizeArgs {
    fn condition(&self) -> Result<Condition, CliError> {
        let c = match (&self.condition, self.fov, self.phosphenes) {
            (Some(label), _, _) => Condition::standard(label),
            (None, Some(f), Some(n)) => Condition::new(n, f),
            _ => return Err(CliError::Usage("give --condition, or --fov with --phosphenes".into())),
        };
        c.map_err(|e| CliError::Usage(e.to_string()))
    }
}

/// Phosphenizes every input in parallel; returns the written paths in input order.
pub fn cmd_phosphenize(args: &PhosphenizeArgs) -> Result<Vec<PathBuf>, CliError> {
    let condition = args.condition()?;
    let pose = HeadPose::new(args.yaw, args.pitch).map_err(|e| CliError::Usage(e.to_string()))?;
    let out_ppd = match (args.size, args.out_px_per_deg) {
        (_, Some(ppd)) => ppd,
        (size, None) => size.unwrap_or(DEFAULT_OUTPUT_SIDE) as f64 / condition.fov_deg,
    };
    if !(out_ppd.is_finite() && out_ppd > 0.0) {
        return Err(CliError::Usage("output resolution must be positive".into()));
    }
    if let Some(p) = args.src_px_per_deg {
        if !(p.is_finite() && p > 0.0) {
            return Err(CliError::Usage("--src-px-per-deg must be positive".into()));
        }
    }
    let pipeline = Pipeline::new(&condition, PipelineParams::new(out_ppd))?;

    let inputs = expand_inputs(&args.inputs, &["pgm", "png"])?;
    if inputs.is_empty() {
        return Err(CliError::Usage("no PGM or PNG images among the inputs".into()));
    }
    let outputs: Vec<PathBuf> = inputs
        .iter()
        .map(|p| {
            let stem = p.file_stem().unwrap_or(p.as_os_str());
            args.out.join(stem).with_extension(args.format.extension())
        })
        .collect();
    for (i, o) in outputs.iter().enumerate() {
        if let Some(j) = outputs[..i].iter().position(|x| x == o) {
            return Err(CliError::Usage(format!(
                "{} and {} would both write {}",
                inputs[j].display(),
                inputs[i].display(),
                o.display()
            )));
        }
    }

    inputs.par_iter().zip(&outputs).try_for_each(|(input, output)| {
        let source = load_image(input, args.src_px_per_deg, args.fit, condition.fov_deg)?;
        let percept = pipeline
            .run(&source, pose)
            .map_err(|source| CliError::Input { path: input.clone(), source })?;
        let bytes = encode(&percept.frame, args.format)?;
        write_atomic(output, &bytes)
    })?;
    Ok(outputs)
}

/// Loads a grayscale frame. Calibration: `src_px_per_deg` if given, else the
/// PGM comment, else (or with `fit`) the shorter side spans `fov_deg`.
pub fn load_image(path: &Path, src_px_per_deg: Option<f64>, fit: bool, fov_deg: f64) -> Result<Frame, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let input_err = |source| CliError::Input {
        path: path.to_path_buf(),
        source,
    };
    let (frame, calibrated) = if bytes.starts_with(b"P5") {
        let read = |default| Frame::read_pgm(BufReader::new(Cursor::new(&bytes)), default);
        match read(None) {
            Ok(f) => (f, true),
            // no calibration comment; any other fault shows up again here
            Err(_) => (read(Some(1.0)).map_err(input_err)?, false),
        }
    } else {
        let img = image::load_from_memory(&bytes)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?
            .into_luma8();
        let (w, h) = img.dimensions();
        (Frame::from_u8(w as usize, h as usize, 1.0, img.as_raw()).map_err(input_err)?, false)
    };
    let ppd = match src_px_per_deg {
        Some(p) => p,
        None if calibrated && !fit => return Ok(frame),
        None => frame.width().min(frame.height()) as f64 / fov_deg,
    };
    Frame::new(frame.width(), frame.height(), ppd, frame.into_data()).map_err(input_err)
}

pub fn encode(frame: &Frame, format: ImageFormat) -> Result<Vec<u8>, CliError> {
    match format {
        ImageFormat::Pgm => Ok(frame.to_pgm_bytes()),
        ImageFormat::Png => {
            let img = image::GrayImage::from_raw(frame.width() as u32, frame.height() as u32, frame.to_u8())
                .expect("buffer matches dimensions");
            let mut buf = Vec::new();
            img.write_to(&mut Cursor::new(&mut buf), image::ImageFormat::Png)
                .map_err(|e| CliError::Runtime(format!("png encoding: {e}")))?;
            Ok(buf)
        }
    }
}
