//! The five stimulus families: light perception, time resolution, light
//! location, motion perception and Landolt-C orientation.
//!
//! Every generator is a pure function of its parameters and seed and returns
//! the stimulus description, its event timeline and the correct key. Stimuli
//! are bright on a dark background.

mod raster;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Response keys and stimulus directions share one vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

pub type Key = Direction;

impl Direction {
    /// Fixed order, also the ideal observer's tie-break order.
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }

    /// Unit vector in degrees-space, y up.
    pub fn unit(self) -> (i64, i64) {
        match self {
            Direction::Up => (0, 1),
            Direction::Down => (0, -1),
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "up" | "top" => Ok(Direction::Up),
            "down" | "bottom" => Ok(Direction::Down),
            "left" => Ok(Direction::Left),
            "right" => Ok(Direction::Right),
            other => Err(Error::InvalidParameter(format!("unknown direction {other:?}"))),
        }
    }
}

/// Test families of the battery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFamily {
    Light,
    Time,
    Location,
    Motion,
    Landolt,
}

impl TestFamily {
    pub const ALL: [TestFamily; 5] = [
        TestFamily::Light,
        TestFamily::Time,
        TestFamily::Location,
        TestFamily::Motion,
        TestFamily::Landolt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TestFamily::Light => "light",
            TestFamily::Time => "time",
            TestFamily::Location => "location",
            TestFamily::Motion => "motion",
            TestFamily::Landolt => "landolt",
        }
    }
}

impl fmt::Display for TestFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "light" | "light_perception" => Ok(TestFamily::Light),
            "time" | "time_resolution" => Ok(TestFamily::Time),
            "location" | "light_location" => Ok(TestFamily::Location),
            "motion" | "motion_perception" => Ok(TestFamily::Motion),
            "landolt" | "landolt_c" => Ok(TestFamily::Landolt),
            other => Err(Error::InvalidParameter(format!("unknown test {other:?}"))),
        }
    }
}

/// Family-specific parameters; serialized with a `family` tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StimulusParams {
    LightPerception {
        present: bool,
    },
    TimeResolution {
        flash_count: u8,
        gap_ms: u64,
        flash_ms: u64,
    },
    LightLocation {
        direction: Direction,
        wedge_deg: f64,
    },
    MotionPerception {
        direction: Direction,
        element_deg: f64,
        speed_deg_per_s: f64,
    },
    LandoltC {
        gap_arcmin: f64,
        orientation: Direction,
    },
}

impl StimulusParams {
    pub fn family(&self) -> TestFamily {
        match self {
            StimulusParams::LightPerception { .. } => TestFamily::Light,
            StimulusParams::TimeResolution { .. } => TestFamily::Time,
            StimulusParams::LightLocation { .. } => TestFamily::Location,
            StimulusParams::MotionPerception { .. } => TestFamily::Motion,
            StimulusParams::LandoltC { .. } => TestFamily::Landolt,
        }
    }
}

/// Phase durations of a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    /// Fixation / pre-stimulus phase before the warning tone.
    pub pre_ms: u64,
    /// Tone to imperative-stimulus onset.
    pub tone_lead_ms: u64,
    pub response_window_ms: u64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            pre_ms: 1000,
            tone_lead_ms: 500,
            response_window_ms: 10_000,
        }
    }
}

impl Timing {
    pub fn tone_ms(&self) -> u64 {
        self.pre_ms
    }

    pub fn onset_ms(&self) -> u64 {
        self.pre_ms + self.tone_lead_ms
    }

    pub fn close_ms(&self) -> u64 {
        self.onset_ms() + self.response_window_ms
    }
}

/// Complete description of one trial's stimulus; the trial-log representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusSpec {
    #[serde(flatten)]
    pub params: StimulusParams,
    pub scene_deg: f64,
    pub px_per_deg: f64,
    pub timing: Timing,
    pub rng_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Tone,
    Frame,
    ResponseWindowOpen,
    ResponseWindowClose,
}

/// One timeline entry. `frame` names the frame that becomes visible at `t_ms`;
/// the window-open event marks imperative onset and carries the onset frame, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub t_ms: u64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusTimeline {
    pub events: Vec<TimelineEvent>,
}

impl StimulusTimeline {
    fn time_of(&self, kind: EventKind) -> Option<u64> {
        self.events.iter().find(|e| e.kind == kind).map(|e| e.t_ms)
    }

    pub fn tone_ms(&self) -> Option<u64> {
        self.time_of(EventKind::Tone)
    }

    /// Imperative-stimulus onset; reaction times are measured from here.
    pub fn onset_ms(&self) -> u64 {
        self.time_of(EventKind::ResponseWindowOpen).unwrap_or(0)
    }

    pub fn close_ms(&self) -> u64 {
        self.time_of(EventKind::ResponseWindowClose).unwrap_or(0)
    }

    /// Index of the frame visible at `t_ms`.
    pub fn frame_index_at(&self, t_ms: u64) -> usize {
        self.events
            .iter()
            .take_while(|e| e.t_ms <= t_ms)
            .filter_map(|e| e.frame)
            .last()
            .unwrap_or(0)
    }

    /// Times at which the displayed frame changes.
    pub fn frame_change_times(&self) -> Vec<u64> {
        self.events.iter().filter(|e| e.frame.is_some()).map(|e| e.t_ms).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.events.windows(2).any(|w| w[0].t_ms >= w[1].t_ms) {
            return Err(Error::InvalidStimulus("timeline times must strictly increase".into()));
        }
        let tones: Vec<_> = self.events.iter().filter(|e| e.kind == EventKind::Tone).collect();
        let open = self.time_of(EventKind::ResponseWindowOpen);
        match (tones.as_slice(), open) {
            ([tone], Some(open)) if tone.t_ms < open => Ok(()),
            _ => Err(Error::InvalidStimulus(
                "timeline needs exactly one tone before the response window opens".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectResponse {
    pub key: Key,
}

/// A generated trial stimulus.
#[derive(Clone, Debug, PartialEq)]
pub struct Stimulus {
    pub spec: StimulusSpec,
    pub timeline: StimulusTimeline,
    pub correct: CorrectResponse,
}

/// Scene geometry and timing shared by every generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StimulusSetup {
    /// Angular side of the square stimulus scene.
    pub scene_deg: f64,
    pub px_per_deg: f64,
    pub timing: Timing,
}

pub const DEFAULT_FLASH_MS: u64 = 100;
pub const DEFAULT_FLASH_GAP_MS: u64 = 300;
pub const DEFAULT_WEDGE_DEG: f64 = 30.0;
pub const DEFAULT_ELEMENT_DEG: f64 = 1.0;
pub const DEFAULT_SPEED_DEG_PER_S: f64 = 5.0;

/// Landolt ring outer diameter in gap widths.
pub const LANDOLT_DIAMETER_GAPS: f64 = 5.0;

impl Default for StimulusSetup {
    fn default() -> Self {
        StimulusSetup {
            scene_deg: 10.0,
            px_per_deg: 3.0,
            timing: Timing::default(),
        }
    }
}

impl StimulusSetup {
    pub fn new(scene_deg: f64, px_per_deg: f64) -> Result<Self> {
        let setup = StimulusSetup {
            scene_deg,
            px_per_deg,
            timing: Timing::default(),
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn with_timing(mut self, timing: Timing) -> Self {
        self.timing = timing;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.scene_deg.is_finite() && self.scene_deg > 0.0) {
            return Err(Error::InvalidStimulus(format!("scene_deg must be positive, got {}", self.scene_deg)));
        }
        if !(self.px_per_deg.is_finite() && self.px_per_deg > 0.0) {
            return Err(Error::InvalidStimulus(format!(
                "px_per_deg must be positive, got {}",
                self.px_per_deg
            )));
        }
        if self.timing.tone_lead_ms == 0 {
            return Err(Error::InvalidStimulus("tone must precede onset".into()));
        }
        if self.timing.response_window_ms == 0 {
            return Err(Error::InvalidStimulus("response window must be positive".into()));
        }
        Ok(())
    }

    fn spec(&self, params: StimulusParams, seed: u64) -> StimulusSpec {
        StimulusSpec {
            params,
            scene_deg: self.scene_deg,
            px_per_deg: self.px_per_deg,
            timing: self.timing,
            rng_seed: seed,
        }
    }

    pub fn light_perception(&self, present: bool, seed: u64) -> Result<Stimulus> {
        self.build(StimulusParams::LightPerception { present }, seed)
    }

    pub fn time_resolution(&self, flash_count: u8, gap_ms: u64, seed: u64) -> Result<Stimulus> {
        self.build(
            StimulusParams::TimeResolution {
                flash_count,
                gap_ms,
                flash_ms: DEFAULT_FLASH_MS,
            },
            seed,
        )
    }

    pub fn light_location(&self, direction: Direction, seed: u64) -> Result<Stimulus> {
        self.build(
            StimulusParams::LightLocation {
                direction,
                wedge_deg: DEFAULT_WEDGE_DEG,
            },
            seed,
        )
    }

    pub fn motion(&self, direction: Direction, element_deg: f64, speed_deg_per_s: f64, seed: u64) -> Result<Stimulus> {
        self.build(
            StimulusParams::MotionPerception {
                direction,
                element_deg,
                speed_deg_per_s,
            },
            seed,
        )
    }

    pub fn landolt_c(&self, gap_arcmin: f64, orientation: Direction, seed: u64) -> Result<Stimulus> {
        self.build(StimulusParams::LandoltC { gap_arcmin, orientation }, seed)
    }

    /// Validates `params` and derives the timeline and correct key.
    pub fn build(&self, params: StimulusParams, seed: u64) -> Result<Stimulus> {
        self.validate()?;
        let spec = self.spec(params, seed);
        validate_params(&spec)?;
        let timeline = timeline_for(&spec)?;
        let correct = correct_response(&spec);
        Ok(Stimulus {
            spec,
            timeline,
            correct,
        })
    }
}

impl StimulusSpec {
    pub fn family(&self) -> TestFamily {
        self.params.family()
    }

    pub fn setup(&self) -> StimulusSetup {
        StimulusSetup {
            scene_deg: self.scene_deg,
            px_per_deg: self.px_per_deg,
            timing: self.timing,
        }
    }

    /// The same stimulus with its answer replaced by `key`, or `None` when the
    /// family cannot produce that answer.
    pub fn with_answer(&self, key: Key) -> Option<StimulusSpec> {
        let params = match &self.params {
            StimulusParams::LightPerception { .. } => match key {
                Key::Left => StimulusParams::LightPerception { present: true },
                Key::Right => StimulusParams::LightPerception { present: false },
                _ => return None,
            },
            StimulusParams::TimeResolution { gap_ms, flash_ms, .. } => match key {
                Key::Left => StimulusParams::TimeResolution {
                    flash_count: 1,
                    gap_ms: *gap_ms,
                    flash_ms: *flash_ms,
                },
                Key::Right => StimulusParams::TimeResolution {
                    flash_count: 2,
                    gap_ms: (*gap_ms).max(1),
                    flash_ms: *flash_ms,
                },
                _ => return None,
            },
            StimulusParams::LightLocation { wedge_deg, .. } => StimulusParams::LightLocation {
                direction: key,
                wedge_deg: *wedge_deg,
            },
            StimulusParams::MotionPerception {
                element_deg,
                speed_deg_per_s,
                ..
            } => StimulusParams::MotionPerception {
                direction: key,
                element_deg: *element_deg,
                speed_deg_per_s: *speed_deg_per_s,
            },
            StimulusParams::LandoltC { gap_arcmin, .. } => StimulusParams::LandoltC {
                gap_arcmin: *gap_arcmin,
                orientation: key,
            },
        };
        Some(StimulusSpec {
            params,
            ..self.clone()
        })
    }

    /// Keys that are valid answers for this family, in tie-break order.
    pub fn answer_keys(&self) -> &'static [Key] {
        match self.family() {
            TestFamily::Light | TestFamily::Time => &[Key::Left, Key::Right],
            _ => &Direction::ALL,
        }
    }

    pub fn side_px(&self) -> usize {
        (self.scene_deg * self.px_per_deg).round().max(1.0) as usize
    }
}

fn validate_params(spec: &StimulusSpec) -> Result<()> {
    match &spec.params {
        StimulusParams::LightPerception { .. } => Ok(()),
        StimulusParams::TimeResolution {
            flash_count,
            gap_ms,
            flash_ms,
        } => {
            if !matches!(flash_count, 1 | 2) {
                return Err(Error::InvalidStimulus(format!("flash_count must be 1 or 2, got {flash_count}")));
            }
            if *flash_ms == 0 {
                return Err(Error::InvalidStimulus("flash_ms must be positive".into()));
            }
            if *flash_count == 2 && *gap_ms == 0 {
                return Err(Error::InvalidStimulus(
                    "two flashes with no gap are indistinguishable from one".into(),
                ));
            }
            let span = if *flash_count == 2 { 2 * flash_ms + gap_ms } else { *flash_ms };
            if span >= spec.timing.response_window_ms {
                return Err(Error::InvalidStimulus("flashes outlast the response window".into()));
            }
            Ok(())
        }
        StimulusParams::LightLocation { wedge_deg, .. } => {
            if !(wedge_deg.is_finite() && *wedge_deg > 0.0 && *wedge_deg < 90.0) {
                return Err(Error::InvalidStimulus(format!("wedge_deg must be in (0, 90), got {wedge_deg}")));
            }
            Ok(())
        }
        StimulusParams::MotionPerception {
            element_deg,
            speed_deg_per_s,
            ..
        } => {
            if !(element_deg.is_finite() && *element_deg > 0.0) {
                return Err(Error::InvalidStimulus(format!("element_deg must be positive, got {element_deg}")));
            }
            if !(speed_deg_per_s.is_finite() && *speed_deg_per_s > 0.0) {
                return Err(Error::InvalidStimulus(format!(
                    "speed must be positive, got {speed_deg_per_s}"
                )));
            }
            Ok(())
        }
        StimulusParams::LandoltC { gap_arcmin, .. } => {
            if !(gap_arcmin.is_finite() && *gap_arcmin > 0.0) {
                return Err(Error::InvalidStimulus(format!("gap_arcmin must be positive, got {gap_arcmin}")));
            }
            let diameter_deg = LANDOLT_DIAMETER_GAPS * gap_arcmin / 60.0;
            if diameter_deg > spec.scene_deg + 1e-9 {
                return Err(Error::StimulusTooLarge(format!(
                    "ring diameter {diameter_deg:.3} deg exceeds the {} deg scene",
                    spec.scene_deg
                )));
            }
            Ok(())
        }
    }
}

fn timeline_for(spec: &StimulusSpec) -> Result<StimulusTimeline> {
    let t = spec.timing;
    let onset = t.onset_ms();
    let mut events = vec![
        TimelineEvent {
            t_ms: 0,
            kind: EventKind::Frame,
            frame: Some(0),
        },
        TimelineEvent {
            t_ms: t.tone_ms(),
            kind: EventKind::Tone,
            frame: None,
        },
    ];
    let onset_frame = match &spec.params {
        StimulusParams::LightPerception { present } => present.then_some(1),
        _ => Some(1),
    };
    events.push(TimelineEvent {
        t_ms: onset,
        kind: EventKind::ResponseWindowOpen,
        frame: onset_frame,
    });
    if let StimulusParams::TimeResolution {
        flash_count,
        gap_ms,
        flash_ms,
    } = &spec.params
    {
        let frame = |t_ms, idx| TimelineEvent {
            t_ms,
            kind: EventKind::Frame,
            frame: Some(idx),
        };
        events.push(frame(onset + flash_ms, 0));
        if *flash_count == 2 {
            let second = onset + flash_ms + gap_ms;
            events.push(frame(second, 1));
            events.push(frame(second + flash_ms, 0));
        }
    }
    events.push(TimelineEvent {
        t_ms: t.close_ms(),
        kind: EventKind::ResponseWindowClose,
        frame: None,
    });
    let timeline = StimulusTimeline { events };
    timeline.validate()?;
    Ok(timeline)
}

/// Key coding: light → left, no light → right, one flash → left, two → right;
/// directional families answer with the direction itself.
pub fn correct_response(spec: &StimulusSpec) -> CorrectResponse {
    let key = match &spec.params {
        StimulusParams::LightPerception { present: true } => Key::Left,
        StimulusParams::LightPerception { present: false } => Key::Right,
        StimulusParams::TimeResolution { flash_count: 1, .. } => Key::Left,
        StimulusParams::TimeResolution { .. } => Key::Right,
        StimulusParams::LightLocation { direction, .. } => *direction,
        StimulusParams::MotionPerception { direction, .. } => *direction,
        StimulusParams::LandoltC { orientation, .. } => *orientation,
    };
    CorrectResponse { key }
}

const SUPERSAMPLE: usize = 4;

/// Fixation disc radius as a fraction of the scene side.
const FIXATION_RADIUS_FRACTION: f64 = 0.1;
/// Outer wedge radius as a fraction of the scene side.
const WEDGE_OUTER_FRACTION: f64 = 0.45;

/// Radii `(disc, wedge_inner, wedge_outer)` in degrees for the light-location layout.
/// The clear ring between disc and wedge is at least four source pixels wide.
pub fn location_radii(scene_deg: f64, px_per_deg: f64) -> (f64, f64, f64) {
    let disc = FIXATION_RADIUS_FRACTION * scene_deg;
    let clear = (4.0 / px_per_deg).max(0.08 * scene_deg);
    (disc, disc + clear, WEDGE_OUTER_FRACTION * scene_deg)
}

/// The source frame visible at `t_ms`.
pub fn stimulus_frame(spec: &StimulusSpec, timeline: &StimulusTimeline, t_ms: u64) -> Result<Frame> {
    validate_params(spec)?;
    let side = spec.side_px();
    let ppd = spec.px_per_deg;
    let index = timeline.frame_index_at(t_ms);
    let data = match &spec.params {
        StimulusParams::LightPerception { .. } | StimulusParams::TimeResolution { .. } => {
            if index == 0 {
                vec![0.0; side * side]
            } else {
                let r = spec.scene_deg / 2.0;
                raster::coverage(side, ppd, SUPERSAMPLE, |x, y| x * x + y * y <= r * r)
            }
        }
        StimulusParams::LightLocation { direction, wedge_deg } => {
            let (disc, inner, outer) = location_radii(spec.scene_deg, ppd);
            let half_angle = (wedge_deg / 2.0).to_radians();
            let show_wedge = index != 0;
            let right = raster::coverage(side, ppd, SUPERSAMPLE, |x, y| {
                let r2 = x * x + y * y;
                if r2 <= disc * disc {
                    return true;
                }
                show_wedge && r2 >= inner * inner && r2 <= outer * outer && x > 0.0 && y.abs() <= x * half_angle.tan()
            });
            raster::orient_from_right(&right, side, *direction)
        }
        StimulusParams::MotionPerception {
            direction,
            element_deg,
            speed_deg_per_s,
        } => {
            let base = raster::hex_pattern(side, ppd, *element_deg, spec.rng_seed);
            let onset = timeline.onset_ms();
            if index == 0 || t_ms <= onset {
                base
            } else {
                let shift = (speed_deg_per_s * (t_ms - onset) as f64 / 1000.0 * ppd).round() as i64;
                let (ux, uy) = direction.unit();
                // raster rows grow downward
                raster::roll(&base, side, ux * shift, -uy * shift)
            }
        }
        StimulusParams::LandoltC {
            gap_arcmin,
            orientation,
        } => {
            if index == 0 {
                vec![0.0; side * side]
            } else {
                landolt_raster(side, ppd, *gap_arcmin, *orientation)
            }
        }
    };
    Frame::new(side, side, ppd, data)
}

/// Landolt ring: outer diameter five gaps, stroke one gap, gap of one gap width.
pub fn landolt_raster(side: usize, px_per_deg: f64, gap_arcmin: f64, orientation: Direction) -> Vec<f64> {
    let g = gap_arcmin / 60.0;
    let (outer, inner, half_gap) = (2.5 * g, 1.5 * g, 0.5 * g);
    let right = raster::coverage(side, px_per_deg, SUPERSAMPLE, |x, y| {
        let r2 = x * x + y * y;
        r2 <= outer * outer && r2 >= inner * inner && !(x > 0.0 && y.abs() < half_gap)
    });
    raster::orient_from_right(&right, side, orientation)
}

/// Landolt frame as it appears after onset, for template matching.
pub fn landolt_frame(scene_deg: f64, px_per_deg: f64, gap_arcmin: f64, orientation: Direction) -> Result<Frame> {
    let stim = StimulusSetup::new(scene_deg, px_per_deg)?.landolt_c(gap_arcmin, orientation, 0)?;
    stimulus_frame(&stim.spec, &stim.timeline, stim.timeline.onset_ms())
}

/// Draws a uniformly random family-specific stimulus for one trial.
pub fn random_stimulus(family: TestFamily, setup: &StimulusSetup, gap_arcmin: Option<f64>, rng: &mut impl Rng) -> Result<Stimulus> {
    let seed: u64 = rng.gen();
    let dir = Direction::ALL[rng.gen_range(0..4)];
    match family {
        TestFamily::Light => setup.light_perception(rng.gen_bool(0.5), seed),
        TestFamily::Time => {
            let count = if rng.gen_bool(0.5) { 1 } else { 2 };
            setup.time_resolution(count, DEFAULT_FLASH_GAP_MS, seed)
        }
        TestFamily::Location => setup.light_location(dir, seed),
        TestFamily::Motion => setup.motion(dir, DEFAULT_ELEMENT_DEG, DEFAULT_SPEED_DEG_PER_S, seed),
        TestFamily::Landolt => {
            let gap = gap_arcmin.ok_or_else(|| Error::InvalidStimulus("Landolt trials need a gap size".into()))?;
            setup.landolt_c(gap, dir, seed)
        }
    }
}

/// Seeded generator used for per-trial draws.
pub fn trial_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
