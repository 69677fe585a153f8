//! Template-matching ideal observer used in place of human subjects.
//!
//! The observer sees the phosphenized stimulus with additive Gaussian pixel
//! noise, phosphenizes every candidate answer through the same pipeline, and
//! picks the best-matching candidate: maximum normalized cross-correlation for
//! the Landolt C, minimum squared error for the other families.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::condition::{Condition, HeadPose};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::pipeline::Pipeline;
use crate::session::{Reaction, Responder, TrialContext};
use crate::stimuli::{stimulus_frame, trial_rng, Direction, Key, Stimulus, StimulusParams, StimulusSpec, TestFamily};

/// Normalized cross-correlation; 0 when either input has no variance.
pub fn ncc(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "ncc of different lengths");
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        ab += dx * dy;
        aa += dx * dx;
        bb += dy * dy;
    }
    if aa <= 0.0 || bb <= 0.0 {
        return 0.0;
    }
    ab / (aa * bb).sqrt()
}

/// Candidate with the highest NCC against `percept`; ties go to the earliest
/// candidate, so passing them in up/down/left/right order fixes the tie-break.
pub fn ideal_observer(percept: &Frame, candidates: &[(Key, Frame)]) -> Result<Key> {
    let candidates: Vec<(Key, Vec<Vec<f64>>)> = candidates.iter().map(|(k, f)| (*k, vec![f.data().to_vec()])).collect();
    best_by_ncc(&[percept.data().to_vec()], &candidates).map(|(k, _)| k)
}

// (key, margin in [0, 1])
fn best_by_ncc(observed: &[Vec<f64>], candidates: &[(Key, Vec<Vec<f64>>)]) -> Result<(Key, f64)> {
    pick(candidates, |views| {
        let total: f64 = observed.iter().zip(views).map(|(o, t)| ncc(o, t)).sum();
        total / observed.len() as f64
    })
    .map(|(k, best, second)| (k, ((best - second) / 2.0).clamp(0.0, 1.0)))
}

fn best_by_sse(observed: &[Vec<f64>], candidates: &[(Key, Vec<Vec<f64>>)]) -> Result<(Key, f64)> {
    pick(candidates, |views| {
        -observed
            .iter()
            .zip(views)
            .map(|(o, t)| o.iter().zip(t).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
            .sum::<f64>()
    })
    .map(|(k, best, second)| {
        // scores are negated errors
        let (b, s) = (-best, -second);
        let margin = if s > 0.0 { (s - b) / s } else { 0.0 };
        (k, margin.clamp(0.0, 1.0))
    })
}

/// Highest-scoring candidate (first wins ties), its score and the runner-up score.
fn pick(candidates: &[(Key, Vec<Vec<f64>>)], score: impl Fn(&[Vec<f64>]) -> f64) -> Result<(Key, f64, f64)> {
    let mut best: Option<(Key, f64)> = None;
    let mut second = f64::NEG_INFINITY;
    for (key, views) in candidates {
        let s = score(views);
        match best {
            Some((_, b)) if s <= b => second = second.max(s),
            Some((_, b)) => {
                second = b;
                best = Some((*key, s));
            }
            None => best = Some((*key, s)),
        }
    }
    let (key, b) = best.ok_or_else(|| Error::InvalidParameter("no candidates".into()))?;
    Ok((key, b, if second.is_finite() { second } else { b }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObserverConfig {
    /// Side of the rendered percept the observer looks at.
    pub output_side_px: usize,
    /// Standard deviation of the additive pixel noise.
    pub noise_sd: f64,
    pub seed: u64,
    /// Reaction time at zero decision margin; a certain decision takes `min_rt_ms`.
    pub max_rt_ms: u64,
    pub min_rt_ms: u64,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig {
            output_side_px: 96,
            noise_sd: 0.5,
            seed: 0,
            max_rt_ms: 1000,
            min_rt_ms: 300,
        }
    }
}

const TEMPLATE_CACHE_LIMIT: usize = 512;
const FRAME_PERIOD_MS: f64 = 1000.0 / 30.0;

// per answer key, one percept per observation time
type Candidates = Vec<(Key, Vec<Vec<f64>>)>;

/// Ideal-observer responder for one condition.
#[derive(Clone, Debug)]
pub struct IdealObserver {
    pipeline: Pipeline,
    config: ObserverConfig,
    templates: HashMap<String, Candidates>,
}

impl IdealObserver {
    pub fn new(condition: &Condition, config: ObserverConfig) -> Result<Self> {
        if config.output_side_px == 0 || !(config.noise_sd >= 0.0 && config.noise_sd.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad observer config {config:?}")));
        }
        Ok(IdealObserver {
            pipeline: Pipeline::with_output_size(condition, config.output_side_px)?,
            config,
            templates: HashMap::new(),
        })
    }

    pub fn condition(&self) -> &Condition {
        self.pipeline.condition()
    }

    /// Times after which the observer looks at the stimulus.
    pub fn observation_times(stimulus: &Stimulus) -> Vec<u64> {
        let onset = stimulus.timeline.onset_ms();
        match &stimulus.spec.params {
            StimulusParams::TimeResolution { gap_ms, flash_ms, .. } => {
                let span = 2 * flash_ms + gap_ms + 100;
                let frames = (span as f64 / FRAME_PERIOD_MS).ceil() as u64;
                (0..=frames).map(|k| onset + (k as f64 * FRAME_PERIOD_MS).round() as u64).collect()
            }
            StimulusParams::MotionPerception { .. } => (1..=5).map(|k| onset + 100 * k).collect(),
            _ => vec![onset],
        }
    }

    /// Noise-free phosphenized views of `stimulus` at `times`.
    pub fn percepts(&self, stimulus: &Stimulus, times: &[u64]) -> Result<Vec<Vec<f64>>> {
        times
            .iter()
            .map(|&t| {
                let source = stimulus_frame(&stimulus.spec, &stimulus.timeline, t)?;
                Ok(self.pipeline.run(&source, HeadPose::CENTER)?.frame.into_data())
            })
            .collect()
    }

    fn candidates(&mut self, stimulus: &Stimulus, times: &[u64]) -> Result<Candidates> {
        let key = cache_key(&stimulus.spec)?;
        if let Some(c) = self.templates.get(&key) {
            return Ok(c.clone());
        }
        let setup = stimulus.spec.setup();
        let mut out = Vec::new();
        for &answer in stimulus.spec.answer_keys() {
            let Some(spec) = stimulus.spec.with_answer(answer) else {
                continue;
            };
            let candidate = setup.build(spec.params, spec.rng_seed)?;
            out.push((answer, self.percepts(&candidate, times)?));
        }
        if self.templates.len() >= TEMPLATE_CACHE_LIMIT {
            self.templates.clear();
        }
        self.templates.insert(key, out.clone());
        Ok(out)
    }

    /// The observer's answer and decision margin in [0, 1].
    pub fn decide(&mut self, stimulus: &Stimulus) -> Result<(Key, f64)> {
        let times = Self::observation_times(stimulus);
        let mut observed = self.percepts(stimulus, &times)?;
        if self.config.noise_sd > 0.0 {
            let mut rng = trial_rng(self.config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ stimulus.spec.rng_seed);
            for view in &mut observed {
                for v in view.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v += self.config.noise_sd * z;
                }
            }
        }
        let candidates = self.candidates(stimulus, &times)?;
        match stimulus.spec.family() {
            TestFamily::Landolt => best_by_ncc(&observed, &candidates),
            _ => best_by_sse(&observed, &candidates),
        }
    }
}

// candidates depend on the seed only through the motion pattern
fn cache_key(spec: &StimulusSpec) -> Result<String> {
    let mut spec = spec.clone();
    if spec.family() != TestFamily::Motion {
        spec.rng_seed = 0;
    }
    // the answer itself must not be part of the key
    spec = spec.with_answer(spec.answer_keys()[0]).expect("first answer key is valid");
    Ok(serde_json::to_string(&spec)?)
}

impl Responder for IdealObserver {
    fn respond(&mut self, trial: &TrialContext<'_>) -> Result<Reaction> {
        let (key, margin) = self.decide(trial.stimulus)?;
        let span = self.config.max_rt_ms.saturating_sub(self.config.min_rt_ms) as f64;
        let rt = self.config.min_rt_ms + (span * (1.0 - margin)).round() as u64;
        Ok(Reaction::key(key, rt.min(trial.stimulus.spec.timing.response_window_ms)))
    }
}

/// Phosphenized Landolt templates for the four orientations, in tie-break order.
pub fn landolt_templates(pipeline: &Pipeline, scene_deg: f64, px_per_deg: f64, gap_arcmin: f64) -> Result<Vec<(Key, Frame)>> {
    Direction::ALL
        .iter()
        .map(|&d| {
            let source = crate::stimuli::landolt_frame(scene_deg, px_per_deg, gap_arcmin, d)?;
            Ok((d, pipeline.run(&source, HeadPose::CENTER)?.frame))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::{run_block, summarize, BlockConfig};
    use crate::stimuli::StimulusSetup;

    #[test]
    fn ncc_basics() {
        let a = [0.0, 1.0, 2.0, 3.0];
        assert!((ncc(&a, &a) - 1.0).abs() < 1e-12);
        assert!((ncc(&a, &[3.0, 2.0, 1.0, 0.0]) + 1.0).abs() < 1e-12);
        assert_eq!(ncc(&a, &[0.5; 4]), 0.0);
    }

    #[test]
    fn noiseless_large_c_is_recognized() {
        let cond = Condition::new(1000, 10.0).unwrap();
        let pipeline = Pipeline::with_output_size(&cond, 96).unwrap();
        let templates = landolt_templates(&pipeline, 10.0, 3.0, 100.0).unwrap();
        for (d, frame) in &templates {
            assert_eq!(ideal_observer(frame, &templates).unwrap(), *d);
        }
    }

    #[test]
    fn uniform_percept_takes_first_candidate() {
        let cond = Condition::new(100, 10.0).unwrap();
        let pipeline = Pipeline::with_output_size(&cond, 48).unwrap();
        let templates = landolt_templates(&pipeline, 10.0, 3.0, 60.0).unwrap();
        let gray = Frame::filled(48, 48, 4.8, 0.5).unwrap();
        assert_eq!(ideal_observer(&gray, &templates).unwrap(), Direction::Up);
    }

    #[test]
    fn observer_is_deterministic_and_sees_light() {
        let cond = Condition::standard("C5").unwrap();
        let config = BlockConfig::new("io", TestFamily::Light, cond.clone(), 3).unwrap();
        let mut a = IdealObserver::new(&cond, ObserverConfig::default()).unwrap();
        let mut b = IdealObserver::new(&cond, ObserverConfig::default()).unwrap();
        let block_a = run_block(config.clone(), &mut a).unwrap();
        let block_b = run_block(config, &mut b).unwrap();
        assert_eq!(block_a, block_b);
        assert!(summarize(&block_a.records).unwrap().performance_pct >= 95.0);
    }

    #[test]
    fn reaction_time_within_bounds() {
        let cond = Condition::standard("C1").unwrap();
        let stim = StimulusSetup::new(10.0, 3.0).unwrap().light_location(Direction::Left, 5).unwrap();
        let mut obs = IdealObserver::new(&cond, ObserverConfig::default()).unwrap();
        let ctx = TrialContext {
            session_id: "x",
            condition: &cond,
            trial_index: 0,
            stimulus: &stim,
        };
        let r = obs.respond(&ctx).unwrap();
        let rt = r.rt_ms.unwrap();
        assert!((300..=1000).contains(&rt));
        assert_eq!(r.response.key(), Some(Direction::Left));
    }
}
