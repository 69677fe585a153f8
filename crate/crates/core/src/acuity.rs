//! logMAR arithmetic, the adaptive Landolt-C staircase and acuity estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::session::TrialRecord;
use crate::stats::dist::{normal_cdf, normal_quantile};
use crate::stimuli::{StimulusParams, LANDOLT_DIAMETER_GAPS};

/// logMAR of a Landolt gap given in arcminutes.
pub fn logmar_from_gap(gap_arcmin: f64) -> Result<f64> {
    if !(gap_arcmin.is_finite() && gap_arcmin > 0.0) {
        return Err(Error::InvalidParameter(format!("gap must be positive, got {gap_arcmin}")));
    }
    Ok(gap_arcmin.log10())
}

/// Gap in arcminutes for a logMAR value.
pub fn gap_from_logmar(logmar: f64) -> f64 {
    10f64.powf(logmar)
}

/// Largest logMAR whose ring still fits a square scene of `scene_deg`.
pub fn max_logmar_for_scene(scene_deg: f64) -> f64 {
    (scene_deg * 60.0 / LANDOLT_DIAMETER_GAPS).log10()
}

/// Weighted up/down rule: step down after a correct answer, up after an error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaircaseRule {
    pub step_down: f64,
    pub step_up: f64,
    pub floor: f64,
    pub ceiling: f64,
}

impl Default for StaircaseRule {
    /// 0.1 down / 0.3 up converges near 75% correct, halfway between
    /// chance and perfect for four alternatives.
    fn default() -> Self {
        StaircaseRule {
            step_down: 0.1,
            step_up: 0.3,
            floor: 0.0,
            ceiling: 2.5,
        }
    }
}

impl StaircaseRule {
    /// Default rule with the ceiling lowered so the ring fits `scene_deg`.
    pub fn for_scene(scene_deg: f64) -> Self {
        let mut rule = StaircaseRule::default();
        // rounded down onto the level grid so the largest ring still fits
        let fit = (max_logmar_for_scene(scene_deg) * 1e9).floor() / 1e9;
        rule.ceiling = rule.ceiling.min(fit);
        rule
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.step_down > 0.0
            && self.step_up > 0.0
            && self.floor.is_finite()
            && self.ceiling.is_finite()
            && self.floor <= self.ceiling;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad staircase rule {self:?}")))
        }
    }

    /// Default starting level: 2.0 logMAR, or the ceiling when that is lower.
    pub fn default_start(&self) -> f64 {
        2.0f64.clamp(self.floor, self.ceiling)
    }
}

// keeps repeated ±0.1 steps on exact decimal levels
fn snap(level: f64) -> f64 {
    (level * 1e9).round() / 1e9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Staircase {
    rule: StaircaseRule,
    level: f64,
    last_step_up: Option<bool>,
    reversals: Vec<f64>,
    history: Vec<(f64, bool)>,
}

impl Staircase {
    pub fn new(start_logmar: f64, rule: StaircaseRule) -> Result<Self> {
        rule.validate()?;
        if !start_logmar.is_finite() {
            return Err(Error::InvalidParameter("start level must be finite".into()));
        }
        Ok(Staircase {
            rule,
            level: snap(start_logmar.clamp(rule.floor, rule.ceiling)),
            last_step_up: None,
            reversals: Vec::new(),
            history: Vec::new(),
        })
    }

    /// Level to present next.
    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn gap_arcmin(&self) -> f64 {
        gap_from_logmar(self.level)
    }

    pub fn rule(&self) -> &StaircaseRule {
        &self.rule
    }

    pub fn reversals(&self) -> &[f64] {
        &self.reversals
    }

    pub fn history(&self) -> &[(f64, bool)] {
        &self.history
    }

    /// Records the outcome at the current level and moves to the next one.
    pub fn update(&mut self, correct: bool) -> f64 {
        let step_up = !correct;
        if self.last_step_up.is_some_and(|prev| prev != step_up) {
            self.reversals.push(self.level);
        }
        self.history.push((self.level, correct));
        self.last_step_up = Some(step_up);
        let next = if correct {
            self.level - self.rule.step_down
        } else {
            self.level + self.rule.step_up
        };
        self.level = snap(next.clamp(self.rule.floor, self.rule.ceiling));
        self.level
    }
}

/// Sequence of presented levels for an `n_trials` staircase whose outcomes come
/// from `outcome(trial, level)`.
pub fn schedule_block(
    start_logmar: f64,
    n_trials: usize,
    rule: StaircaseRule,
    mut outcome: impl FnMut(usize, f64) -> bool,
) -> Result<Vec<f64>> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("a block needs at least one trial".into()));
    }
    let mut stair = Staircase::new(start_logmar, rule)?;
    let mut levels = Vec::with_capacity(n_trials);
    for trial in 0..n_trials {
        let level = stair.level();
        levels.push(level);
        stair.update(outcome(trial, level));
    }
    Ok(levels)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcuityMethod {
    Staircase,
    PsychometricFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcuityEstimate {
    pub logmar: f64,
    pub trials_used: usize,
    pub method: AcuityMethod,
}

/// Reversals averaged by the staircase estimate.
pub const REVERSALS_AVERAGED: usize = 8;
/// Fewer reversals than this switch to the psychometric fit.
pub const MIN_REVERSALS: usize = 4;
pub const GUESS_RATE: f64 = 0.25;
pub const LAPSE_RATE: f64 = 0.01;
pub const THRESHOLD_CRITERION: f64 = 0.625;

/// Reversal levels of a `(level, correct)` sequence: the level at each trial
/// whose outcome flips the step direction.
pub fn reversal_levels(trials: &[(f64, bool)]) -> Vec<f64> {
    trials
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| w[1].0)
        .collect()
}

/// Acuity from `(logmar, correct)` pairs in presentation order.
pub fn estimate_from_trials(trials: &[(f64, bool)]) -> Result<AcuityEstimate> {
    if trials.is_empty() {
        return Err(Error::EmptyRecords);
    }
    if trials.iter().any(|(l, _)| !l.is_finite()) {
        return Err(Error::InvalidParameter("levels must be finite".into()));
    }
    let reversals = reversal_levels(trials);
    if reversals.len() >= MIN_REVERSALS {
        let last = &reversals[reversals.len().saturating_sub(REVERSALS_AVERAGED)..];
        return Ok(AcuityEstimate {
            logmar: last.iter().sum::<f64>() / last.len() as f64,
            trials_used: trials.len(),
            method: AcuityMethod::Staircase,
        });
    }
    Ok(AcuityEstimate {
        logmar: psychometric_threshold(trials),
        trials_used: trials.len(),
        method: AcuityMethod::PsychometricFit,
    })
}

/// Acuity for one Landolt block. Records must all be Landolt trials from a single condition.
pub fn estimate_acuity(records: &[TrialRecord]) -> Result<AcuityEstimate> {
    let first = records.first().ok_or(Error::EmptyRecords)?;
    let mut trials = Vec::with_capacity(records.len());
    for r in records {
        if r.condition != first.condition {
            return Err(Error::MixedRecords(format!(
                "conditions {:?} and {:?}",
                first.condition, r.condition
            )));
        }
        match r.stimulus.params {
            StimulusParams::LandoltC { gap_arcmin, .. } => trials.push((logmar_from_gap(gap_arcmin)?, r.correct)),
            _ => return Err(Error::MixedRecords(format!("a {} trial into a Landolt estimate", r.test))),
        }
    }
    estimate_from_trials(&trials)
}

/// Probability correct at `level` under a cumulative-Gaussian psychometric
/// function with the fixed guess and lapse rates. Larger logMAR is easier.
pub fn psychometric(level: f64, mu: f64, sigma: f64) -> f64 {
    GUESS_RATE + (1.0 - GUESS_RATE - LAPSE_RATE) * normal_cdf((level - mu) / sigma)
}

fn log_likelihood(trials: &[(f64, bool)], mu: f64, sigma: f64) -> f64 {
    trials
        .iter()
        .map(|&(l, c)| {
            let p = psychometric(l, mu, sigma);
            if c {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

/// Maximum-likelihood fit by grid search followed by two refinement passes; returns the
/// level where the fitted curve crosses the threshold criterion. The location search is
/// bounded to one logMAR beyond the presented range, so degenerate all-correct or
/// all-wrong blocks give an estimate just beyond the tested sizes.
fn psychometric_threshold(trials: &[(f64, bool)]) -> f64 {
    let lo = trials.iter().map(|t| t.0).fold(f64::INFINITY, f64::min) - 1.0;
    let hi = trials.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let (ln_s_lo, ln_s_hi) = (0.02f64.ln(), 2.0f64.ln());

    let mut best = (f64::NEG_INFINITY, lo, 0.02);
    let search = |mu_range: (f64, f64), s_range: (f64, f64), best: &mut (f64, f64, f64)| {
        const STEPS: usize = 60;
        for i in 0..=STEPS {
            let mu = mu_range.0 + (mu_range.1 - mu_range.0) * i as f64 / STEPS as f64;
            for j in 0..=STEPS {
                let ln_s = s_range.0 + (s_range.1 - s_range.0) * j as f64 / STEPS as f64;
                let ll = log_likelihood(trials, mu, ln_s.exp());
                if ll > best.0 {
                    *best = (ll, mu, ln_s.exp());
                }
            }
        }
    };
    search((lo, hi), (ln_s_lo, ln_s_hi), &mut best);
    let mut mu_w = (hi - lo) / 60.0;
    let mut s_w = (ln_s_hi - ln_s_lo) / 60.0;
    for _ in 0..2 {
        let (mu, s) = (best.1, best.2.ln());
        search(
            ((mu - mu_w).max(lo), (mu + mu_w).min(hi)),
            ((s - s_w).max(ln_s_lo), (s + s_w).min(ln_s_hi)),
            &mut best,
        );
        mu_w /= 30.0;
        s_w /= 30.0;
    }
    let (_, mu, sigma) = best;
    let z = normal_quantile((THRESHOLD_CRITERION - GUESS_RATE) / (1.0 - GUESS_RATE - LAPSE_RATE));
    mu + sigma * z
}
