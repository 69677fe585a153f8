//! Trial blocks: sequencing, response capture, reaction times, trial logs and summaries.
//!
//! Trial log CSV columns: `session_id,test,condition,trial,stimulus_json,response,correct,rt_ms`.
//! `response` is a key name or `timeout`; `rt_ms` is empty on timeouts.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acuity::{estimate_acuity, AcuityEstimate, Staircase, StaircaseRule};
use crate::condition::Condition;
use crate::error::{Error, Result};
use crate::stats::describe::{mean, sample_sd};
use crate::stimuli::{correct_response, random_stimulus, trial_rng, Key, Stimulus, StimulusSetup, StimulusSpec, TestFamily, Timing};

pub const DEFAULT_TRIALS: usize = 24;
pub const DEFAULT_SRC_PX_PER_DEG: f64 = 3.0;
pub const INTER_TRIAL_INTERVAL_MS: u64 = 1000;

pub const CSV_HEADER: [&str; 8] = [
    "session_id",
    "test",
    "condition",
    "trial",
    "stimulus_json",
    "response",
    "correct",
    "rt_ms",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Response {
    Key(Key),
    Timeout,
}

impl Response {
    pub fn key(self) -> Option<Key> {
        match self {
            Response::Key(k) => Some(k),
            Response::Timeout => None,
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Key(k) => f.write_str(k.as_str()),
            Response::Timeout => f.write_str("timeout"),
        }
    }
}

impl FromStr for Response {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "timeout" => Ok(Response::Timeout),
            other => other.parse().map(Response::Key),
        }
    }
}

impl Serialize for Response {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Response {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub session_id: String,
    pub test: TestFamily,
    pub condition: String,
    pub trial: usize,
    pub stimulus: StimulusSpec,
    pub response: Response,
    pub correct: bool,
    /// Onset to first key press; `None` on timeout.
    pub rt_ms: Option<u64>,
}

impl TrialRecord {
    /// Checks the record's internal consistency.
    pub fn validate(&self) -> Result<()> {
        if self.stimulus.family() != self.test {
            return Err(Error::InvalidParameter(format!(
                "test {} does not match a {} stimulus",
                self.test,
                self.stimulus.family()
            )));
        }
        match (self.response, self.rt_ms) {
            (Response::Key(_), None) => return Err(Error::InvalidParameter("key response without reaction time".into())),
            (Response::Timeout, Some(_)) => return Err(Error::InvalidParameter("timeout with a reaction time".into())),
            (Response::Key(_), Some(rt)) if rt > self.stimulus.timing.response_window_ms => {
                return Err(Error::InvalidParameter(format!("reaction time {rt} ms exceeds the response window")))
            }
            _ => {}
        }
        if self.correct != (self.response.key() == Some(correct_response(&self.stimulus).key)) {
            return Err(Error::InvalidParameter("correct flag disagrees with the response".into()));
        }
        Ok(())
    }
}

/// What a responder did on one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reaction {
    pub response: Response,
    pub rt_ms: Option<u64>,
}

impl Reaction {
    pub fn key(key: Key, rt_ms: u64) -> Self {
        Reaction {
            response: Response::Key(key),
            rt_ms: Some(rt_ms),
        }
    }

    pub fn timeout() -> Self {
        Reaction {
            response: Response::Timeout,
            rt_ms: None,
        }
    }
}

/// Everything a responder may look at for one trial.
#[derive(Clone, Copy, Debug)]
pub struct TrialContext<'a> {
    pub session_id: &'a str,
    pub condition: &'a Condition,
    pub trial_index: usize,
    pub stimulus: &'a Stimulus,
}

/// Source of responses: the ideal observer, a scripted policy or a live channel.
/// An `Err` means the channel is gone; the block stops and is flagged aborted.
pub trait Responder {
    fn respond(&mut self, trial: &TrialContext<'_>) -> Result<Reaction>;
}

impl<F: FnMut(&TrialContext<'_>) -> Result<Reaction>> Responder for F {
    fn respond(&mut self, trial: &TrialContext<'_>) -> Result<Reaction> {
        self(trial)
    }
}

/// Responder that never answers.
#[derive(Clone, Copy, Debug, Default)]
pub struct Silent;

impl Responder for Silent {
    fn respond(&mut self, _: &TrialContext<'_>) -> Result<Reaction> {
        Ok(Reaction::timeout())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockConfig {
    pub session_id: String,
    pub family: TestFamily,
    pub condition: Condition,
    pub n_trials: usize,
    pub seed: u64,
    pub setup: StimulusSetup,
    pub staircase: StaircaseRule,
    pub start_logmar: f64,
}

impl BlockConfig {
    /// Defaults: 24 trials; the scene spans the condition's field of view at
    /// 3 px/deg; the Landolt staircase starts at 2.0 logMAR or its ceiling.
    pub fn new(session_id: impl Into<String>, family: TestFamily, condition: Condition, seed: u64) -> Result<Self> {
        condition.validate()?;
        let setup = StimulusSetup::new(condition.fov_deg, DEFAULT_SRC_PX_PER_DEG)?;
        let staircase = StaircaseRule::for_scene(setup.scene_deg);
        Ok(BlockConfig {
            session_id: session_id.into(),
            family,
            condition,
            n_trials: DEFAULT_TRIALS,
            seed,
            setup,
            staircase,
            start_logmar: staircase.default_start(),
        })
    }

    pub fn with_trials(mut self, n_trials: usize) -> Self {
        self.n_trials = n_trials;
        self
    }

    pub fn with_src_px_per_deg(mut self, px_per_deg: f64) -> Result<Self> {
        self.setup = StimulusSetup::new(self.setup.scene_deg, px_per_deg)?.with_timing(self.setup.timing);
        Ok(self)
    }

    pub fn with_timing(mut self, timing: Timing) -> Self {
        self.setup = self.setup.with_timing(timing);
        self
    }
}

/// Step-wise block state machine; [`run_block`] drives it with a synchronous
/// responder, the session service drives it from socket events.
#[derive(Clone, Debug)]
pub struct BlockRunner {
    config: BlockConfig,
    rng: ChaCha8Rng,
    staircase: Option<Staircase>,
    pending: Option<Stimulus>,
    records: Vec<TrialRecord>,
    aborted: bool,
}

impl BlockRunner {
    pub fn new(config: BlockConfig) -> Result<Self> {
        if config.n_trials == 0 {
            return Err(Error::InvalidParameter("a block needs at least one trial".into()));
        }
        let staircase = match config.family {
            TestFamily::Landolt => Some(Staircase::new(config.start_logmar, config.staircase)?),
            _ => None,
        };
        Ok(BlockRunner {
            rng: trial_rng(config.seed),
            staircase,
            pending: None,
            records: Vec::with_capacity(config.n_trials),
            aborted: false,
            config,
        })
    }

    pub fn config(&self) -> &BlockConfig {
        &self.config
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn trial_index(&self) -> usize {
        self.records.len()
    }

    pub fn is_done(&self) -> bool {
        self.aborted || self.records.len() >= self.config.n_trials
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted
    }

    /// The current trial's stimulus, drawn on first call; `None` once the block is over.
    pub fn next_stimulus(&mut self) -> Result<Option<&Stimulus>> {
        if self.is_done() {
            return Ok(None);
        }
        if self.pending.is_none() {
            let gap = self.staircase.as_ref().map(Staircase::gap_arcmin);
            self.pending = Some(random_stimulus(self.config.family, &self.config.setup, gap, &mut self.rng)?);
        }
        Ok(self.pending.as_ref())
    }

    /// Scores the pending trial. Keys that are not answers for the family are
    /// rejected; reaction times beyond the window count as timeouts.
    pub fn record(&mut self, reaction: Reaction) -> Result<&TrialRecord> {
        let stimulus = self
            .pending
            .take()
            .ok_or_else(|| Error::InvalidParameter("no trial in progress".into()))?;
        let window = stimulus.spec.timing.response_window_ms;
        let (response, rt_ms) = match (reaction.response, reaction.rt_ms) {
            (Response::Key(k), Some(rt)) if rt <= window => {
                if !stimulus.spec.answer_keys().contains(&k) {
                    let err = Error::InvalidParameter(format!("{k} is not an answer for the {} test", self.config.family));
                    self.pending = Some(stimulus);
                    return Err(err);
                }
                (Response::Key(k), Some(rt))
            }
            (Response::Key(_), None) => {
                self.pending = Some(stimulus);
                return Err(Error::InvalidParameter("key response without reaction time".into()));
            }
            _ => (Response::Timeout, None),
        };
        let correct = response.key() == Some(stimulus.correct.key);
        if let Some(stair) = self.staircase.as_mut() {
            stair.update(correct);
        }
        self.records.push(TrialRecord {
            session_id: self.config.session_id.clone(),
            test: self.config.family,
            condition: self.config.condition.display_label(),
            trial: self.records.len(),
            stimulus: stimulus.spec,
            response,
            correct,
            rt_ms,
        });
        Ok(self.records.last().expect("just pushed"))
    }

    /// Voids the pending trial and ends the block.
    pub fn abort(&mut self) {
        self.pending = None;
        self.aborted = true;
    }

    pub fn finish(self) -> Block {
        Block {
            session_id: self.config.session_id,
            test: self.config.family,
            condition: self.config.condition.display_label(),
            records: self.records,
            aborted: self.aborted,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub session_id: String,
    pub test: TestFamily,
    pub condition: String,
    pub records: Vec<TrialRecord>,
    pub aborted: bool,
}

impl Block {
    pub fn report(&self) -> Result<BlockReport> {
        BlockReport::from_records(&self.records, self.aborted)
    }
}

/// Runs a whole block against `responder`. A responder error keeps the
/// completed records and flags the block aborted.
pub fn run_block(config: BlockConfig, responder: &mut dyn Responder) -> Result<Block> {
    let mut runner = BlockRunner::new(config)?;
    loop {
        let trial_index = runner.trial_index();
        let Some(stimulus) = runner.next_stimulus()?.cloned() else {
            break;
        };
        let ctx = TrialContext {
            session_id: &runner.config.session_id,
            condition: &runner.config.condition,
            trial_index,
            stimulus: &stimulus,
        };
        match responder.respond(&ctx) {
            Ok(reaction) => {
                runner.record(reaction)?;
            }
            Err(_) => runner.abort(),
        }
    }
    Ok(runner.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub n_trials: usize,
    pub n_correct: usize,
    pub performance_pct: f64,
    /// Over trials answered with a key; `None` when there are none.
    pub mean_rt_s: Option<f64>,
    /// Sample standard deviation; `None` with fewer than two answered trials.
    pub sd_rt_s: Option<f64>,
}

pub fn summarize(records: &[TrialRecord]) -> Result<BlockSummary> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let n_correct = records.iter().filter(|r| r.correct).count();
    let rts: Vec<f64> = records.iter().filter_map(|r| r.rt_ms).map(|ms| ms as f64 / 1000.0).collect();
    Ok(BlockSummary {
        n_trials: records.len(),
        n_correct,
        performance_pct: 100.0 * n_correct as f64 / records.len() as f64,
        mean_rt_s: (!rts.is_empty()).then(|| mean(&rts)),
        sd_rt_s: (rts.len() >= 2).then(|| sample_sd(&rts)),
    })
}

/// One block's entry in the session summary JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub session_id: String,
    pub test: TestFamily,
    pub condition: String,
    pub aborted: bool,
    pub summary: BlockSummary,
    /// Landolt blocks only.
    pub acuity: Option<AcuityEstimate>,
}

impl BlockReport {
    /// Records must come from a single block.
    pub fn from_records(records: &[TrialRecord], aborted: bool) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyRecords)?;
        if let Some(r) = records
            .iter()
            .find(|r| r.session_id != first.session_id || r.test != first.test || r.condition != first.condition)
        {
            return Err(Error::MixedRecords(format!(
                "blocks ({}, {}, {}) and ({}, {}, {})",
                first.session_id, first.test, first.condition, r.session_id, r.test, r.condition
            )));
        }
        let acuity = match first.test {
            TestFamily::Landolt => Some(estimate_acuity(records)?),
            _ => None,
        };
        Ok(BlockReport {
            session_id: first.session_id.clone(),
            test: first.test,
            condition: first.condition.clone(),
            aborted,
            summary: summarize(records)?,
            acuity,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub blocks: Vec<BlockReport>,
}

impl SessionSummary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Splits records into blocks keyed by (session, test, condition), in order of first appearance.
pub fn group_blocks(records: &[TrialRecord]) -> Vec<Vec<TrialRecord>> {
    let mut blocks: Vec<Vec<TrialRecord>> = Vec::new();
    for r in records {
        match blocks
            .iter_mut()
            .find(|b| b[0].session_id == r.session_id && b[0].test == r.test && b[0].condition == r.condition)
        {
            Some(b) => b.push(r.clone()),
            None => blocks.push(vec![r.clone()]),
        }
    }
    blocks
}

/// Summary rebuilt from a trial log; the aborted flag is not stored in logs.
pub fn summary_from_records(records: &[TrialRecord]) -> Result<SessionSummary> {
    let blocks = group_blocks(records)
        .iter()
        .map(|b| BlockReport::from_records(b, false))
        .collect::<Result<_>>()?;
    Ok(SessionSummary { blocks })
}

pub fn write_records<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let stimulus = serde_json::to_string(&r.stimulus)?;
        let trial = r.trial.to_string();
        let response = r.response.to_string();
        let rt = r.rt_ms.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            r.session_id.as_str(),
            r.test.as_str(),
            r.condition.as_str(),
            &trial,
            &stimulus,
            &response,
            if r.correct { "true" } else { "false" },
            &rt,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_to_csv(records: &[TrialRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Parses a trial log; errors name the offending line.
pub fn read_records<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut rows = rdr.records();
    let header = rows
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?
        .map_err(|e| csv_parse_error(e, 1))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {:?}", CSV_HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in rows {
        let row = row.map_err(|e| csv_parse_error(e, 0))?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |message: String| Error::Parse { line, message };
        if row.len() != CSV_HEADER.len() {
            return Err(fail(format!("expected {} fields, got {}", CSV_HEADER.len(), row.len())));
        }
        let record = TrialRecord {
            session_id: row[0].to_string(),
            test: row[1].parse().map_err(|e: Error| fail(e.to_string()))?,
            condition: row[2].to_string(),
            trial: row[3].parse().map_err(|_| fail(format!("bad trial index {:?}", &row[3])))?,
            stimulus: serde_json::from_str(&row[4]).map_err(|e| fail(format!("bad stimulus_json: {e}")))?,
            response: row[5].parse().map_err(|_| fail(format!("bad response {:?}", &row[5])))?,
            correct: match &row[6] {
                "true" => true,
                "false" => false,
                other => return Err(fail(format!("bad correct flag {other:?}"))),
            },
            rt_ms: match &row[7] {
                "" => None,
                v => Some(v.parse().map_err(|_| fail(format!("bad rt_ms {v:?}")))?),
            },
        };
        record.validate().map_err(|e| fail(e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

fn csv_parse_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
