//! Simulated prosthetic vision engine and visual-acuity experiment bench.
//!
//! The crate turns grayscale scenes into phosphene percepts for a given implant
//! condition (phosphene count × field of view), generates the five stimulus
//! families of the acuity battery, runs trial blocks against a responder,
//! scores Landolt-C acuity in logMAR and analyzes results with a two-way
//! ANOVA and Tukey HSD.

pub mod acuity;
pub mod analysis;
pub mod condition;
pub mod error;
pub mod frame;
pub mod map;
pub mod observer;
pub mod pipeline;
pub mod render;
pub mod session;
pub mod stats;
pub mod stimuli;

pub use analysis::{analyze, AnalysisReport, Measure};
pub use acuity::{estimate_acuity, gap_from_logmar, logmar_from_gap, schedule_block, AcuityEstimate, AcuityMethod, Staircase, StaircaseRule};
pub use condition::{Condition, HeadPose};
pub use error::{Error, Result};
pub use frame::Frame;
pub use map::{build_phosphene_map, pixels_per_phosphene, Phosphene, PhospheneMap};
pub use observer::{ideal_observer, IdealObserver, ObserverConfig};
pub use pipeline::{crop_viewport, phosphenize, Percept, Pipeline, PipelineParams, Viewport};
pub use render::{quantize, render, sample, PhospheneActivation, RenderParams};
pub use session::{
    read_records, run_block, summarize, write_records, Block, BlockConfig, BlockReport, BlockRunner, BlockSummary, Reaction,
    Responder, Response, SessionSummary, TrialContext, TrialRecord,
};
pub use stimuli::{Direction, Key, Stimulus, StimulusParams, StimulusSetup, StimulusSpec, TestFamily};
