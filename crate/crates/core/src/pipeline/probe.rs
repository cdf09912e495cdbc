//! Instrumented access to raw histograms.
//!
//! The pipeline never hands a raw [`DayHistogram`] to a stage. It wraps the
//! day in a [`RawDay`] whose values can only be read by naming the reading
//! [`Stage`]; every read is reported to a [`RawProbe`].

use std::sync::Mutex;

use crate::stream::DayHistogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Sampling,
    BudgetAllocation,
    Partition,
    Perturbation,
    Filtering,
    FeatureExtraction,
}

impl Stage {
    /// Stages allowed to read raw values.
    pub fn is_private_mechanism(self) -> bool {
        matches!(self, Stage::Partition | Stage::Perturbation)
    }
}

pub trait RawProbe: Sync {
    fn touch(&self, stage: Stage, day: u32);
}

/// Probe that ignores every access.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoProbe;

impl RawProbe for NoProbe {
    fn touch(&self, _stage: Stage, _day: u32) {}
}

/// Probe that records every access.
#[derive(Debug, Default)]
pub struct RecordingProbe {
    log: Mutex<Vec<(Stage, u32)>>,
}

impl RecordingProbe {
    pub fn accesses(&self) -> Vec<(Stage, u32)> {
        self.log.lock().expect("probe lock").clone()
    }
}

impl RawProbe for RecordingProbe {
    fn touch(&self, stage: Stage, day: u32) {
        self.log.lock().expect("probe lock").push((stage, day));
    }
}

/// Probe that panics when a post-processing stage reads raw data.
#[derive(Debug, Default, Clone, Copy)]
pub struct PoisonedProbe;

impl RawProbe for PoisonedProbe {
    fn touch(&self, stage: Stage, day: u32) {
        assert!(
            stage.is_private_mechanism(),
            "stage {stage:?} read raw data on day {day}"
        );
    }
}

/// A raw day as seen by the pipeline. Shape metadata is public; values are
/// behind [`RawDay::values`].
pub struct RawDay<'a> {
    hist: &'a DayHistogram,
    probe: &'a dyn RawProbe,
}

impl<'a> RawDay<'a> {
    pub fn new(hist: &'a DayHistogram, probe: &'a dyn RawProbe) -> Self {
        Self { hist, probe }
    }

    pub fn day(&self) -> u32 {
        self.hist.day()
    }

    pub fn len(&self) -> usize {
        self.hist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hist.is_empty()
    }

    pub fn bin_width_minutes(&self) -> u32 {
        self.hist.bin_width_minutes()
    }

    pub fn values(&self, stage: Stage) -> &'a [f64] {
        self.probe.touch(stage, self.hist.day());
        self.hist.bins()
    }
}
