//! Stream elements: per-day histograms, validated stream prefixes and the
//! per-day release records the pipeline emits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default aggregation width: one bin per 10 minutes.
pub const DEFAULT_BIN_WIDTH_MINUTES: u32 = 10;
/// Bins per day at the default aggregation width.
pub const DEFAULT_BINS_PER_DAY: usize = 144;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("day {0} is not consecutive with the previous day")]
    NonConsecutiveDays(u32),
    #[error("day {0} has a different bin count or bin width than day 1")]
    RaggedBins(u32),
    #[error("day {0} contains a negative count")]
    NegativeCount(u32),
    #[error("day {0} contains a non-finite value")]
    NonFiniteValue(u32),
    #[error("day {0} has no bins")]
    EmptyHistogram(u32),
    #[error("day index must be >= 1")]
    InvalidDay,
    #[error("bin width must be positive")]
    InvalidBinWidth,
}

/// One day of aggregated values, one real value per time slot.
///
/// Raw histograms are non-negative; released histograms may carry negative
/// bins after noise, so the non-negativity check lives in [`validate_stream`]
/// rather than in the constructor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayHistogram {
    day: u32,
    bins: Vec<f64>,
    bin_width_minutes: u32,
}

impl DayHistogram {
    pub fn new(day: u32, bins: Vec<f64>, bin_width_minutes: u32) -> Result<Self, StreamError> {
        if day == 0 {
            return Err(StreamError::InvalidDay);
        }
        if bin_width_minutes == 0 {
            return Err(StreamError::InvalidBinWidth);
        }
        if bins.is_empty() {
            return Err(StreamError::EmptyHistogram(day));
        }
        if bins.iter().any(|v| !v.is_finite()) {
            return Err(StreamError::NonFiniteValue(day));
        }
        Ok(Self {
            day,
            bins,
            bin_width_minutes,
        })
    }

    /// Histogram at the default 10-minute width.
    pub fn with_default_width(day: u32, bins: Vec<f64>) -> Result<Self, StreamError> {
        Self::new(day, bins, DEFAULT_BIN_WIDTH_MINUTES)
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn bin_width_minutes(&self) -> u32 {
        self.bin_width_minutes
    }

    /// Same values, different day label. Used when a non-sampled day repeats
    /// the last release.
    pub fn relabel(&self, day: u32) -> Self {
        Self {
            day,
            bins: self.bins.clone(),
            bin_width_minutes: self.bin_width_minutes,
        }
    }

    /// Same shape and day, replacement values. Panics if lengths differ or a
    /// value is non-finite; callers only pass values derived from `self`.
    pub(crate) fn with_bins(&self, bins: Vec<f64>) -> Self {
        assert_eq!(bins.len(), self.bins.len());
        debug_assert!(bins.iter().all(|v| v.is_finite()));
        Self {
            day: self.day,
            bins,
            bin_width_minutes: self.bin_width_minutes,
        }
    }

    /// Copy with every bin clamped to `>= 0`. Applied at export only.
    pub fn clamped_non_negative(&self) -> Self {
        Self {
            day: self.day,
            bins: self.bins.iter().map(|v| v.max(0.0)).collect(),
            bin_width_minutes: self.bin_width_minutes,
        }
    }
}

/// A validated stream prefix `(D_1, ..., D_t)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StreamPrefix {
    histograms: Vec<DayHistogram>,
}

impl StreamPrefix {
    /// Builds and validates a prefix.
    pub fn new(histograms: Vec<DayHistogram>) -> Result<Self, StreamError> {
        validate_stream(Self { histograms })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn histograms(&self) -> &[DayHistogram] {
        &self.histograms
    }

    pub fn len(&self) -> usize {
        self.histograms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histograms.is_empty()
    }

    /// Bin count shared by every day, `None` for an empty prefix.
    pub fn bins_per_day(&self) -> Option<usize> {
        self.histograms.first().map(DayHistogram::len)
    }

    pub fn into_histograms(self) -> Vec<DayHistogram> {
        self.histograms
    }
}

/// Checks the prefix invariants: days numbered `1, 2, ...` without gaps,
/// uniform bin count and width, non-negative finite counts.
pub fn validate_stream(prefix: StreamPrefix) -> Result<StreamPrefix, StreamError> {
    let Some(first) = prefix.histograms.first() else {
        return Ok(prefix);
    };
    let (len, width) = (first.len(), first.bin_width_minutes());
    for (i, h) in prefix.histograms.iter().enumerate() {
        let expected = i as u32 + 1;
        if h.day != expected {
            return Err(StreamError::NonConsecutiveDays(h.day));
        }
        if h.bins.is_empty() {
            return Err(StreamError::EmptyHistogram(h.day));
        }
        if h.len() != len || h.bin_width_minutes != width {
            return Err(StreamError::RaggedBins(h.day));
        }
        if h.bins.iter().any(|v| !v.is_finite()) {
            return Err(StreamError::NonFiniteValue(h.day));
        }
        if h.bins.iter().any(|&v| v < 0.0) {
            return Err(StreamError::NegativeCount(h.day));
        }
    }
    Ok(prefix)
}

/// Output of one pipeline day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseRecord {
    pub day: u32,
    /// Final release: filter posterior on sampling days, filter prior otherwise.
    pub released: DayHistogram,
    /// Perturbed histogram before filtering. On non-sampled days this is the
    /// last sampling day's perturbed histogram, repeated verbatim.
    pub perturbed: DayHistogram,
    pub sampled: bool,
    pub epsilon_spent: f64,
    pub interval_next: u32,
    pub health_condition: f64,
    /// Number of buckets used for perturbation; present iff `sampled`.
    pub bucket_count: Option<usize>,
}
