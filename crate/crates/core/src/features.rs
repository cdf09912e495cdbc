//! Heart-rhythm features of a released histogram and the bounded
//! health-condition score fed back to the sampler.
//!
//! Inputs are released histograms only, so feature extraction spends no
//! budget.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stream::DayHistogram;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("invalid feature thresholds: {0}")]
    InvalidThresholds(&'static str),
}

/// Event thresholds and per-feature tolerances. Defaults are illustrative,
/// not clinical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureThresholds {
    /// Adjacent-bin change counted as a rapid event.
    pub rapid_jump: f64,
    /// Spread within a drift window counted as a large drift.
    pub large_drift: f64,
    /// Drift window length, in bins.
    pub drift_window_bins: usize,
    pub hr_max: f64,
    pub hr_min: f64,
    pub n_r: f64,
    pub n_g: f64,
    pub n_h: f64,
    pub n_l: f64,
    /// Use `max{load, 1}` instead of `min{load, 1}`. Pins the score at 1 or
    /// above; kept for fidelity experiments.
    pub literal_max: bool,
}

impl Default for FeatureThresholds {
    fn default() -> Self {
        Self {
            rapid_jump: 30.0,
            large_drift: 50.0,
            drift_window_bins: 12,
            hr_max: 100.0,
            hr_min: 50.0,
            n_r: 3.0,
            n_g: 2.0,
            n_h: 12.0,
            n_l: 12.0,
            literal_max: false,
        }
    }
}

impl FeatureThresholds {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if !(self.hr_min < self.hr_max) {
            return Err(FeatureError::InvalidThresholds(
                "hr_min must be below hr_max",
            ));
        }
        if [self.n_r, self.n_g, self.n_h, self.n_l]
            .iter()
            .any(|n| !(*n > 0.0 && n.is_finite()))
        {
            return Err(FeatureError::InvalidThresholds("tolerances must be > 0"));
        }
        if self.drift_window_bins < 2 {
            return Err(FeatureError::InvalidThresholds(
                "drift_window_bins must be >= 2",
            ));
        }
        if !(self.rapid_jump >= 0.0 && self.large_drift >= 0.0) {
            return Err(FeatureError::InvalidThresholds(
                "event thresholds must be >= 0",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HealthFeatures {
    /// Adjacent-bin pairs whose change exceeds `rapid_jump`.
    pub h_r: usize,
    /// Non-overlapping drift windows whose spread exceeds `large_drift`.
    pub h_g: usize,
    /// Bins above `hr_max`.
    pub h_h: usize,
    /// Bins below `hr_min`.
    pub h_l: usize,
}

pub fn extract_features(released: &DayHistogram, th: &FeatureThresholds) -> HealthFeatures {
    extract_from_values(released.bins(), th)
}

pub fn extract_from_values(bins: &[f64], th: &FeatureThresholds) -> HealthFeatures {
    let h_r = bins
        .windows(2)
        .filter(|w| (w[1] - w[0]).abs() > th.rapid_jump)
        .count();
    let h_g = bins
        .chunks_exact(th.drift_window_bins.max(1))
        .filter(|w| {
            let (lo, hi) = w
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            hi - lo > th.large_drift
        })
        .count();
    HealthFeatures {
        h_r,
        h_g,
        h_h: bins.iter().filter(|&&v| v > th.hr_max).count(),
        h_l: bins.iter().filter(|&&v| v < th.hr_min).count(),
    }
}

/// Mean normalised feature load, capped at 1.
pub fn health_condition(f: &HealthFeatures, th: &FeatureThresholds) -> f64 {
    let load = 0.25
        * (f.h_r as f64 / th.n_r
            + f.h_g as f64 / th.n_g
            + f.h_h as f64 / th.n_h
            + f.h_l as f64 / th.n_l);
    if th.literal_max {
        load.max(1.0)
    } else {
        load.min(1.0)
    }
}
