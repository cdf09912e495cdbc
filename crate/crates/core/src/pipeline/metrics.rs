//! Utility metrics of a release against the true stream.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stream::{DayHistogram, ReleaseRecord, StreamPrefix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("gamma fraction must be positive")]
    InvalidGamma,
}

impl AsRef<[f64]> for DayHistogram {
    fn as_ref(&self) -> &[f64] {
        self.bins()
    }
}

fn check_shapes<A: AsRef<[f64]>, B: AsRef<[f64]>>(
    released: &[A],
    truth: &[B],
) -> Result<(), MetricsError> {
    if released.len() != truth.len() {
        return Err(MetricsError::ShapeMismatch(format!(
            "{} released days vs {} true days",
            released.len(),
            truth.len()
        )));
    }
    for (i, (r, t)) in released.iter().zip(truth).enumerate() {
        if r.as_ref().len() != t.as_ref().len() {
            return Err(MetricsError::ShapeMismatch(format!(
                "day {}: {} released bins vs {} true bins",
                i + 1,
                r.as_ref().len(),
                t.as_ref().len()
            )));
        }
    }
    Ok(())
}

fn day_abs(released: &[f64], truth: &[f64]) -> f64 {
    released.iter().zip(truth).map(|(r, t)| (r - t).abs()).sum()
}

fn day_rel(released: &[f64], truth: &[f64], gamma_fraction: f64) -> f64 {
    let gamma = gamma_fraction * truth.iter().sum::<f64>();
    released
        .iter()
        .zip(truth)
        .map(|(r, t)| (r - t).abs() / t.max(gamma))
        .sum()
}

/// Mean absolute error over every day and bin. Zero for an empty input.
pub fn mae<A: AsRef<[f64]>, B: AsRef<[f64]>>(
    released: &[A],
    truth: &[B],
) -> Result<f64, MetricsError> {
    check_shapes(released, truth)?;
    let (sum, n) = released
        .iter()
        .zip(truth)
        .fold((0.0, 0usize), |(s, n), (r, t)| {
            (s + day_abs(r.as_ref(), t.as_ref()), n + t.as_ref().len())
        });
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Mean relative error with a per-day floor `gamma = gamma_fraction * sum(truth_day)`
/// on the denominator.
pub fn mre<A: AsRef<[f64]>, B: AsRef<[f64]>>(
    released: &[A],
    truth: &[B],
    gamma_fraction: f64,
) -> Result<f64, MetricsError> {
    if !(gamma_fraction > 0.0) {
        return Err(MetricsError::InvalidGamma);
    }
    check_shapes(released, truth)?;
    let (sum, n) = released
        .iter()
        .zip(truth)
        .fold((0.0, 0usize), |(s, n), (r, t)| {
            (
                s + day_rel(r.as_ref(), t.as_ref(), gamma_fraction),
                n + t.as_ref().len(),
            )
        });
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayError {
    pub day: u32,
    pub mae: f64,
    pub mre: f64,
    pub mae_unfiltered: f64,
    pub mre_unfiltered: f64,
}

/// Utility of one run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UtilityReport {
    pub days: usize,
    /// Errors of the final (filtered) release.
    pub mae: f64,
    pub mre: f64,
    /// Errors of the perturbed release before filtering.
    pub mae_unfiltered: f64,
    pub mre_unfiltered: f64,
    pub per_day_errors: Vec<DayError>,
    /// Budget spent on each day, day 1 first.
    pub budget_trace: Vec<f64>,
    pub sample_days: Vec<u32>,
}

impl UtilityReport {
    pub fn from_records(
        records: &[ReleaseRecord],
        truth: &StreamPrefix,
        gamma_fraction: f64,
    ) -> Result<Self, MetricsError> {
        let truth = truth.histograms();
        let released: Vec<&[f64]> = records.iter().map(|r| r.released.bins()).collect();
        let perturbed: Vec<&[f64]> = records.iter().map(|r| r.perturbed.bins()).collect();
        let per_day_errors = records
            .iter()
            .zip(truth)
            .map(|(r, t)| {
                let n = t.len() as f64;
                DayError {
                    day: r.day,
                    mae: day_abs(r.released.bins(), t.bins()) / n,
                    mre: day_rel(r.released.bins(), t.bins(), gamma_fraction) / n,
                    mae_unfiltered: day_abs(r.perturbed.bins(), t.bins()) / n,
                    mre_unfiltered: day_rel(r.perturbed.bins(), t.bins(), gamma_fraction) / n,
                }
            })
            .collect();
        Ok(Self {
            days: records.len(),
            mae: mae(&released, truth)?,
            mre: mre(&released, truth, gamma_fraction)?,
            mae_unfiltered: mae(&perturbed, truth)?,
            mre_unfiltered: mre(&perturbed, truth, gamma_fraction)?,
            per_day_errors,
            budget_trace: records.iter().map(|r| r.epsilon_spent).collect(),
            sample_days: records
                .iter()
                .filter(|r| r.sampled)
                .map(|r| r.day)
                .collect(),
        })
    }
}
