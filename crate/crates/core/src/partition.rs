//! Differentially private partitioning of a day into contiguous buckets.
//!
//! Bins are grouped left to right. A bucket keeps growing while its spread
//! stays within the drift threshold and its size within the size cap. A jump
//! between adjacent bins larger than the rapid-change threshold isolates both
//! endpoints in single-bin buckets so the jump survives averaging.
//!
//! The two value thresholds are perturbed with Laplace noise before use; the
//! bucket layout is therefore a private function of the data.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perturbation::laplace_sample;
use crate::stream::DayHistogram;

/// Lower bound applied to noisy thresholds.
pub const THRESHOLD_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("partition budget must be positive, got {0}")]
    NonPositiveBudget(f64),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionThresholds {
    /// Largest max-min spread allowed inside one bucket.
    pub t_d: f64,
    /// Largest jump allowed between adjacent bins of one bucket.
    pub t_r: f64,
    /// Largest bucket size, in bins.
    pub t_s: usize,
}

impl Default for PartitionThresholds {
    fn default() -> Self {
        Self {
            t_d: 30.0,
            t_r: 15.0,
            t_s: 4,
        }
    }
}

impl PartitionThresholds {
    pub fn validate(&self) -> Result<(), PartitionError> {
        if !(self.t_d > 0.0 && self.t_d.is_finite()) {
            return Err(PartitionError::InvalidThresholds("t_d must be > 0"));
        }
        if !(self.t_r > 0.0 && self.t_r.is_finite()) {
            return Err(PartitionError::InvalidThresholds("t_r must be > 0"));
        }
        if self.t_r > self.t_d {
            return Err(PartitionError::InvalidThresholds("t_r must not exceed t_d"));
        }
        if self.t_s == 0 {
            return Err(PartitionError::InvalidThresholds("t_s must be >= 1"));
        }
        Ok(())
    }
}

/// Contiguous run of bins `start..=end` and their values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub start: usize,
    pub end: usize,
    pub values: Vec<f64>,
}

impl Bucket {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }
}

/// Ordered buckets covering every bin exactly once.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BucketSet {
    buckets: Vec<Bucket>,
}

impl BucketSet {
    /// Builds buckets from inclusive index ranges over `values`. The ranges
    /// must tile `0..values.len()` in order.
    pub fn from_ranges(values: &[f64], ranges: &[(usize, usize)]) -> Self {
        let buckets = ranges
            .iter()
            .map(|&(start, end)| Bucket {
                start,
                end,
                values: values[start..=end].to_vec(),
            })
            .collect();
        let set = Self { buckets };
        debug_assert!(set.covers(values.len()));
        set
    }

    /// One bucket per bin.
    pub fn singletons(values: &[f64]) -> Self {
        let ranges: Vec<_> = (0..values.len()).map(|i| (i, i)).collect();
        Self::from_ranges(values, &ranges)
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    /// True if the buckets tile `0..n` in order without gaps or overlap.
    pub fn covers(&self, n: usize) -> bool {
        let mut next = 0;
        for b in &self.buckets {
            if b.start != next || b.end < b.start || b.values.len() != b.len() {
                return false;
            }
            next = b.end + 1;
        }
        next == n
    }

    /// Concatenated bucket values, in bin order.
    pub fn flatten(&self) -> Vec<f64> {
        self.buckets
            .iter()
            .flat_map(|b| b.values.iter().copied())
            .collect()
    }
}

/// Perturbs the drift and rapid-change thresholds with independent Laplace
/// draws of scale `alpha / (eps_partition / 2)` each, floored at
/// [`THRESHOLD_FLOOR`]. Returns `(t_hat_d, t_hat_r)`; the drift draw comes
/// first.
pub fn noisy_thresholds<R: Rng + ?Sized>(
    thresholds: &PartitionThresholds,
    eps_partition: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<(f64, f64), PartitionError> {
    if !(eps_partition > 0.0) {
        return Err(PartitionError::NonPositiveBudget(eps_partition));
    }
    let scale = alpha / (eps_partition / 2.0);
    let (z_d, z_r) = if scale > 0.0 && scale.is_finite() {
        (laplace_sample(scale, rng), laplace_sample(scale, rng))
    } else {
        (0.0, 0.0)
    };
    Ok((
        (thresholds.t_d + z_d).max(THRESHOLD_FLOOR),
        (thresholds.t_r + z_r).max(THRESHOLD_FLOOR),
    ))
}

/// Partition as inclusive index ranges; single left-to-right pass with
/// running min/max of the open bucket.
pub fn partition_ranges(
    values: &[f64],
    t_hat_d: f64,
    t_hat_r: f64,
    t_s: usize,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let Some(&first) = values.first() else {
        return out;
    };
    let t_s = t_s.max(1);
    // Start of the open bucket. `None` right after a rapid change, when the
    // previous bin already sits in a closed singleton.
    let mut open = Some(0usize);
    let (mut lo, mut hi) = (first, first);

    for i in 1..values.len() {
        let d = values[i];
        if (values[i - 1] - d).abs() > t_hat_r {
            if let Some(start) = open.take() {
                if i - 1 > start {
                    out.push((start, i - 2));
                }
                out.push((i - 1, i - 1));
            }
            out.push((i, i));
            continue;
        }
        match open {
            None => {
                open = Some(i);
                lo = d;
                hi = d;
            }
            Some(start) => {
                let (new_lo, new_hi) = (lo.min(d), hi.max(d));
                if new_hi - new_lo <= t_hat_d && i - start < t_s {
                    lo = new_lo;
                    hi = new_hi;
                } else {
                    out.push((start, i - 1));
                    open = Some(i);
                    lo = d;
                    hi = d;
                }
            }
        }
    }
    if let Some(start) = open {
        out.push((start, values.len() - 1));
    }
    out
}

/// Partitions raw values with already-noised thresholds.
pub fn dp_partition_values(values: &[f64], t_hat_d: f64, t_hat_r: f64, t_s: usize) -> BucketSet {
    BucketSet::from_ranges(values, &partition_ranges(values, t_hat_d, t_hat_r, t_s))
}

pub fn dp_partition(hist: &DayHistogram, t_hat_d: f64, t_hat_r: f64, t_s: usize) -> BucketSet {
    dp_partition_values(hist.bins(), t_hat_d, t_hat_r, t_s)
}

/// Mean of one bucket, with its bin range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketMean {
    pub start: usize,
    pub end: usize,
    pub mean: f64,
}

impl BucketMean {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub fn bucket_means(set: &BucketSet) -> Vec<BucketMean> {
    set.buckets()
        .iter()
        .map(|b| BucketMean {
            start: b.start,
            end: b.end,
            mean: b.values.iter().sum::<f64>() / b.values.len() as f64,
        })
        .collect()
}
