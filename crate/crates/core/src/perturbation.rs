//! Laplace mechanism over bucket means and the seeded noise source shared by
//! the randomized stages.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::partition::BucketMean;

/// Sensitivity of the released values: heart rate spans 50..200 bpm, spread
/// over a 14-day window.
pub const DEFAULT_ALPHA: f64 = 150.0 / 14.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerturbationError {
    #[error("privacy budget must be positive, got {0}")]
    NonPositiveBudget(f64),
    #[error("sensitivity must be positive and finite, got {0}")]
    InvalidSensitivity(f64),
}

/// Seeded generator. Identical seeds give identical draw sequences.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    rng: ChaCha12Rng,
}

impl NoiseSource {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent source for a named sub-stream of this seed.
    pub fn derive(&self, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        Self {
            seed: self.seed,
            rng,
        }
    }
}

impl RngCore for NoiseSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// How the Laplace scale of a bucket is calibrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseCalibration {
    /// Every bucket mean gets scale `alpha / eps`, regardless of its size.
    #[default]
    PerBucket,
    /// A bucket of `k` bins gets scale `alpha / (k * eps)`: one changed bin
    /// moves the bucket mean by at most `alpha / k`.
    BucketAveraged,
}

impl std::str::FromStr for NoiseCalibration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per_bucket" => Ok(Self::PerBucket),
            "bucket_averaged" => Ok(Self::BucketAveraged),
            other => Err(format!(
                "unknown calibration `{other}` (expected per_bucket|bucket_averaged)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySpec {
    pub alpha: f64,
    pub calibration: NoiseCalibration,
}

impl Default for SensitivitySpec {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            calibration: NoiseCalibration::default(),
        }
    }
}

impl SensitivitySpec {
    pub fn validate(&self) -> Result<(), PerturbationError> {
        if self.alpha > 0.0 && self.alpha.is_finite() {
            Ok(())
        } else {
            Err(PerturbationError::InvalidSensitivity(self.alpha))
        }
    }

    /// Laplace scale for a bucket of `bucket_len` bins at budget `eps`.
    pub fn bucket_scale(&self, bucket_len: usize, eps: f64) -> f64 {
        match self.calibration {
            NoiseCalibration::PerBucket => self.alpha / eps,
            NoiseCalibration::BucketAveraged => self.alpha / (bucket_len.max(1) as f64 * eps),
        }
    }
}

/// Inverse-CDF transform of a uniform `u` in `(-0.5, 0.5)` into a
/// Laplace(0, scale) draw.
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// One Laplace(0, scale) draw. `scale` must be positive.
pub fn laplace_sample<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    debug_assert!(scale > 0.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        // u = -0.5 maps to an infinite draw
        if u > -0.5 {
            if u == 0.0 {
                return 0.0;
            }
            return laplace_from_uniform(u, scale);
        }
    }
}

/// Result of perturbing one day's buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedBins {
    /// Noisy bucket means broadcast back to bin resolution.
    pub bins: Vec<f64>,
    /// Laplace scale applied to each bin's bucket.
    pub scales: Vec<f64>,
}

/// Adds one Laplace draw to each bucket mean and broadcasts the noisy mean
/// to every bin of the bucket. Buckets are processed in order, one draw each.
pub fn perturb_buckets<R: Rng + ?Sized>(
    means: &[BucketMean],
    sensitivity: &SensitivitySpec,
    eps_perturb: f64,
    rng: &mut R,
) -> Result<PerturbedBins, PerturbationError> {
    if !(eps_perturb > 0.0) {
        return Err(PerturbationError::NonPositiveBudget(eps_perturb));
    }
    sensitivity.validate()?;
    let n = means.last().map_or(0, |m| m.end + 1);
    let mut bins = Vec::with_capacity(n);
    let mut scales = Vec::with_capacity(n);
    for m in means {
        let len = m.len();
        let scale = sensitivity.bucket_scale(len, eps_perturb);
        let noisy = if scale.is_finite() && scale > 0.0 {
            m.mean + laplace_sample(scale, rng)
        } else {
            m.mean
        };
        bins.extend(std::iter::repeat_n(noisy, len));
        scales.extend(std::iter::repeat_n(scale, len));
    }
    Ok(PerturbedBins { bins, scales })
}
