//! Post-processing of released histograms with a per-bin bootstrap particle
//! filter.
//!
//! Each bin is tracked independently with a random-walk process model and a
//! Laplace observation likelihood whose scale is the noise scale actually
//! used on that day. Sampling days release the posterior mean, other days
//! the prior (predicted) mean. The filter only ever sees released values and
//! their public noise scales.
//!
//! Draw order is fixed: bins in index order, particles in index order within
//! a bin, so a seed fully determines the output.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perturbation::laplace_sample;

/// Log-likelihoods below this underflow to zero in `f64`.
const LOG_UNDERFLOW: f64 = -745.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("filter has not seen an observation yet")]
    Uninitialized,
    #[error("observation has {got} bins, filter tracks {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid filter settings: {0}")]
    InvalidSettings(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSettings {
    pub enabled: bool,
    /// Particles per bin.
    pub particles: usize,
    /// Std-dev of the random-walk step between consecutive days.
    pub process_noise_std: f64,
}

impl Default for FilterSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            particles: 100,
            process_noise_std: 5.0,
        }
    }
}

impl FilterSettings {
    pub fn validate(&self) -> Result<(), FilterError> {
        if self.particles == 0 {
            return Err(FilterError::InvalidSettings("particles must be >= 1"));
        }
        if !(self.process_noise_std >= 0.0 && self.process_noise_std.is_finite()) {
            return Err(FilterError::InvalidSettings(
                "process_noise_std must be >= 0",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BinCloud {
    particles: Vec<f64>,
    weights: Vec<f64>,
}

impl BinCloud {
    fn mean(&self) -> f64 {
        self.particles
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| x * w)
            .sum()
    }

    fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

/// Outcome of a measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterUpdate {
    /// Posterior mean per bin.
    pub estimate: Vec<f64>,
    /// Bins whose likelihoods all underflowed; these fell back to the raw
    /// observation and uniform weights.
    pub degenerate_bins: usize,
    /// Bins that were resampled.
    pub resampled_bins: usize,
}

/// Per-bin particle clouds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleFilter {
    settings: FilterSettings,
    clouds: Vec<BinCloud>,
}

impl ParticleFilter {
    pub fn new(settings: FilterSettings) -> Result<Self, FilterError> {
        settings.validate()?;
        Ok(Self {
            settings,
            clouds: Vec::new(),
        })
    }

    pub fn is_initialized(&self) -> bool {
        !self.clouds.is_empty()
    }

    pub fn settings(&self) -> &FilterSettings {
        &self.settings
    }

    /// Weighted particle mean per bin.
    pub fn estimate(&self) -> Vec<f64> {
        self.clouds.iter().map(BinCloud::mean).collect()
    }

    /// Weights of one bin; exposed for invariant checks.
    pub fn weights(&self, bin: usize) -> Option<&[f64]> {
        self.clouds.get(bin).map(|c| c.weights.as_slice())
    }

    /// Random-walk step for every particle; returns the prior mean.
    pub fn predict<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>, FilterError> {
        if !self.is_initialized() {
            return Err(FilterError::Uninitialized);
        }
        let std = self.settings.process_noise_std;
        if std > 0.0 {
            for cloud in &mut self.clouds {
                for x in &mut cloud.particles {
                    let z: f64 = StandardNormal.sample(rng);
                    *x += std * z;
                }
            }
        }
        Ok(self.estimate())
    }

    /// Reweights by the Laplace likelihood of `observation`, resampling bins
    /// whose effective sample size drops below half the particle count.
    ///
    /// The first call initializes the clouds by drawing particles around the
    /// observation and returns the observation itself.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        observation: &[f64],
        scales: &[f64],
        rng: &mut R,
    ) -> Result<FilterUpdate, FilterError> {
        if scales.len() != observation.len() {
            return Err(FilterError::LengthMismatch {
                expected: observation.len(),
                got: scales.len(),
            });
        }
        if !self.is_initialized() {
            self.initialize(observation, scales, rng);
            return Ok(FilterUpdate {
                estimate: observation.to_vec(),
                degenerate_bins: 0,
                resampled_bins: 0,
            });
        }
        if observation.len() != self.clouds.len() {
            return Err(FilterError::LengthMismatch {
                expected: self.clouds.len(),
                got: observation.len(),
            });
        }

        let n = self.settings.particles;
        let mut estimate = Vec::with_capacity(observation.len());
        let (mut degenerate_bins, mut resampled_bins) = (0, 0);
        let mut log_w = vec![0.0; n];
        for ((cloud, &obs), &scale) in self.clouds.iter_mut().zip(observation).zip(scales) {
            for ((lw, &x), &w) in log_w.iter_mut().zip(&cloud.particles).zip(&cloud.weights) {
                *lw = w.ln() - (obs - x).abs() / scale;
            }
            let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(max > LOG_UNDERFLOW) {
                degenerate_bins += 1;
                reseed(cloud, obs, scale, rng);
                estimate.push(obs);
                continue;
            }
            let mut total = 0.0;
            for (w, lw) in cloud.weights.iter_mut().zip(&log_w) {
                *w = (lw - max).exp();
                total += *w;
            }
            cloud.weights.iter_mut().for_each(|w| *w /= total);
            debug_assert!((cloud.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);

            let mean = cloud.mean();
            if cloud.effective_sample_size() < n as f64 / 2.0 {
                systematic_resample(cloud, rng);
                resampled_bins += 1;
            }
            estimate.push(mean);
        }
        Ok(FilterUpdate {
            estimate,
            degenerate_bins,
            resampled_bins,
        })
    }

    fn initialize<R: Rng + ?Sized>(&mut self, observation: &[f64], scales: &[f64], rng: &mut R) {
        let n = self.settings.particles;
        self.clouds = observation
            .iter()
            .zip(scales)
            .map(|(&obs, &scale)| {
                let mut cloud = BinCloud {
                    particles: vec![obs; n],
                    weights: vec![1.0 / n as f64; n],
                };
                reseed(&mut cloud, obs, scale, rng);
                cloud
            })
            .collect();
    }
}

/// Resets a cloud to particles drawn from Laplace(obs, scale), equal weights.
fn reseed<R: Rng + ?Sized>(cloud: &mut BinCloud, obs: f64, scale: f64, rng: &mut R) {
    let n = cloud.particles.len();
    for x in &mut cloud.particles {
        *x = if scale > 0.0 && scale.is_finite() {
            obs + laplace_sample(scale, rng)
        } else {
            obs
        };
    }
    cloud.weights.iter_mut().for_each(|w| *w = 1.0 / n as f64);
}

/// Systematic resampling: one uniform offset, `n` evenly spaced pointers into
/// the cumulative weights.
fn systematic_resample<R: Rng + ?Sized>(cloud: &mut BinCloud, rng: &mut R) {
    let n = cloud.particles.len();
    let step = 1.0 / n as f64;
    let mut pointer = rng.random::<f64>() * step;
    let mut cumulative = cloud.weights[0];
    let mut source = 0;
    let mut resampled = Vec::with_capacity(n);
    for _ in 0..n {
        while pointer >= cumulative && source + 1 < n {
            source += 1;
            cumulative += cloud.weights[source];
        }
        resampled.push(cloud.particles[source]);
        pointer += step;
    }
    cloud.particles = resampled;
    cloud.weights.iter_mut().for_each(|w| *w = step);
}

/// Post-processing stage applied to every release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReleaseFilter {
    /// Pass-through: sampling days release the perturbed histogram, other
    /// days repeat it.
    Identity,
    Particle(ParticleFilter),
}

impl ReleaseFilter {
    pub fn from_settings(settings: FilterSettings) -> Result<Self, FilterError> {
        if settings.enabled {
            Ok(Self::Particle(ParticleFilter::new(settings)?))
        } else {
            Ok(Self::Identity)
        }
    }

    /// Estimate for a non-sampled day. `repeated` is the last perturbed
    /// release, used as-is by the identity filter.
    pub fn prior<R: Rng + ?Sized>(
        &mut self,
        repeated: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>, FilterError> {
        match self {
            Self::Identity => Ok(repeated.to_vec()),
            Self::Particle(pf) => pf.predict(rng),
        }
    }

    /// Estimate for a sampling day. The particle filter first propagates
    /// its clouds to the current day.
    pub fn posterior<R: Rng + ?Sized>(
        &mut self,
        observation: &[f64],
        scales: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>, FilterError> {
        match self {
            Self::Identity => Ok(observation.to_vec()),
            Self::Particle(pf) => {
                if pf.is_initialized() {
                    pf.predict(rng)?;
                }
                Ok(pf.update(observation, scales, rng)?.estimate)
            }
        }
    }
}
