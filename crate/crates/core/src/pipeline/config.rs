use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::AllocationParams;
use crate::features::FeatureThresholds;
use crate::filtering::FilterSettings;
use crate::partition::PartitionThresholds;
use crate::perturbation::SensitivitySpec;
use crate::sampling::SamplerParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationConfig {
    pub phi: f64,
    pub p_max: f64,
    /// `None` resolves to half the window budget.
    pub epsilon_max: Option<f64>,
    pub q: f64,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        Self {
            phi: 0.2,
            p_max: 0.6,
            epsilon_max: None,
            q: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    /// With partitioning off every bin is its own bucket and the whole
    /// allocation goes to perturbation.
    pub enabled: bool,
    pub thresholds: PartitionThresholds,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            thresholds: PartitionThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Sampling period of the `sample_fixed` baseline, in days.
    pub sample_fixed_k: u32,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { sample_fixed_k: 7 }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Window length in days.
    pub w: u32,
    /// Budget of any `w` consecutive days.
    pub epsilon: f64,
    pub allocation: AllocationConfig,
    pub sampler: SamplerParams,
    pub partition: PartitionConfig,
    pub sensitivity: SensitivitySpec,
    pub features: FeatureThresholds,
    pub filter: FilterSettings,
    /// MRE floor as a fraction of the day's true total.
    pub gamma_fraction: f64,
    pub baseline: BaselineConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            w: 14,
            epsilon: 3.0,
            allocation: AllocationConfig::default(),
            sampler: SamplerParams::default(),
            partition: PartitionConfig::default(),
            sensitivity: SensitivitySpec::default(),
            features: FeatureThresholds::default(),
            filter: FilterSettings::default(),
            gamma_fraction: 0.0005,
            baseline: BaselineConfig::default(),
            seed: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: e.to_string(),
        })
}

impl PipelineConfig {
    /// Allocation parameters with `epsilon_max` resolved.
    pub fn allocation_params(&self) -> AllocationParams {
        AllocationParams {
            phi: self.allocation.phi,
            p_max: self.allocation.p_max,
            epsilon_max: self.allocation.epsilon_max.unwrap_or(self.epsilon / 2.0),
            q: self.allocation.q,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        if self.w == 0 {
            return Err(ConfigError::Invalid("w must be >= 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ConfigError::Invalid("epsilon must be > 0".into()));
        }
        if !(self.gamma_fraction > 0.0) {
            return Err(ConfigError::Invalid("gamma_fraction must be > 0".into()));
        }
        if self.baseline.sample_fixed_k == 0 {
            return Err(ConfigError::Invalid(
                "baseline.sample_fixed_k must be >= 1".into(),
            ));
        }
        self.allocation_params()
            .validate()
            .map_err(|e| invalid(&e))?;
        self.sampler.validate().map_err(|e| invalid(&e))?;
        self.partition
            .thresholds
            .validate()
            .map_err(|e| invalid(&e))?;
        self.sensitivity.validate().map_err(|e| invalid(&e))?;
        self.features.validate().map_err(|e| invalid(&e))?;
        self.filter.validate().map_err(|e| invalid(&e))?;
        Ok(())
    }

    /// Sets one field by dotted key, e.g. `sampler.eta` or `partition.t_s`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let k = key;
        match key {
            "w" => self.w = parse(k, value)?,
            "epsilon" => self.epsilon = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "gamma_fraction" => self.gamma_fraction = parse(k, value)?,
            "allocation.phi" => self.allocation.phi = parse(k, value)?,
            "allocation.p_max" => self.allocation.p_max = parse(k, value)?,
            "allocation.epsilon_max" => {
                self.allocation.epsilon_max = match value.trim() {
                    "auto" => None,
                    v => Some(parse(k, v)?),
                }
            }
            "allocation.q" => self.allocation.q = parse(k, value)?,
            "sampler.theta_p" => self.sampler.theta_p = parse(k, value)?,
            "sampler.theta_i" => self.sampler.theta_i = parse(k, value)?,
            "sampler.theta_d" => self.sampler.theta_d = parse(k, value)?,
            "sampler.delta" => self.sampler.delta = parse(k, value)?,
            "sampler.eta" => self.sampler.eta = parse(k, value)?,
            "sampler.m" => self.sampler.m = parse(k, value)?,
            "sampler.max_interval" => self.sampler.max_interval = parse(k, value)?,
            "sampler.health_term_composition" => self.sampler.composition = parse(k, value)?,
            "partition.enabled" => self.partition.enabled = parse(k, value)?,
            "partition.t_d" => self.partition.thresholds.t_d = parse(k, value)?,
            "partition.t_r" => self.partition.thresholds.t_r = parse(k, value)?,
            "partition.t_s" => self.partition.thresholds.t_s = parse(k, value)?,
            "sensitivity.alpha" => self.sensitivity.alpha = parse(k, value)?,
            "sensitivity.calibration" => self.sensitivity.calibration = parse(k, value)?,
            "features.rapid_jump" => self.features.rapid_jump = parse(k, value)?,
            "features.large_drift" => self.features.large_drift = parse(k, value)?,
            "features.drift_window_bins" => self.features.drift_window_bins = parse(k, value)?,
            "features.hr_max" => self.features.hr_max = parse(k, value)?,
            "features.hr_min" => self.features.hr_min = parse(k, value)?,
            "features.n_r" => self.features.n_r = parse(k, value)?,
            "features.n_g" => self.features.n_g = parse(k, value)?,
            "features.n_h" => self.features.n_h = parse(k, value)?,
            "features.n_l" => self.features.n_l = parse(k, value)?,
            "features.literal_max" => self.features.literal_max = parse(k, value)?,
            "filter.enabled" => self.filter.enabled = parse(k, value)?,
            "filter.particles" => self.filter.particles = parse(k, value)?,
            "filter.process_noise_std" => self.filter.process_noise_std = parse(k, value)?,
            "baseline.sample_fixed_k" => self.baseline.sample_fixed_k = parse(k, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Every addressable key with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let composition = match self.sampler.composition {
            crate::sampling::HealthTermComposition::Max => "max",
            crate::sampling::HealthTermComposition::Min => "min",
        };
        let calibration = match self.sensitivity.calibration {
            crate::perturbation::NoiseCalibration::PerBucket => "per_bucket",
            crate::perturbation::NoiseCalibration::BucketAveraged => "bucket_averaged",
        };
        vec![
            ("w", self.w.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("seed", self.seed.to_string()),
            ("gamma_fraction", self.gamma_fraction.to_string()),
            ("allocation.phi", self.allocation.phi.to_string()),
            ("allocation.p_max", self.allocation.p_max.to_string()),
            (
                "allocation.epsilon_max",
                self.allocation
                    .epsilon_max
                    .map_or_else(|| "auto".to_string(), |v| v.to_string()),
            ),
            ("allocation.q", self.allocation.q.to_string()),
            ("sampler.theta_p", self.sampler.theta_p.to_string()),
            ("sampler.theta_i", self.sampler.theta_i.to_string()),
            ("sampler.theta_d", self.sampler.theta_d.to_string()),
            ("sampler.delta", self.sampler.delta.to_string()),
            ("sampler.eta", self.sampler.eta.to_string()),
            ("sampler.m", self.sampler.m.to_string()),
            (
                "sampler.max_interval",
                self.sampler.max_interval.to_string(),
            ),
            ("sampler.health_term_composition", composition.to_string()),
            ("partition.enabled", self.partition.enabled.to_string()),
            ("partition.t_d", self.partition.thresholds.t_d.to_string()),
            ("partition.t_r", self.partition.thresholds.t_r.to_string()),
            ("partition.t_s", self.partition.thresholds.t_s.to_string()),
            ("sensitivity.alpha", self.sensitivity.alpha.to_string()),
            ("sensitivity.calibration", calibration.to_string()),
            ("features.rapid_jump", self.features.rapid_jump.to_string()),
            (
                "features.large_drift",
                self.features.large_drift.to_string(),
            ),
            (
                "features.drift_window_bins",
                self.features.drift_window_bins.to_string(),
            ),
            ("features.hr_max", self.features.hr_max.to_string()),
            ("features.hr_min", self.features.hr_min.to_string()),
            ("features.n_r", self.features.n_r.to_string()),
            ("features.n_g", self.features.n_g.to_string()),
            ("features.n_h", self.features.n_h.to_string()),
            ("features.n_l", self.features.n_l.to_string()),
            (
                "features.literal_max",
                self.features.literal_max.to_string(),
            ),
            ("filter.enabled", self.filter.enabled.to_string()),
            ("filter.particles", self.filter.particles.to_string()),
            (
                "filter.process_noise_std",
                self.filter.process_noise_std.to_string(),
            ),
            (
                "baseline.sample_fixed_k",
                self.baseline.sample_fixed_k.to_string(),
            ),
        ]
    }
}
