//! Per-day release state machine.
//!
//! Stage order on a sampling day: sampling decision, budget allocation,
//! noisy-threshold partition, bucket perturbation, filtering, feature
//! extraction, then the sampler update for the next interval. Only the
//! partition and perturbation stages read raw values.

mod baseline;
mod config;
mod metrics;
mod probe;
mod synthetic;

pub use baseline::{run_baseline, Baseline, UnknownBaseline};
pub use config::{AllocationConfig, BaselineConfig, ConfigError, PartitionConfig, PipelineConfig};
pub use metrics::{mae, mre, DayError, MetricsError, UtilityReport};
pub use probe::{NoProbe, PoisonedProbe, RawDay, RawProbe, RecordingProbe, Stage};
pub use synthetic::{generate_synthetic, generate_synthetic_with, Profile, SyntheticOptions};

use thiserror::Error;

use crate::budget::{allocate_budget, AllocationParams, BudgetError, BudgetLedger};
use crate::features::{extract_from_values, health_condition};
use crate::filtering::{FilterError, ReleaseFilter};
use crate::partition::{
    bucket_means, dp_partition_values, noisy_thresholds, BucketSet, PartitionError,
};
use crate::perturbation::{perturb_buckets, NoiseSource, PerturbationError};
use crate::sampling::{pearson, SamplerState, SamplingError};
use crate::stream::{DayHistogram, ReleaseRecord, StreamError, StreamPrefix};

/// Sub-stream of the run seed reserved for the filter, so filter settings
/// never shift the privacy-noise sequence.
const FILTER_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    /// A window-sum violation means the allocation logic is broken.
    #[error("budget invariant violated: {0}")]
    Budget(#[from] BudgetError),
    #[error("expected day {expected}, got day {got}")]
    DayOutOfSequence { expected: u32, got: u32 },
    #[error("day {day} has {got} bins, stream has {expected}")]
    ShapeMismatch {
        day: u32,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl PipelineError {
    /// True for failures that indicate a bug rather than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(self, PipelineError::Budget(_))
    }
}

/// Output of the private stages on one sampling day.
struct PrivateRelease {
    bins: Vec<f64>,
    scales: Vec<f64>,
    bucket_count: usize,
}

pub struct Pipeline {
    config: PipelineConfig,
    allocation: AllocationParams,
    ledger: BudgetLedger,
    sampler: SamplerState,
    filter: ReleaseFilter,
    noise: NoiseSource,
    filter_rng: NoiseSource,
    last_day: u32,
    shape: Option<(usize, u32)>,
    /// Perturbed histogram of the last sampling day.
    last_perturbed: Option<DayHistogram>,
    health: f64,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let noise = NoiseSource::from_seed(config.seed);
        Ok(Self {
            allocation: config.allocation_params(),
            ledger: BudgetLedger::new(config.w, config.epsilon)?,
            sampler: SamplerState::new(config.sampler)?,
            filter: ReleaseFilter::from_settings(config.filter)?,
            filter_rng: noise.derive(FILTER_STREAM),
            noise,
            last_day: 0,
            shape: None,
            last_perturbed: None,
            health: 0.0,
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    pub fn sampler(&self) -> &SamplerState {
        &self.sampler
    }

    pub fn run_day(&mut self, raw: &DayHistogram) -> Result<ReleaseRecord, PipelineError> {
        self.run_day_probed(raw, &NoProbe)
    }

    /// [`run_day`](Self::run_day) with every raw-value read reported to `probe`.
    pub fn run_day_probed(
        &mut self,
        raw: &DayHistogram,
        probe: &dyn RawProbe,
    ) -> Result<ReleaseRecord, PipelineError> {
        let raw = RawDay::new(raw, probe);
        let day = raw.day();
        if day != self.last_day + 1 {
            return Err(PipelineError::DayOutOfSequence {
                expected: self.last_day + 1,
                got: day,
            });
        }
        let shape = (raw.len(), raw.bin_width_minutes());
        match self.shape {
            None => self.shape = Some(shape),
            Some(expected) if expected != shape => {
                return Err(PipelineError::ShapeMismatch {
                    day,
                    expected: expected.0,
                    got: shape.0,
                })
            }
            _ => {}
        }

        let record = if self.sampler.should_sample(day) {
            let eps_r = self.ledger.remaining_budget(day);
            let eps_i = allocate_budget(eps_r, self.sampler.last_interval(), &self.allocation);
            if eps_i > 0.0 {
                self.sampling_day(&raw, eps_i)?
            } else {
                self.sampler.defer(day);
                self.approximated_day(day)?
            }
        } else {
            self.approximated_day(day)?
        };
        self.last_day = day;
        Ok(record)
    }

    /// Partition and perturbation: the only code that reads raw values.
    fn private_release(
        &mut self,
        raw: &RawDay<'_>,
        eps_i: f64,
    ) -> Result<PrivateRelease, PipelineError> {
        let cfg = &self.config;
        let (buckets, eps_perturb) = if cfg.partition.enabled {
            let eps_partition = cfg.allocation.q * eps_i;
            let (t_d, t_r) = noisy_thresholds(
                &cfg.partition.thresholds,
                eps_partition,
                cfg.sensitivity.alpha,
                &mut self.noise,
            )?;
            let values = raw.values(Stage::Partition);
            let buckets = dp_partition_values(values, t_d, t_r, cfg.partition.thresholds.t_s);
            (buckets, eps_i - eps_partition)
        } else {
            (
                BucketSet::singletons(raw.values(Stage::Perturbation)),
                eps_i,
            )
        };
        let means = bucket_means(&buckets);
        let perturbed = perturb_buckets(&means, &cfg.sensitivity, eps_perturb, &mut self.noise)?;
        Ok(PrivateRelease {
            bins: perturbed.bins,
            scales: perturbed.scales,
            bucket_count: buckets.len(),
        })
    }

    fn sampling_day(
        &mut self,
        raw: &RawDay<'_>,
        eps_i: f64,
    ) -> Result<ReleaseRecord, PipelineError> {
        let day = raw.day();
        // Record first: a rejected spend must not leave a release behind.
        self.ledger.record_in_place(day, eps_i)?;
        let private = self.private_release(raw, eps_i)?;
        let perturbed = DayHistogram::new(day, private.bins, raw.bin_width_minutes())?;

        let released =
            self.filter
                .posterior(perturbed.bins(), &private.scales, &mut self.filter_rng)?;
        let released = perturbed.with_bins(released);

        let features = extract_from_values(released.bins(), &self.config.features);
        self.health = health_condition(&features, &self.config.features);

        let feedback = match &self.last_perturbed {
            Some(prev) => pearson(prev.bins(), perturbed.bins())?,
            None => 0.0,
        };
        let u = self.sampler.pid_error(feedback, day);
        let eps_r_next = self.ledger.remaining_budget(day + 1);
        let interval = self.sampler.next_interval(u, self.health, eps_r_next);
        self.sampler.commit(day, interval);

        self.last_perturbed = Some(perturbed.clone());
        Ok(ReleaseRecord {
            day,
            released,
            perturbed,
            sampled: true,
            epsilon_spent: eps_i,
            interval_next: interval,
            health_condition: self.health,
            bucket_count: Some(private.bucket_count),
        })
    }

    fn approximated_day(&mut self, day: u32) -> Result<ReleaseRecord, PipelineError> {
        self.ledger.record_in_place(day, 0.0)?;
        // Day 1 is always sampled with a positive budget, so a previous
        // release exists here.
        let last = self
            .last_perturbed
            .as_ref()
            .expect("a sampling day precedes every approximated day");
        let perturbed = last.relabel(day);
        let prior = self.filter.prior(perturbed.bins(), &mut self.filter_rng)?;
        Ok(ReleaseRecord {
            day,
            released: perturbed.with_bins(prior),
            perturbed,
            sampled: false,
            epsilon_spent: 0.0,
            interval_next: self.sampler.last_interval(),
            health_condition: self.health,
            bucket_count: None,
        })
    }
}

/// Folds [`Pipeline::run_day`] over the stream and scores the result against it.
pub fn run_stream(
    config: &PipelineConfig,
    stream: &StreamPrefix,
) -> Result<(Vec<ReleaseRecord>, UtilityReport), PipelineError> {
    run_stream_probed(config, stream, &NoProbe)
}

pub fn run_stream_probed(
    config: &PipelineConfig,
    stream: &StreamPrefix,
    probe: &dyn RawProbe,
) -> Result<(Vec<ReleaseRecord>, UtilityReport), PipelineError> {
    let mut pipeline = Pipeline::new(config.clone())?;
    let records = stream
        .histograms()
        .iter()
        .map(|raw| pipeline.run_day_probed(raw, probe))
        .collect::<Result<Vec<_>, _>>()?;
    let report = UtilityReport::from_records(&records, stream, config.gamma_fraction)?;
    Ok((records, report))
}
