//! Streaming w-day differentially private histogram release.
//!
//! A day's histogram passes through adaptive sampling, sliding-window budget
//! allocation, a noisy-threshold partition, Laplace perturbation of bucket
//! means, per-bin particle filtering and feature extraction. Any `w`
//! consecutive days together spend at most `epsilon`.
//!
//! ```
//! use redpoctor::{generate_synthetic, run_stream, PipelineConfig, Profile};
//!
//! let stream = generate_synthetic(7, 30, Profile::Mixed);
//! let (records, report) = run_stream(&PipelineConfig::default(), &stream).unwrap();
//! assert_eq!(records.len(), 30);
//! assert!(records[0].sampled);
//! assert!(report.mae.is_finite());
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod features;
pub mod filtering;
pub mod partition;
pub mod perturbation;
pub mod pipeline;
pub mod sampling;
pub mod stream;

pub use budget::{allocate_budget, AllocationParams, BudgetError, BudgetLedger, WINDOW_TOLERANCE};
pub use features::{extract_features, health_condition, FeatureThresholds, HealthFeatures};
pub use filtering::{FilterSettings, ParticleFilter, ReleaseFilter};
pub use partition::{dp_partition, noisy_thresholds, BucketSet, PartitionThresholds};
pub use perturbation::{laplace_sample, NoiseCalibration, NoiseSource, SensitivitySpec};
pub use pipeline::{
    generate_synthetic, generate_synthetic_with, mae, mre, run_baseline, run_stream,
    run_stream_probed, Baseline, Pipeline, PipelineConfig, PipelineError, Profile,
    SyntheticOptions, UtilityReport,
};
pub use sampling::{pearson_feedback, HealthTermComposition, SamplerParams, SamplerState};
pub use stream::{DayHistogram, ReleaseRecord, StreamError, StreamPrefix};
