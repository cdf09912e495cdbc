//! Simplified comparison mechanisms.
//!
//! `uniform` splits the window budget evenly over every day. `sample_fixed`
//! releases every k-th day and repeats the last release in between. Neither
//! partitions nor filters; both perturb every bin independently.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{PipelineConfig, PipelineError, UtilityReport};
use crate::budget::BudgetLedger;
use crate::partition::{bucket_means, BucketSet};
use crate::perturbation::{perturb_buckets, NoiseSource};
use crate::stream::{DayHistogram, ReleaseRecord, StreamPrefix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown baseline `{0}` (expected uniform or sample_fixed)")]
pub struct UnknownBaseline(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    Uniform,
    SampleFixed,
}

impl FromStr for Baseline {
    type Err = UnknownBaseline;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "uniform" => Ok(Baseline::Uniform),
            "sample_fixed" => Ok(Baseline::SampleFixed),
            other => Err(UnknownBaseline(other.to_string())),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Baseline::Uniform => "uniform",
            Baseline::SampleFixed => "sample_fixed",
        })
    }
}

impl Baseline {
    /// Sampling period in days and the budget spent on each sample.
    ///
    /// With period k at most `ceil(w / k)` samples fall in any window, so each
    /// gets `epsilon / ceil(w / k)`.
    fn schedule(self, config: &PipelineConfig) -> (u32, f64) {
        match self {
            Baseline::Uniform => (1, config.epsilon / f64::from(config.w)),
            Baseline::SampleFixed => {
                let k = config.baseline.sample_fixed_k;
                (k, config.epsilon / f64::from(config.w.div_ceil(k)))
            }
        }
    }
}

pub fn run_baseline(
    baseline: Baseline,
    config: &PipelineConfig,
    stream: &StreamPrefix,
) -> Result<(Vec<ReleaseRecord>, UtilityReport), PipelineError> {
    config.validate()?;
    let (period, eps) = baseline.schedule(config);
    let mut ledger = BudgetLedger::new(config.w, config.epsilon)?;
    let mut noise = NoiseSource::from_seed(config.seed);
    let mut last: Option<DayHistogram> = None;
    let mut records = Vec::with_capacity(stream.len());

    for raw in stream.histograms() {
        let day = raw.day();
        let sampled = (day - 1) % period == 0;
        let perturbed = if sampled {
            ledger.record_in_place(day, eps)?;
            let means = bucket_means(&BucketSet::singletons(raw.bins()));
            let noisy = perturb_buckets(&means, &config.sensitivity, eps, &mut noise)?;
            DayHistogram::new(day, noisy.bins, raw.bin_width_minutes())?
        } else {
            ledger.record_in_place(day, 0.0)?;
            last.as_ref().expect("day 1 is always sampled").relabel(day)
        };
        records.push(ReleaseRecord {
            day,
            released: perturbed.clone(),
            perturbed: perturbed.clone(),
            sampled,
            epsilon_spent: if sampled { eps } else { 0.0 },
            interval_next: period,
            health_condition: 0.0,
            bucket_count: sampled.then_some(raw.len()),
        });
        if sampled {
            last = Some(perturbed);
        }
    }
    let report = UtilityReport::from_records(&records, stream, config.gamma_fraction)?;
    Ok((records, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(days: u32) -> StreamPrefix {
        StreamPrefix::new(
            (1..=days)
                .map(|d| DayHistogram::with_default_width(d, vec![75.0; 8]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn parses_names() {
        assert_eq!("uniform".parse::<Baseline>().unwrap(), Baseline::Uniform);
        assert_eq!(
            "sample_fixed".parse::<Baseline>().unwrap(),
            Baseline::SampleFixed
        );
        assert_eq!(
            "ba".parse::<Baseline>().unwrap_err(),
            UnknownBaseline("ba".into())
        );
    }

    #[test]
    fn uniform_spends_epsilon_over_w_daily() {
        let (_, report) =
            run_baseline(Baseline::Uniform, &PipelineConfig::default(), &stream(30)).unwrap();
        assert!(report.budget_trace.iter().all(|&e| e == 3.0 / 14.0));
        let window: f64 = report.budget_trace[..14].iter().sum();
        assert!((window - 3.0).abs() < 1e-12);
        assert_eq!(report.sample_days.len(), 30);
    }

    #[test]
    fn sample_fixed_two_samples_per_window() {
        let (records, report) = run_baseline(
            Baseline::SampleFixed,
            &PipelineConfig::default(),
            &stream(28),
        )
        .unwrap();
        assert_eq!(report.sample_days, vec![1, 8, 15, 22]);
        for r in &records {
            if r.sampled {
                assert_eq!(r.epsilon_spent, 1.5);
            } else {
                assert_eq!(r.epsilon_spent, 0.0);
            }
        }
        assert_eq!(records[3].perturbed.bins(), records[0].perturbed.bins());
    }

    #[test]
    fn sample_fixed_with_non_dividing_period_stays_within_budget() {
        let mut config = PipelineConfig::default();
        config.baseline.sample_fixed_k = 5;
        let (_, report) = run_baseline(Baseline::SampleFixed, &config, &stream(60)).unwrap();
        for win in report.budget_trace.windows(14) {
            assert!(win.iter().sum::<f64>() <= 3.0 + 1e-12);
        }
    }
}
