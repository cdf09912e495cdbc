//! Synthetic heart-rate streams.
//!
//! Each day is a circadian sinusoid between 55 and 90 bpm plus a small
//! per-day offset and clamped AR(1) jitter. Sick days add isolated spikes,
//! ramped plateaus above 100 bpm and night-time bradycardia so that every
//! health feature fires under default thresholds.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::stream::{DayHistogram, StreamPrefix};

/// Keeps generator draws apart from pipeline noise under the same seed.
const GENERATOR_STREAM: u64 = 0x0067_656e;

const CONSTANT_LEVEL: f64 = 70.0;
const MIXED_BLOCK_DAYS: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    Healthy,
    Sick,
    /// Alternating healthy and sick weeks, starting healthy.
    Mixed,
    /// Every bin at 70 bpm.
    Constant,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "healthy" => Ok(Profile::Healthy),
            "sick" => Ok(Profile::Sick),
            "mixed" => Ok(Profile::Mixed),
            "constant" => Ok(Profile::Constant),
            other => Err(format!(
                "unknown profile `{other}` (expected healthy, sick, mixed or constant)"
            )),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Healthy => "healthy",
            Profile::Sick => "sick",
            Profile::Mixed => "mixed",
            Profile::Constant => "constant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticOptions {
    pub bins_per_day: usize,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self { bins_per_day: 144 }
    }
}

/// 144 ten-minute bins per day.
pub fn generate_synthetic(seed: u64, days: u32, profile: Profile) -> StreamPrefix {
    generate_synthetic_with(seed, days, profile, SyntheticOptions::default())
}

pub fn generate_synthetic_with(
    seed: u64,
    days: u32,
    profile: Profile,
    opts: SyntheticOptions,
) -> StreamPrefix {
    let n = opts.bins_per_day.max(1);
    let width = u32::try_from(24 * 60 / n).unwrap_or(1).max(1);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(GENERATOR_STREAM);

    let histograms = (1..=days)
        .map(|day| {
            let bins = match profile {
                Profile::Constant => vec![CONSTANT_LEVEL; n],
                Profile::Healthy => healthy_day(n, &mut rng),
                Profile::Sick => sick_day(n, &mut rng),
                Profile::Mixed if ((day - 1) / MIXED_BLOCK_DAYS).is_multiple_of(2) => {
                    healthy_day(n, &mut rng)
                }
                Profile::Mixed => sick_day(n, &mut rng),
            };
            DayHistogram::new(day, bins, width).expect("generated day is valid")
        })
        .collect();
    StreamPrefix::new(histograms).expect("generated stream is consecutive")
}

fn circadian(bin: usize, n: usize) -> f64 {
    let hour = bin as f64 * 24.0 / n as f64;
    72.5 - 17.5 * (2.0 * PI * (hour - 4.0) / 24.0).cos()
}

fn healthy_day<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let offset = rng.random_range(-1.5..=1.5);
    let mut jitter = 0.0f64;
    (0..n)
        .map(|i| {
            let z: f64 = rng.sample(StandardNormal);
            jitter = (0.7 * jitter + z).clamp(-3.0, 3.0);
            circadian(i, n) + offset + jitter
        })
        .collect()
}

fn sick_day<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v = healthy_day(n, rng);
    let scale = |bins: usize| (bins * n / 144).max(1);

    // Bradycardia during the night, roughly 01:00 to 05:00.
    if rng.random_bool(0.6) {
        let len = scale(rng.random_range(12..=24));
        let start = (n / 24).min(n.saturating_sub(len));
        for x in v.iter_mut().skip(start).take(len) {
            *x = rng.random_range(42.0..48.0);
        }
    }

    // Tachycardia plateau reached through a short ramp.
    if rng.random_bool(0.8) {
        let ramp = 4.min(n);
        let len = scale(rng.random_range(12..=24));
        let lo = n / 3;
        let hi = (n * 5 / 6).saturating_sub(len + ramp).max(lo);
        let start = rng.random_range(lo..=hi);
        for k in 0..ramp + len {
            let Some(x) = v.get_mut(start + k) else { break };
            let lift = if k < ramp {
                55.0 * (k + 1) as f64 / ramp as f64
            } else {
                55.0
            };
            *x += lift;
        }
    }

    // Isolated spikes.
    for _ in 0..rng.random_range(2..=4) {
        let i = rng.random_range(0..n);
        v[i] += 40.0;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_from_values, health_condition, FeatureThresholds};

    #[test]
    fn same_seed_same_stream() {
        for p in [Profile::Healthy, Profile::Sick, Profile::Mixed] {
            assert_eq!(generate_synthetic(3, 10, p), generate_synthetic(3, 10, p));
        }
        assert_ne!(
            generate_synthetic(3, 10, Profile::Healthy),
            generate_synthetic(4, 10, Profile::Healthy)
        );
    }

    #[test]
    fn healthy_days_score_zero() {
        let th = FeatureThresholds::default();
        for seed in 0..5 {
            for h in generate_synthetic(seed, 30, Profile::Healthy).histograms() {
                assert_eq!(h.len(), 144);
                assert_eq!(
                    health_condition(&extract_from_values(h.bins(), &th), &th),
                    0.0
                );
            }
        }
    }

    #[test]
    fn sick_stream_fires_every_feature() {
        let th = FeatureThresholds::default();
        let s = generate_synthetic(1, 90, Profile::Sick);
        let feats: Vec<_> = s
            .histograms()
            .iter()
            .map(|h| extract_from_values(h.bins(), &th))
            .collect();
        assert!(feats.iter().any(|f| f.h_r > 0));
        assert!(feats.iter().any(|f| f.h_g > 0));
        assert!(feats.iter().any(|f| f.h_h > 0));
        assert!(feats.iter().any(|f| f.h_l > 0));
        assert!(feats.iter().any(|f| health_condition(f, &th) >= 0.5));
    }

    #[test]
    fn mixed_alternates_weeks() {
        let th = FeatureThresholds::default();
        let s = generate_synthetic(2, 28, Profile::Mixed);
        let c: Vec<f64> = s
            .histograms()
            .iter()
            .map(|h| health_condition(&extract_from_values(h.bins(), &th), &th))
            .collect();
        assert!(c[..7].iter().all(|&x| x == 0.0));
        assert!(c[7..14].iter().any(|&x| x > 0.0));
        assert!(c[14..21].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_and_custom_resolution() {
        let s = generate_synthetic_with(
            0,
            3,
            Profile::Constant,
            SyntheticOptions { bins_per_day: 12 },
        );
        assert_eq!(s.bins_per_day(), Some(12));
        assert_eq!(s.histograms()[0].bin_width_minutes(), 120);
        assert!(s
            .histograms()
            .iter()
            .all(|h| h.bins().iter().all(|&v| v == 70.0)));
        let s = generate_synthetic_with(0, 3, Profile::Sick, SyntheticOptions { bins_per_day: 12 });
        assert!(s
            .histograms()
            .iter()
            .all(|h| h.bins().iter().all(|v| v.is_finite() && *v > 0.0)));
    }
}
