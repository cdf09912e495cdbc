//! Adaptive sampling: a PID controller over the Pearson correlation of
//! consecutive releases decides how many days to skip before the next
//! perturbed release.
//!
//! Everything here consumes released histograms only.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stream::DayHistogram;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("histograms have {0} and {1} bins")]
    LengthMismatch(usize, usize),
    #[error("invalid sampler parameters: {0}")]
    InvalidParams(&'static str),
}

/// How the health-condition term combines with the error term when the next
/// interval is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HealthTermComposition {
    /// `max{1, error term, health term}`.
    #[default]
    Max,
    /// `max{1, min(error term, health term)}`: either signal alone can
    /// shorten the interval.
    Min,
}

impl std::str::FromStr for HealthTermComposition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Self::Max),
            "min" => Ok(Self::Min),
            other => Err(format!("unknown composition `{other}` (expected max|min)")),
        }
    }
}

/// Tunables of the sampling controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub theta_p: f64,
    pub theta_i: f64,
    pub theta_d: f64,
    /// Set point for the feedback error.
    pub delta: f64,
    /// Interval scale factor.
    pub eta: f64,
    /// Number of past sampling-day errors kept for the integral term.
    pub m: usize,
    /// Upper bound on the interval, in days.
    pub max_interval: u32,
    pub composition: HealthTermComposition,
}

impl Default for SamplerParams {
    fn default() -> Self {
        Self {
            theta_p: 0.8,
            theta_i: 0.2,
            theta_d: 0.0,
            delta: 0.05,
            eta: 2.0,
            m: 3,
            max_interval: 10,
            composition: HealthTermComposition::Max,
        }
    }
}

impl SamplerParams {
    pub fn validate(&self) -> Result<(), SamplingError> {
        let gains = [self.theta_p, self.theta_i, self.theta_d];
        if gains.iter().any(|g| !g.is_finite()) {
            return Err(SamplingError::InvalidParams("PID gains must be finite"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(SamplingError::InvalidParams("delta must be > 0"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(SamplingError::InvalidParams("eta must be > 0"));
        }
        if self.m == 0 {
            return Err(SamplingError::InvalidParams("m must be >= 1"));
        }
        if self.max_interval == 0 {
            return Err(SamplingError::InvalidParams("max_interval must be >= 1"));
        }
        Ok(())
    }
}

/// Controller state carried between sampling days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerState {
    params: SamplerParams,
    /// Errors of previous sampling days, oldest first, at most `m` of them.
    error_history: VecDeque<(u32, f64)>,
    last_sample_day: u32,
    last_interval: u32,
    next_sample_day: u32,
}

impl SamplerState {
    pub fn new(params: SamplerParams) -> Result<Self, SamplingError> {
        params.validate()?;
        Ok(Self {
            params,
            error_history: VecDeque::with_capacity(params.m),
            last_sample_day: 0,
            last_interval: 1,
            next_sample_day: 1,
        })
    }

    pub fn params(&self) -> &SamplerParams {
        &self.params
    }

    pub fn last_sample_day(&self) -> u32 {
        self.last_sample_day
    }

    pub fn last_interval(&self) -> u32 {
        self.last_interval
    }

    pub fn next_sample_day(&self) -> u32 {
        self.next_sample_day
    }

    pub fn error_history(&self) -> impl Iterator<Item = &(u32, f64)> {
        self.error_history.iter()
    }

    /// Day 1 is always sampled; afterwards a day is sampled once the
    /// scheduled day is reached.
    pub fn should_sample(&self, day: u32) -> bool {
        day <= 1 || day >= self.next_sample_day
    }

    /// Normalised distance of the feedback from the set point.
    pub fn proportional_error(&self, feedback: f64) -> f64 {
        (feedback - self.params.delta).abs() / self.params.delta
    }

    /// PID output for a sampling day.
    ///
    /// The integral term averages the current error together with the up to
    /// `m` errors of earlier sampling days; the current error is then pushed
    /// into the history.
    pub fn pid_error(&mut self, feedback: f64, day: u32) -> f64 {
        let p = self.params;
        let e = self.proportional_error(feedback);
        let (sum, count) = self
            .error_history
            .iter()
            .fold((e, 1usize), |(s, c), &(_, past)| (s + past, c + 1));
        let integral = sum / count as f64;
        let elapsed = day.saturating_sub(self.last_sample_day).max(1);
        let derivative = e / f64::from(elapsed);

        self.error_history.push_back((day, e));
        while self.error_history.len() > p.m {
            self.error_history.pop_front();
        }
        p.theta_p * e + p.theta_i * integral + p.theta_d * derivative
    }

    /// Next sampling interval from the PID output `u`, the health condition
    /// `c` and the remaining budget `eps_r` (noise scale `1 / eps_r`).
    ///
    /// Rounded half-up, then clamped to `[1, max_interval]`.
    pub fn next_interval(&self, u: f64, c: f64, eps_r: f64) -> u32 {
        let p = self.params;
        let prev = f64::from(self.last_interval);
        // (x / lambda)^2 with lambda = 1 / eps_r; eps_r = 0 means lambda = inf.
        let ratio_sq = |x: f64| {
            if eps_r > 0.0 {
                (x * eps_r).powi(2)
            } else {
                0.0
            }
        };
        let by_error = prev + p.eta * (1.0 - ratio_sq(u));
        let by_health = prev + p.eta * (1.0 - ratio_sq(c));
        let raw = match p.composition {
            HealthTermComposition::Max => by_error.max(by_health),
            HealthTermComposition::Min => by_error.min(by_health),
        }
        .max(1.0);
        let rounded = (raw + 0.5).floor();
        if rounded >= f64::from(p.max_interval) {
            p.max_interval
        } else {
            rounded as u32
        }
    }

    /// Commits a sampling decision taken on `day`.
    pub fn commit(&mut self, day: u32, interval: u32) {
        let interval = interval.max(1);
        self.last_sample_day = day;
        self.last_interval = interval;
        self.next_sample_day = day + interval;
    }

    /// Pushes the next sample one day out without running the controller.
    /// Used when a scheduled sample cannot be taken (no budget left).
    pub fn defer(&mut self, day: u32) {
        self.next_sample_day = day + 1;
    }
}

/// Pearson correlation of two released histograms.
///
/// Two constant vectors correlate perfectly (1); a constant against a
/// non-constant vector gives 0.
pub fn pearson_feedback(prev: &DayHistogram, curr: &DayHistogram) -> Result<f64, SamplingError> {
    pearson(prev.bins(), curr.bins())
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, SamplingError> {
    if a.len() != b.len() {
        return Err(SamplingError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    Ok(match (var_a > 0.0, var_b > 0.0) {
        (false, false) => 1.0,
        (true, true) => (cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0),
        _ => 0.0,
    })
}
