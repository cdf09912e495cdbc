//! Sliding-window budget accounting and adaptive per-sample allocation.
//!
//! Any `w` consecutive days may jointly spend at most `epsilon_total`.
//! Budget that slides out of the window becomes available again.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on window sums to absorb floating-point residue.
pub const WINDOW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BudgetError {
    #[error("spend on day {day} would raise a window sum to {attempted_sum}")]
    WindowBudgetExceeded { day: u32, attempted_sum: f64 },
    #[error("day {0} already has a recorded spend")]
    DuplicateDay(u32),
    #[error("day {day} precedes the latest recorded day {latest}")]
    OutOfOrder { day: u32, latest: u32 },
    #[error("invalid spend {eps} on day {day}")]
    InvalidSpend { day: u32, eps: f64 },
    #[error("invalid ledger parameters: {0}")]
    InvalidParams(&'static str),
}

/// Per-day spends inside a `w`-day sliding window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    w: u32,
    epsilon_total: f64,
    spends: BTreeMap<u32, f64>,
    latest: Option<u32>,
}

impl BudgetLedger {
    pub fn new(w: u32, epsilon_total: f64) -> Result<Self, BudgetError> {
        if w == 0 {
            return Err(BudgetError::InvalidParams("w must be >= 1"));
        }
        if !(epsilon_total > 0.0 && epsilon_total.is_finite()) {
            return Err(BudgetError::InvalidParams(
                "epsilon must be positive and finite",
            ));
        }
        Ok(Self {
            w,
            epsilon_total,
            spends: BTreeMap::new(),
            latest: None,
        })
    }

    pub fn window(&self) -> u32 {
        self.w
    }

    pub fn epsilon_total(&self) -> f64 {
        self.epsilon_total
    }

    /// Spend recorded for `day`; unrecorded days spent nothing.
    pub fn spend_on(&self, day: u32) -> f64 {
        self.spends.get(&day).copied().unwrap_or(0.0)
    }

    /// Sum of spends over the inclusive day range, clipped to days >= 1.
    fn range_sum(&self, from: i64, to: i64) -> f64 {
        if to < 1 || to < from {
            return 0.0;
        }
        let from = from.max(1) as u32;
        self.spends.range(from..=to as u32).map(|(_, v)| v).sum()
    }

    /// Budget still available on `day`: `epsilon_total` minus the spends of
    /// the previous `w - 1` days, clipped at zero.
    pub fn remaining_budget(&self, day: u32) -> f64 {
        let day = i64::from(day);
        let used = self.range_sum(day - i64::from(self.w) + 1, day - 1);
        (self.epsilon_total - used).max(0.0)
    }

    /// Returns a new ledger with `eps` recorded on `day`.
    pub fn record_spend(&self, day: u32, eps: f64) -> Result<Self, BudgetError> {
        let mut next = self.clone();
        next.record_in_place(day, eps)?;
        Ok(next)
    }

    /// In-place variant of [`record_spend`](Self::record_spend); the ledger is
    /// left untouched on error.
    pub fn record_in_place(&mut self, day: u32, eps: f64) -> Result<(), BudgetError> {
        if day == 0 || !(eps >= 0.0 && eps.is_finite()) {
            return Err(BudgetError::InvalidSpend { day, eps });
        }
        match self.latest {
            Some(latest) if day == latest => return Err(BudgetError::DuplicateDay(day)),
            Some(latest) if day < latest => return Err(BudgetError::OutOfOrder { day, latest }),
            _ => {}
        }
        // Days are recorded in increasing order, so the only window that
        // contains `day` and already has history is the one ending at `day`.
        let d = i64::from(day);
        let sum = self.range_sum(d - i64::from(self.w) + 1, d - 1) + eps;
        if sum > self.epsilon_total + WINDOW_TOLERANCE {
            return Err(BudgetError::WindowBudgetExceeded {
                day,
                attempted_sum: sum,
            });
        }
        self.spends.insert(day, eps);
        self.latest = Some(day);
        self.prune();
        Ok(())
    }

    fn prune(&mut self) {
        let w = self.w as usize;
        if self.spends.len() <= 4 * w {
            return;
        }
        if let Some(latest) = self.latest {
            let horizon = latest.saturating_sub(self.w);
            self.spends = self.spends.split_off(&(horizon + 1));
        }
    }
}

/// Parameters of the adaptive allocation rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationParams {
    /// Scale factor applied to the interval inside the logarithm.
    pub phi: f64,
    /// Cap on the portion of the remaining budget.
    pub p_max: f64,
    /// Cap on a single allocation.
    pub epsilon_max: f64,
    /// Fraction of each allocation spent on the noisy partition thresholds.
    pub q: f64,
}

impl AllocationParams {
    pub fn validate(&self) -> Result<(), BudgetError> {
        if !(self.phi > 0.0 && self.phi.is_finite()) {
            return Err(BudgetError::InvalidParams("phi must be > 0"));
        }
        if !(self.p_max > 0.0 && self.p_max <= 1.0) {
            return Err(BudgetError::InvalidParams("p_max must be in (0, 1]"));
        }
        if !(self.epsilon_max > 0.0 && self.epsilon_max.is_finite()) {
            return Err(BudgetError::InvalidParams("epsilon_max must be > 0"));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(BudgetError::InvalidParams("q must be in (0, 1)"));
        }
        Ok(())
    }
}

/// Portion of the remaining budget granted for a sampling interval:
/// `min(ln(phi * interval + 1), p_max)`.
pub fn allocation_portion(interval: u32, params: &AllocationParams) -> f64 {
    (params.phi * f64::from(interval)).ln_1p().min(params.p_max)
}

/// Budget for the next sample: `min(p * eps_r, epsilon_max)`.
pub fn allocate_budget(eps_r: f64, interval: u32, params: &AllocationParams) -> f64 {
    let eps_r = eps_r.max(0.0);
    (allocation_portion(interval, params) * eps_r).min(params.epsilon_max)
}
