//! Independent reference implementations used as test oracles.
//!
//! These are written directly from the formulas and the partition case
//! analysis, without sharing code with the library.
#![allow(dead_code, clippy::needless_range_loop)]

/// Reference partitioner over owned buckets, recomputing the spread of the
/// open bucket from scratch at every step.
pub fn reference_partition(values: &[f64], t_d: f64, t_r: f64, t_s: usize) -> Vec<Vec<f64>> {
    let mut closed: Vec<Vec<f64>> = Vec::new();
    let Some((&first, rest)) = values.split_first() else {
        return closed;
    };
    let mut open: Vec<f64> = vec![first];
    let mut current = first;
    for &d in rest {
        if (current - d).abs() > t_r {
            match open.len() {
                // previous bin is already a closed singleton
                0 => {}
                1 => closed.push(std::mem::take(&mut open)),
                _ => {
                    let last = open.pop().unwrap();
                    closed.push(std::mem::take(&mut open));
                    closed.push(vec![last]);
                }
            }
            closed.push(vec![d]);
        } else if open.is_empty() {
            open.push(d);
        } else {
            let mut candidate = open.clone();
            candidate.push(d);
            let max = candidate.iter().cloned().fold(f64::MIN, f64::max);
            let min = candidate.iter().cloned().fold(f64::MAX, f64::min);
            if max - min <= t_d && candidate.len() <= t_s.max(1) {
                open = candidate;
            } else {
                closed.push(std::mem::replace(&mut open, vec![d]));
            }
        }
        current = d;
    }
    if !open.is_empty() {
        closed.push(open);
    }
    closed
}

/// Every window `[t - w + 1, t]` whose total exceeds `epsilon + tol`, as
/// `(t, total)` with 1-based `t`. Windows are summed naively.
pub fn window_violations(trace: &[f64], w: usize, epsilon: f64, tol: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for t in 0..trace.len() {
        let start = (t + 1).saturating_sub(w);
        let mut total = 0.0;
        for k in start..=t {
            total += trace[k];
        }
        if total > epsilon + tol {
            out.push((t + 1, total));
        }
    }
    out
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Correlation coefficient via compensated two-pass sums.
pub fn pearson_oracle(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = compensated_sum(a.iter().copied()) / n;
    let mb = compensated_sum(b.iter().copied()) / n;
    let sxy = compensated_sum(a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)));
    let sxx = compensated_sum(a.iter().map(|x| (x - ma) * (x - ma)));
    let syy = compensated_sum(b.iter().map(|y| (y - mb) * (y - mb)));
    if sxx == 0.0 && syy == 0.0 {
        return 1.0;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Direct transcription of the controller output for one sampling day.
///
/// `past` holds the errors of earlier sampling days, oldest first.
pub struct PidOracle {
    pub theta: (f64, f64, f64),
    pub delta: f64,
    pub m: usize,
    pub past: Vec<f64>,
    pub last_day: u32,
}

impl PidOracle {
    pub fn step(&mut self, feedback: f64, day: u32) -> f64 {
        let e = (feedback - self.delta).abs() / self.delta;
        let keep = self.past.len().min(self.m);
        let window: Vec<f64> = self.past[self.past.len() - keep..]
            .iter()
            .copied()
            .chain(std::iter::once(e))
            .collect();
        let integral = compensated_sum(window.iter().copied()) / window.len() as f64;
        let gap = if day > self.last_day {
            day - self.last_day
        } else {
            1
        };
        let u = self.theta.0 * e + self.theta.1 * integral + self.theta.2 * (e / gap as f64);
        self.past.push(e);
        self.last_day = day;
        u
    }
}

/// Interval rule with the noise scale written out as `lambda = 1 / eps_r`.
pub fn interval_oracle(
    prev: u32,
    eta: f64,
    u: f64,
    c: f64,
    eps_r: f64,
    use_max: bool,
    cap: u32,
) -> u32 {
    let lambda = if eps_r > 0.0 {
        1.0 / eps_r
    } else {
        f64::INFINITY
    };
    let term = |x: f64| {
        let r = x / lambda;
        prev as f64 + eta * (1.0 - r * r)
    };
    let (a, b) = (term(u), term(c));
    let pick = if use_max { a.max(b) } else { a.min(b) };
    let value = pick.max(1.0).round();
    if value >= cap as f64 {
        cap
    } else {
        value as u32
    }
}

/// `min(min(ln(phi I + 1), p_max) * eps_r, eps_max)`.
pub fn allocation_oracle(eps_r: f64, interval: u32, phi: f64, p_max: f64, eps_max: f64) -> f64 {
    let p = (phi * interval as f64 + 1.0).ln().min(p_max);
    (p * eps_r.max(0.0)).min(eps_max)
}

pub fn mean(xs: &[f64]) -> f64 {
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    compensated_sum(xs.iter().map(|x| (x - m) * (x - m))) / (xs.len() as f64 - 1.0)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
