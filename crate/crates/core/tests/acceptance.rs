//! Acceptance suite. Prints one line per criterion and exits non-zero if
//! any criterion fails.

mod support;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use redpoctor::partition::{noisy_thresholds, partition_ranges, PartitionThresholds};
use redpoctor::pipeline::{run_stream_probed, PoisonedProbe, RecordingProbe};
use redpoctor::sampling::{pearson, HealthTermComposition, SamplerParams, SamplerState};
use redpoctor::*;
use support::{
    allocation_oracle, interval_oracle, mean, median, pearson_oracle, reference_partition,
    variance, window_violations, PidOracle,
};

const SEEDS: u64 = 20;

/// Name, check, optional wall-clock limit.
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let t = Instant::now();
    let o = f();
    (o, t.elapsed())
}

/// Mean over seeds of a per-seed metric. Stream `i` uses generator seed
/// `stream_base + i` and pipeline seed `i`.
fn seed_mean(stream_base: u64, f: impl Fn(u64, u64) -> f64 + Sync) -> f64 {
    let total: f64 = (0..SEEDS)
        .into_par_iter()
        .map(|i| f(stream_base + i, i))
        .sum();
    total / SEEDS as f64
}

fn random_config(rng: &mut ChaCha8Rng, seed: u64) -> PipelineConfig {
    let mut c = PipelineConfig {
        seed,
        w: rng.random_range(1..=40),
        epsilon: rng.random_range(0.05..10.0),
        ..PipelineConfig::default()
    };
    c.allocation.phi = rng.random_range(0.01..2.0);
    c.allocation.p_max = rng.random_range(0.05..=1.0);
    c.allocation.epsilon_max = rng.random_bool(0.5).then(|| rng.random_range(0.01..10.0));
    c.allocation.q = rng.random_range(0.05..0.95);
    c.sampler.eta = rng.random_range(0.1..5.0);
    c.sampler.m = rng.random_range(1..=6);
    c.sampler.max_interval = rng.random_range(1..=30);
    c.sampler.composition = if rng.random_bool(0.5) {
        HealthTermComposition::Max
    } else {
        HealthTermComposition::Min
    };
    c.partition.enabled = rng.random_bool(0.8);
    c.filter.enabled = rng.random_bool(0.2);
    c.filter.particles = 16;
    c
}

fn budget_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let configs: Vec<PipelineConfig> = (0..200).map(|i| random_config(&mut rng, i)).collect();
    let profiles = [
        Profile::Healthy,
        Profile::Sick,
        Profile::Mixed,
        Profile::Constant,
    ];
    let found: Vec<(u64, usize)> = configs
        .par_iter()
        .map(|c| {
            let profile = profiles[(c.seed % 4) as usize];
            let stream = generate_synthetic_with(
                1000 + c.seed,
                10_000,
                profile,
                SyntheticOptions { bins_per_day: 12 },
            );
            let (_, report) = run_stream(c, &stream).expect("pipeline run");
            let v = window_violations(
                &report.budget_trace,
                c.w as usize,
                c.epsilon,
                WINDOW_TOLERANCE,
            );
            (c.seed, v.len())
        })
        .collect();
    let bad: usize = found.iter().map(|x| x.1).sum();
    outcome(
        bad == 0,
        format!("200 configs x 10000 days, {bad} window violations"),
    )
}

fn laplace_correctness() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (i, b) in [0.5, 1.0, 5.0].into_iter().enumerate() {
        let mut rng = NoiseSource::from_seed(500 + i as u64);
        let draws: Vec<f64> = (0..100_000).map(|_| laplace_sample(b, &mut rng)).collect();
        let var_err = (variance(&draws) / (2.0 * b * b) - 1.0).abs();
        let med = median(&draws);
        let ok = var_err <= 0.05 && med.abs() <= 0.02 * b;
        pass &= ok;
        lines.push(format!("b={b}: var rel err {var_err:.4}, median {med:+.4}"));
    }
    outcome(pass, lines.join("; "))
}

fn random_histogram(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<f64> {
    let n = rng.random_range(1..=max_len);
    if rng.random_bool(0.5) {
        (0..n).map(|_| rng.random_range(40.0..200.0)).collect()
    } else {
        let mut x = rng.random_range(50.0..120.0);
        (0..n)
            .map(|_| {
                x += rng.random_range(-12.0..12.0);
                if rng.random_bool(0.05) {
                    x += rng.random_range(-50.0..50.0);
                }
                x
            })
            .collect()
    }
}

fn partition_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut noise = NoiseSource::from_seed(3);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let values = random_histogram(&mut rng, 32);
        let th = PartitionThresholds {
            t_d: rng.random_range(1.0..60.0),
            t_r: 0.0,
            t_s: rng.random_range(1..=8),
        };
        let th = PartitionThresholds {
            t_r: rng.random_range(0.5..=th.t_d),
            ..th
        };
        let eps = rng.random_range(0.05..5.0);
        let (t_d, t_r) = noisy_thresholds(&th, eps, 150.0 / 14.0, &mut noise).unwrap();
        let ours: Vec<Vec<f64>> = partition_ranges(&values, t_d, t_r, th.t_s)
            .iter()
            .map(|&(s, e)| values[s..=e].to_vec())
            .collect();
        if ours != reference_partition(&values, t_d, t_r, th.t_s) {
            mismatches += 1;
        }
    }
    let mut broken = 0;
    for _ in 0..100_000 {
        let values = random_histogram(&mut rng, 64);
        let t_d = rng.random_range(0.1..80.0);
        let t_r = rng.random_range(0.1..80.0);
        let t_s = rng.random_range(1..=10);
        let ranges = partition_ranges(&values, t_d, t_r, t_s);
        let mut next = 0;
        let mut ok = true;
        for &(s, e) in &ranges {
            ok &= s == next && s <= e;
            next = e + 1;
        }
        ok &= next == values.len();
        if !ok {
            broken += 1;
        }
    }
    outcome(
        mismatches == 0 && broken == 0,
        format!("{mismatches}/10000 reference mismatches, {broken}/100000 coverage failures"),
    )
}

fn formula_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tol = 1e-9;
    let mut worst = [0.0f64; 4];

    for _ in 0..1000 {
        let n = rng.random_range(2..=144);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..250.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..250.0)).collect();
        worst[0] = worst[0].max((pearson(&a, &b).unwrap() - pearson_oracle(&a, &b)).abs());
    }

    for _ in 0..1000 {
        let params = SamplerParams {
            theta_p: rng.random_range(0.0..2.0),
            theta_i: rng.random_range(0.0..2.0),
            theta_d: rng.random_range(0.0..2.0),
            delta: rng.random_range(0.01..0.5),
            m: rng.random_range(1..=5),
            ..SamplerParams::default()
        };
        let mut state = SamplerState::new(params).unwrap();
        let mut oracle = PidOracle {
            theta: (params.theta_p, params.theta_i, params.theta_d),
            delta: params.delta,
            m: params.m,
            past: Vec::new(),
            last_day: 0,
        };
        let mut day = 1;
        for _ in 0..rng.random_range(1..8) {
            let e = rng.random_range(-1.0..1.0);
            let got = state.pid_error(e, day);
            let want = oracle.step(e, day);
            worst[1] = worst[1].max((got - want).abs() / want.abs().max(1.0));
            let step = rng.random_range(1..6);
            state.commit(day, step);
            day += step;
        }
    }

    let mut interval_mismatch = 0;
    for _ in 0..1000 {
        let prev = rng.random_range(1..=20);
        let eta = rng.random_range(0.1..5.0);
        let u = rng.random_range(0.0..30.0);
        let c = rng.random_range(0.0..=1.0);
        let eps_r = if rng.random_bool(0.05) {
            0.0
        } else {
            rng.random_range(0.0..5.0)
        };
        let use_max = rng.random_bool(0.7);
        let mut state = SamplerState::new(SamplerParams {
            eta,
            max_interval: 1000,
            composition: if use_max {
                HealthTermComposition::Max
            } else {
                HealthTermComposition::Min
            },
            ..SamplerParams::default()
        })
        .unwrap();
        state.commit(1, prev);
        if state.next_interval(u, c, eps_r)
            != interval_oracle(prev, eta, u, c, eps_r, use_max, 1000)
        {
            interval_mismatch += 1;
        }
    }
    worst[2] = interval_mismatch as f64;

    for _ in 0..1000 {
        let params = AllocationParams {
            phi: rng.random_range(0.01..2.0),
            p_max: rng.random_range(0.05..=1.0),
            epsilon_max: rng.random_range(0.01..10.0),
            q: 0.2,
        };
        let eps_r = rng.random_range(0.0..10.0);
        let interval = rng.random_range(1..=60);
        let got = allocate_budget(eps_r, interval, &params);
        let want = allocation_oracle(
            eps_r,
            interval,
            params.phi,
            params.p_max,
            params.epsilon_max,
        );
        worst[3] = worst[3].max((got - want).abs());
    }

    let pass = worst[0] <= tol && worst[1] <= tol && interval_mismatch == 0 && worst[3] <= tol;
    outcome(
        pass,
        format!(
            "max err pearson {:.1e}, pid {:.1e}, allocation {:.1e}; interval mismatches {}",
            worst[0], worst[1], worst[3], interval_mismatch
        ),
    )
}

fn epsilon_direction() -> Outcome {
    let eps_grid = [0.1, 0.5, 1.0, 3.0];
    let mut ours = Vec::new();
    let mut uniform = Vec::new();
    for eps in eps_grid {
        let config = PipelineConfig {
            epsilon: eps,
            ..PipelineConfig::default()
        };
        let run = |stream_seed: u64, seed: u64, baseline: bool| {
            let stream = generate_synthetic(stream_seed, 90, Profile::Mixed);
            let c = PipelineConfig {
                seed,
                ..config.clone()
            };
            if baseline {
                run_baseline(Baseline::Uniform, &c, &stream).unwrap().1.mae
            } else {
                run_stream(&c, &stream).unwrap().1.mae
            }
        };
        ours.push(seed_mean(5000, |s, p| run(s, p, false)));
        uniform.push(seed_mean(5000, |s, p| run(s, p, true)));
    }
    let decreasing = ours.windows(2).all(|w| w[1] < w[0]);
    let beats = ours.iter().zip(&uniform).all(|(a, b)| a < b);
    outcome(
        decreasing && beats,
        format!(
            "eps {eps_grid:?}: MAE {} vs uniform {}",
            fmt_list(&ours),
            fmt_list(&uniform)
        ),
    )
}

fn window_direction() -> Outcome {
    let mut ours = Vec::new();
    let mut uniform = Vec::new();
    for w in [7u32, 14, 28] {
        let config = PipelineConfig {
            w,
            epsilon: 1.0,
            ..PipelineConfig::default()
        };
        let run = |stream_seed: u64, seed: u64, baseline: bool| {
            let stream = generate_synthetic(stream_seed, 90, Profile::Mixed);
            let c = PipelineConfig {
                seed,
                ..config.clone()
            };
            if baseline {
                run_baseline(Baseline::Uniform, &c, &stream).unwrap().1.mae
            } else {
                run_stream(&c, &stream).unwrap().1.mae
            }
        };
        ours.push(seed_mean(6000, |s, p| run(s, p, false)));
        uniform.push(seed_mean(6000, |s, p| run(s, p, true)));
    }
    let ratio_ours = ours[2] / ours[0];
    let ratio_uniform = uniform[2] / uniform[0];
    outcome(
        ratio_uniform > ratio_ours,
        format!(
            "w 7/14/28: MAE {} (growth {ratio_ours:.2}) vs uniform {} (growth {ratio_uniform:.2})",
            fmt_list(&ours),
            fmt_list(&uniform)
        ),
    )
}

fn partition_effect() -> Outcome {
    let run = |enabled: bool| {
        let mut config = PipelineConfig::default();
        config.partition.enabled = enabled;
        seed_mean(7000, |s, p| {
            let stream = generate_synthetic(s, 90, Profile::Sick);
            run_stream(
                &PipelineConfig {
                    seed: p,
                    ..config.clone()
                },
                &stream,
            )
            .unwrap()
            .1
            .mae
        })
    };
    let with = run(true);
    let without = run(false);
    let ratio = with / without;
    outcome(
        ratio <= 0.8,
        format!("MAE with {with:.3}, without {without:.3}, ratio {ratio:.3} (need <= 0.8)"),
    )
}

fn filter_non_degradation() -> Outcome {
    let results: Vec<(f64, f64)> = (0..SEEDS)
        .into_par_iter()
        .map(|i| {
            let stream = generate_synthetic(8000 + i, 90, Profile::Constant);
            let config = PipelineConfig {
                seed: i,
                ..PipelineConfig::default()
            };
            let r = run_stream(&config, &stream).unwrap().1;
            (r.mae, r.mae_unfiltered)
        })
        .collect();
    let worst = results
        .iter()
        .map(|(post, pre)| post / pre)
        .fold(0.0, f64::max);
    let post = mean(&results.iter().map(|r| r.0).collect::<Vec<_>>());
    let pre = mean(&results.iter().map(|r| r.1).collect::<Vec<_>>());
    outcome(
        worst <= 1.05,
        format!("mean MAE post {post:.3} vs pre {pre:.3}; worst per-seed ratio {worst:.3}"),
    )
}

fn post_processing_discipline() -> Outcome {
    let stream = generate_synthetic(9, 90, Profile::Mixed);
    let probe = RecordingProbe::default();
    let (records, _) = run_stream_probed(&PipelineConfig::default(), &stream, &probe).unwrap();
    let accesses = probe.accesses();
    let foreign = accesses
        .iter()
        .filter(|(s, _)| !s.is_private_mechanism())
        .count();
    let poisoned = std::panic::catch_unwind(|| {
        run_stream_probed(&PipelineConfig::default(), &stream, &PoisonedProbe).unwrap();
    })
    .is_ok();
    let sampled = records.iter().filter(|r| r.sampled).count();
    outcome(
        foreign == 0 && poisoned && !accesses.is_empty(),
        format!(
            "{} raw reads over {sampled} sampling days, {foreign} outside partition/perturbation",
            accesses.len()
        ),
    )
}

fn determinism_and_speed() -> Outcome {
    let stream = generate_synthetic(10, 90, Profile::Mixed);
    let config = PipelineConfig {
        seed: 10,
        ..PipelineConfig::default()
    };
    let encode = |out: &(Vec<ReleaseRecord>, UtilityReport)| serde_json::to_vec(out).unwrap();
    let t = Instant::now();
    let first = run_stream(&config, &stream).unwrap();
    let elapsed = t.elapsed();
    let second = run_stream(&config, &stream).unwrap();
    let identical = encode(&first) == encode(&second);
    outcome(
        identical && elapsed < Duration::from_secs(1),
        format!("byte-identical: {identical}; 90 days x 144 bins in {elapsed:.2?}"),
    )
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.2}")).collect();
    format!("[{}]", parts.join(", "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "budget soundness",
            budget_soundness,
            Some(Duration::from_secs(60)),
        ),
        ("laplace correctness", laplace_correctness, None),
        ("partition oracle equivalence", partition_equivalence, None),
        ("controller and allocation formulas", formula_fidelity, None),
        (
            "error decreases with epsilon",
            epsilon_direction,
            Some(Duration::from_secs(120)),
        ),
        ("window growth below baseline", window_direction, None),
        ("partition reduces error", partition_effect, None),
        ("filter non-degradation", filter_non_degradation, None),
        (
            "post-processing discipline",
            post_processing_discipline,
            None,
        ),
        ("determinism and performance", determinism_and_speed, None),
    ];
    let mut failed = Vec::new();
    for (i, (name, run, budget)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        let (mut o, elapsed) = timed(run);
        if let Some(limit) = budget {
            if elapsed > limit {
                o.pass = false;
                o.detail
                    .push_str(&format!("; runtime {elapsed:.1?} over {limit:?}"));
            }
        }
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} {verdict} {name} ({elapsed:.1?}): {}",
            o.detail
        );
        if !o.pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
