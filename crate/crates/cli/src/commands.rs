use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use redpoctor::{
    generate_synthetic_with, run_baseline, run_stream, Baseline, PipelineConfig, Profile,
    StreamPrefix, SyntheticOptions,
};
use serde::Serialize;

use crate::config_file::{env_seed, resolve_config};
use crate::csv_io::{parse_stream_csv, write_stream_csv};
use crate::error::CliError;
use crate::report::{emit_report, write_json, write_sweep, SweepRow};

#[derive(Debug, Parser)]
#[command(
    name = "redpoctor",
    version,
    about = "Streaming w-day private histogram release"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic heart-rate stream.
    Gen(GenArgs),
    /// Release a stream and score it.
    Run(RunArgs),
    /// Release a stream with the pipeline and with baselines.
    Compare(CompareArgs),
    /// Average errors over seeds along one config axis.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// healthy, sick, mixed or constant
    #[arg(long, default_value = "mixed")]
    pub profile: Profile,
    #[arg(long, default_value_t = 90)]
    pub days: u32,
    /// Defaults to $REDPOCTOR_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 144)]
    pub bins: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set sampler.eta=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Pipeline seed; wins over the config file and $REDPOCTOR_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig, CliError> {
        resolve_config(self.config.as_deref(), &self.overrides, self.seed)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Comma-separated baseline names.
    #[arg(long, value_delimiter = ',', default_value = "uniform,sample_fixed")]
    pub baselines: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// `key=v1,v2,...`, e.g. `epsilon=0.1,0.5,1,3` or `w=7,14,28`.
    #[arg(long)]
    pub axis: String,
    /// Seeds per grid point, starting at the resolved seed.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn gen(a: &GenArgs) -> Result<(), CliError> {
    if a.days == 0 || a.bins == 0 {
        return Err(CliError::Usage("--days and --bins must be >= 1".into()));
    }
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let stream = generate_synthetic_with(
        seed,
        a.days,
        a.profile,
        SyntheticOptions {
            bins_per_day: a.bins,
        },
    );
    let file = File::create(&a.output).map_err(|e| CliError::io(&a.output, e))?;
    write_stream_csv(BufWriter::new(file), stream.histograms())
        .map_err(|e| CliError::Output(e.to_string()))?;
    println!(
        "wrote {} days x {} bins to {}",
        a.days,
        a.bins,
        a.output.display()
    );
    Ok(())
}

fn run(a: &RunArgs) -> Result<(), CliError> {
    let config = a.config.resolve()?;
    let stream = parse_stream_csv(&a.input)?;
    let (records, report) = run_stream(&config, &stream)?;
    emit_report(&report, &records, &config, "redpoctor", &a.output)?;
    println!(
        "days={} samples={} mae={} mre={}",
        report.days,
        report.sample_days.len(),
        report.mae,
        report.mre
    );
    Ok(())
}

#[derive(Serialize)]
struct MethodSummary {
    method: String,
    mae: f64,
    mre: f64,
    samples: usize,
}

fn compare(a: &CompareArgs) -> Result<(), CliError> {
    let config = a.config.resolve()?;
    let baselines = a
        .baselines
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.parse::<Baseline>()
                .map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let stream = parse_stream_csv(&a.input)?;

    let mut summary = Vec::new();
    let (records, report) = run_stream(&config, &stream)?;
    emit_report(
        &report,
        &records,
        &config,
        "redpoctor",
        &a.output.join("redpoctor"),
    )?;
    summary.push(MethodSummary {
        method: "redpoctor".into(),
        mae: report.mae,
        mre: report.mre,
        samples: report.sample_days.len(),
    });
    for b in baselines {
        let name = b.to_string();
        let (records, report) = run_baseline(b, &config, &stream)?;
        emit_report(&report, &records, &config, &name, &a.output.join(&name))?;
        summary.push(MethodSummary {
            method: name,
            mae: report.mae,
            mre: report.mre,
            samples: report.sample_days.len(),
        });
    }
    write_json(&a.output.join("compare.json"), &summary)?;
    for s in &summary {
        println!(
            "{:<12} mae={} mre={} samples={}",
            s.method, s.mae, s.mre, s.samples
        );
    }
    Ok(())
}

/// Parses `key=v1,v2,...`.
pub fn parse_axis(axis: &str) -> Result<(String, Vec<String>), CliError> {
    let (key, values) = axis
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("axis `{axis}` is not key=v1,v2,...")))?;
    let values: Vec<String> = values
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(CliError::Usage(format!("axis `{key}` has no values")));
    }
    Ok((key.trim().to_string(), values))
}

#[derive(Serialize)]
struct PointSummary<'a> {
    axis: &'a str,
    x: &'a str,
    config: &'a PipelineConfig,
    seeds: Vec<u64>,
    mae: Vec<f64>,
    mre: Vec<f64>,
}

fn sweep(a: &SweepArgs) -> Result<(), CliError> {
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be >= 1".into()));
    }
    let base = a.config.resolve()?;
    let (key, values) = parse_axis(&a.axis)?;
    let points = values
        .iter()
        .map(|v| {
            let mut c = base.clone();
            c.set(&key, v)?;
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let stream = parse_stream_csv(&a.input)?;
    let seeds: Vec<u64> = (0..a.seeds).map(|i| base.seed.wrapping_add(i)).collect();

    let results = points
        .par_iter()
        .map(|config| sweep_point(config, &stream, &seeds))
        .collect::<Result<Vec<_>, _>>()?;

    std::fs::create_dir_all(&a.output).map_err(|e| CliError::io(&a.output, e))?;
    let mut rows = Vec::with_capacity(values.len());
    for ((x, config), (mae, mre)) in values.iter().zip(&points).zip(results) {
        let dir = a.output.join(format!("{key}_{x}"));
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        rows.push(SweepRow {
            x: x.clone(),
            mae: mean(&mae),
            mre: mean(&mre),
        });
        let point = PointSummary {
            axis: &key,
            x,
            config,
            seeds: seeds.clone(),
            mae,
            mre,
        };
        write_json(&dir.join("summary.json"), &point)?;
    }
    let dat = a.output.join("sweep.dat");
    write_sweep(&dat, &key, &rows)?;
    for r in &rows {
        println!("{key}={} mae={} mre={}", r.x, r.mae, r.mre);
    }
    Ok(())
}

fn sweep_point(
    config: &PipelineConfig,
    stream: &StreamPrefix,
    seeds: &[u64],
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let c = PipelineConfig {
                seed,
                ..config.clone()
            };
            run_stream(&c, stream).map(|(_, r)| (r.mae, r.mre))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(runs.into_iter().unzip())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
