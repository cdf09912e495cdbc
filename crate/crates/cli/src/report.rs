//! Output files of a run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use redpoctor::{PipelineConfig, ReleaseRecord, UtilityReport};
use serde::Serialize;

use crate::csv_io::{released_histograms, write_stream_csv};
use crate::error::CliError;

#[derive(Serialize)]
struct MetricsFile<'a> {
    method: &'a str,
    seed: u64,
    config: &'a PipelineConfig,
    #[serde(flatten)]
    report: &'a UtilityReport,
}

/// Writes `released.csv` and `metrics.json` into `out_dir`, creating it if
/// needed. Returns the written paths.
pub fn emit_report(
    report: &UtilityReport,
    records: &[ReleaseRecord],
    config: &PipelineConfig,
    method: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let released = out_dir.join("released.csv");
    let file = create(&released)?;
    write_stream_csv(file, &released_histograms(records))
        .map_err(|e| CliError::Output(e.to_string()))?;

    let metrics = out_dir.join("metrics.json");
    let body = MetricsFile {
        method,
        seed: config.seed,
        config,
        report,
    };
    write_json(&metrics, &body)?;
    Ok(vec![released, metrics])
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Output(e.to_string()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

/// One sweep grid point, averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: String,
    pub mae: f64,
    pub mre: f64,
}

/// Whitespace-separated `x mae mre` columns with a commented header.
pub fn write_sweep(path: &Path, axis: &str, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let result = (|| {
        writeln!(w, "# {axis} mae mre")?;
        for r in rows {
            writeln!(w, "{} {} {}", r.x, r.mae, r.mre)?;
        }
        w.flush()
    })();
    result.map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}
