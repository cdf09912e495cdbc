//! Stream CSV: header `day,bin_index,value`, one row per bin.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use redpoctor::{DayHistogram, ReleaseRecord, StreamError, StreamPrefix};

use crate::error::CliError;

pub const HEADER: [&str; 3] = ["day", "bin_index", "value"];

pub fn parse_stream_csv(path: &Path) -> Result<StreamPrefix, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_stream_csv(file)
}

/// Rows may come in any order. Every day must carry the same bin indices
/// `0..n`; a day missing any of them is reported as ragged.
pub fn read_stream_csv<R: Read>(input: R) -> Result<StreamPrefix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader.headers().map_err(|e| csv_error(1, e))?.clone();
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(CliError::Parse {
            line: 1,
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }

    let mut days: BTreeMap<u32, BTreeMap<usize, f64>> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_error(line, e)
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let bad = |what: &str, raw: &str| CliError::Parse {
            line,
            message: format!("invalid {what} `{raw}`"),
        };
        let day: u32 = field(0).parse().map_err(|_| bad("day", field(0)))?;
        let bin: usize = field(1).parse().map_err(|_| bad("bin_index", field(1)))?;
        let value: f64 = field(2).parse().map_err(|_| bad("value", field(2)))?;
        if days.entry(day).or_default().insert(bin, value).is_some() {
            return Err(CliError::Parse {
                line,
                message: format!("duplicate bin {bin} for day {day}"),
            });
        }
    }

    let width_bins = days
        .values()
        .filter_map(|bins| bins.keys().next_back())
        .max()
        .map_or(0, |&max| max + 1);
    let bin_width = u32::try_from(24 * 60 / width_bins.max(1))
        .unwrap_or(1)
        .max(1);
    let mut histograms = Vec::with_capacity(days.len());
    for (day, bins) in days {
        if bins.len() != width_bins {
            return Err(StreamError::RaggedBins(day).into());
        }
        let values: Vec<f64> = bins.into_values().collect();
        histograms.push(DayHistogram::new(day, values, bin_width)?);
    }
    Ok(StreamPrefix::new(histograms)?)
}

fn csv_error(line: u64, e: csv::Error) -> CliError {
    CliError::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn write_stream_csv<W: Write>(out: W, days: &[DayHistogram]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for h in days {
        for (i, v) in h.bins().iter().enumerate() {
            w.write_record([h.day().to_string(), i.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Final releases, clamped at zero so the file parses back as a stream.
pub fn released_histograms(records: &[ReleaseRecord]) -> Vec<DayHistogram> {
    records
        .iter()
        .map(|r| r.released.clamped_non_negative())
        .collect()
}
