//! Command-line front end: stream CSV ingestion, flat config files, report
//! emission and experiment drivers.

pub mod commands;
pub mod config_file;
pub mod csv_io;
pub mod error;
pub mod report;

pub use commands::{main_with, Cli, Command};
pub use csv_io::{parse_stream_csv, read_stream_csv, write_stream_csv};
pub use error::CliError;
pub use report::emit_report;
