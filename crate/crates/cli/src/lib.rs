//! Reproducible experiments for [`netform`]: TOML configuration, binary
//! snapshots, CSV reports and the `netform` command line.

pub mod commands;
pub mod config;
mod error;
pub mod report;
pub mod snapshot;

pub use commands::{diagnose, main_with_args};
pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::{CliError, Result};
pub use report::emit_reports;
pub use snapshot::{read_snapshot, write_snapshot, SnapshotFile};
