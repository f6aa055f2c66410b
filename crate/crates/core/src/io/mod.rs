//! Run configuration, binary checkpoints, trajectory files and report
//! tables.
//!
//! Every run writes into its own directory (config echo, checkpoints,
//! norm time series, reports), so an experiment is self-describing.
//! Coefficients are stored raw in little-endian `f64`; grids and norm
//! diagnostics are re-derivable.

pub mod checkpoint;
pub mod config;
pub mod report;
pub mod trajectory;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use config::{load_config, RunConfig};
pub use report::{write_growth_report, write_reports, write_summary, write_sweep_report};
pub use trajectory::{read_trajectory, write_norm_series, write_trajectory};

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Create (or reuse) the run directory `root/id` and echo the config
/// file into it byte-for-byte.
pub fn prepare_run_dir(root: &Path, id: &str, config_path: Option<&Path>) -> Result<PathBuf> {
    let dir = root.join(id);
    fs::create_dir_all(&dir)?;
    if let Some(cfg) = config_path {
        fs::copy(cfg, dir.join("config.toml"))?;
    }
    Ok(dir)
}
