//! Scenario runner for the Benjamin-Ono solver in `bolab-core`.
//!
//! A run reads a flat `key = value` config, checks the hypotheses of its
//! scenario on the initial data, evolves, and writes CSV tables, a JSON
//! manifest with every gate, and a gnuplot script.

pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod scenarios;

use std::path::Path;

pub use config::{DataKind, ExperimentConfig, Scenario};
pub use error::{Result, RunError};
pub use manifest::{Gate, RunManifest};
pub use output::Table;
pub use scenarios::{execute, REFERENCE_SCALE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_GATE_FAILURE: i32 = 5;

/// Runs `cfg` and writes its outputs into `out_dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<RunManifest> {
    let (manifest, tables) = execute(cfg, seed)?;
    output::write_run(out_dir, &tables, &manifest)?;
    Ok(manifest)
}

/// Exit code for a finished run.
pub fn exit_code(manifest: &RunManifest) -> i32 {
    if manifest.passed {
        EXIT_OK
    } else {
        EXIT_GATE_FAILURE
    }
}
