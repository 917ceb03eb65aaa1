// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario files, dispatch and artifact writing for the `chiralwg`
//! command.

pub mod error;
pub mod output;
pub mod run;
pub mod scenario;

pub use error::{CliError, Result};
pub use run::{run_scenario, RunSummary};
pub use scenario::{parse_scenario, parse_scenario_with, Kind, Overrides, Scenario};

/// Caps the global worker pool from `CHIRALWG_THREADS`.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("CHIRALWG_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("CHIRALWG_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
