//! Config-driven scenarios for the hybrid lattice Boltzmann / finite
//! element solvers: parsing, validation, runs, refinement studies and
//! CSV/SVG output.

pub mod config;
pub mod error;
pub mod exact;
pub mod output;
pub mod report;
pub mod scenarios;
pub mod study;

use std::path::Path;
use std::time::Instant;

pub use config::ScenarioConfig;
pub use error::{Result, ScenarioError};
pub use report::RunReport;
pub use study::{convergence_study, fit_order, OrderReport};

/// Validates `cfg`, runs it and writes its outputs into `out` when given.
pub fn run(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunReport> {
    cfg.check()?;
    let start = Instant::now();
    let mut report = scenarios::run_scenario(cfg)?;
    report.wall_time = start.elapsed().as_secs_f64();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
        report.write(dir, cfg.output.fields, cfg.output.plots)?;
    }
    Ok(report)
}
