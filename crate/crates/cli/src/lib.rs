//! Experiment runner: reads a TOML experiment, runs every `(N, ξ, seed)`
//! cell through generation, solving, estimation, bounds and checks, and
//! writes `report.json`, `bounds.csv`, `verdicts.jsonl` and SVG plots.

pub mod config;
pub mod output;
pub mod plot;
pub mod runner;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use config::{ExperimentConfig, Overrides};
use output::RunReport;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error(transparent)]
    Core(#[from] rmtl_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        1
    }
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_VIOLATED: u8 = 2;

/// `2` when any check was violated, else `0`.
pub fn exit_code_for(tally: &runner::Tally) -> u8 {
    if tally.violated > 0 {
        EXIT_VIOLATED
    } else {
        EXIT_OK
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: RunReport,
    pub warnings: Vec<String>,
}

/// Loads, overrides and validates a config.
pub fn prepare(path: &Path, overrides: &Overrides) -> Result<(ExperimentConfig, rmtl_core::TaskFamily), CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply(overrides);
    let family = cfg.validate()?;
    Ok((cfg, family))
}

/// Runs the whole experiment and writes every artifact under the
/// resolved output directory.
pub fn run_experiment(path: &Path, overrides: &Overrides, output_root: Option<&Path>) -> Result<RunOutcome, CliError> {
    let (cfg, family) = prepare(path, overrides)?;
    let cells = runner::run_cells(&cfg, &family)?;
    let series = runner::series_verdicts(&cells);
    let tally = runner::tally(&cells);
    let exit_code = exit_code_for(&tally);
    let report = RunReport {
        generated_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        seeds: cfg.seeds.clone(),
        validity_verdict: runner::overall_validity(&series),
        statement: output::STATEMENT.to_string(),
        series,
        tally,
        exit_code,
        cells,
        config: cfg,
    };
    let dir = report.config.resolve_output(output_root);
    output::write_outputs(&dir, &report)?;
    let plots = plot::emit_plots(&dir)?;
    Ok(RunOutcome {
        dir,
        report,
        warnings: plots.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn violations_map_to_exit_two() {
        let mut t = runner::Tally::default();
        assert_eq!(exit_code_for(&t), EXIT_OK);
        t.withheld = 3;
        t.vacuous = 1;
        assert_eq!(exit_code_for(&t), EXIT_OK);
        t.violated = 1;
        assert_eq!(exit_code_for(&t), EXIT_VIOLATED);
        assert_eq!(CliError::Config("x".into()).exit_code(), EXIT_ERROR);
    }
}
