use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rmtl_core::bounds::Suitability;
use rmtl_core::{CheckStatus, DominanceVerdict, Theorem};

use crate::config::ExperimentConfig;
use crate::runner::{CellResult, SeriesVerdict, Tally};
use crate::CliError;

pub const REPORT_FILE: &str = "report.json";
pub const BOUNDS_FILE: &str = "bounds.csv";
pub const VERDICTS_FILE: &str = "verdicts.jsonl";
pub const CONFIG_FILE: &str = "config.toml";

pub const STATEMENT: &str = "Probabilities are maximized over a finite candidate set, so every measured left-hand side \
lower-bounds its class-wide value; a held verdict confirms a necessary condition of the bound, not the bound itself.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Seconds since the Unix epoch. The only field that differs between
    /// runs of the same configuration.
    pub generated_at: u64,
    pub tool_version: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub config: ExperimentConfig,
    pub statement: String,
    pub validity_verdict: Suitability,
    pub series: Vec<SeriesVerdict>,
    pub tally: Tally,
    pub exit_code: u8,
    pub cells: Vec<CellResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub config_hash: String,
    pub seed: u64,
    pub cell_seed: u64,
    pub n: usize,
    pub xi: Vec<f64>,
    pub theorem: Theorem,
    pub status: CheckStatus,
    pub vacuous: bool,
    pub verdict: Option<DominanceVerdict>,
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

pub fn bounds_csv(report: &RunReport) -> String {
    let mut out = format!("config_hash,seed,cell_seed,xi_index,clustered,{}\n", rmtl_core::BoundReport::CSV_HEADER);
    for c in &report.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            report.config_hash,
            c.seed,
            c.cell_seed,
            c.xi_index,
            c.report.clustered,
            c.report.csv_row()
        ));
    }
    out
}

pub fn verdict_records(report: &RunReport) -> Vec<VerdictRecord> {
    report
        .cells
        .iter()
        .flat_map(|c| {
            c.checks.iter().map(move |check| VerdictRecord {
                config_hash: report.config_hash.clone(),
                seed: c.seed,
                cell_seed: c.cell_seed,
                n: c.n,
                xi: c.xi.clone(),
                theorem: check.theorem,
                status: check.status.clone(),
                vacuous: check.vacuous,
                verdict: check.verdict.clone(),
            })
        })
        .collect()
}

pub fn verdicts_jsonl(report: &RunReport) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    rmtl_core::verify::write_jsonl(&mut buf, &verdict_records(report))?;
    Ok(buf)
}

/// Writes the report, bounds table, verdict log and resolved config.
pub fn write_outputs(dir: &Path, report: &RunReport) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| CliError::Run(e.to_string()))?;
    write_atomic(&dir.join(REPORT_FILE), json.as_bytes())?;
    write_atomic(&dir.join(BOUNDS_FILE), bounds_csv(report).as_bytes())?;
    write_atomic(&dir.join(VERDICTS_FILE), &verdicts_jsonl(report)?)?;
    let config = format!(
        "# config_hash = \"{}\"\n# seeds = {:?}\n{}",
        report.config_hash,
        report.seeds,
        report.config.to_toml()?
    );
    write_atomic(&dir.join(CONFIG_FILE), config.as_bytes())?;
    Ok(())
}

pub fn read_report(dir: &Path) -> Result<RunReport, CliError> {
    let path = dir.join(REPORT_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
