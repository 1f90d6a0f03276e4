//! Scenario runner behind the `apselect` binary.
//!
//! A run reads a JSON [`config::RunConfig`], executes one scenario and writes
//! `report.json` plus scenario-specific JSON/CSV files into the output
//! directory. Nothing is written when the configuration is rejected.

pub mod config;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};

use serde::Serialize;

use config::{RunConfig, Scenario};
use output::{to_json, Outputs};
use scenarios::Certificate;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("numerical failure in stage {stage}: {message}")]
    Numerical { stage: String, message: String },
    #[error("cannot write outputs: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub(crate) fn input(e: besicovitch::Error) -> Self {
        RunError::Input(e.to_string())
    }

    /// Classifies a library error raised while running `stage`.
    pub(crate) fn stage(stage: &str, e: besicovitch::Error) -> Self {
        if e.is_input_error() {
            RunError::Input(format!("{stage}: {e}"))
        } else {
            RunError::Numerical { stage: stage.to_string(), message: e.to_string() }
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Serialize)]
struct Report<'a> {
    scenario: &'a str,
    seed: u64,
    status: &'a str,
    certificates: &'a [Certificate],
    results: serde_json::Value,
}

#[derive(Debug)]
pub struct RunSummary {
    pub exit_code: i32,
    pub message: String,
    pub out_dir: PathBuf,
}

/// Parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))
}

/// Runs `scenario` from the configuration at `config_path`.
pub fn run(scenario: Scenario, config_path: &Path, out_dir: &Path, seed: Option<u64>) -> RunSummary {
    let summary = |exit_code, message: String| RunSummary { exit_code, message, out_dir: out_dir.to_path_buf() };
    let mut cfg = match load_config(config_path) {
        Ok(c) => c,
        Err(e) => return summary(EXIT_INPUT, e.to_string()),
    };
    if cfg.scenario != scenario {
        let msg = format!("config declares scenario {} but {} was requested", cfg.scenario.name(), scenario.name());
        return summary(EXIT_INPUT, msg);
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    match execute(&cfg) {
        Ok((outputs, failed)) => {
            if let Err(e) = outputs.write_to(out_dir) {
                return summary(EXIT_NUMERICAL, RunError::Io(e).to_string());
            }
            if failed.is_empty() {
                summary(EXIT_OK, format!("{}: all certificates passed", scenario.name()))
            } else {
                let lines: Vec<String> = failed
                    .iter()
                    .map(|c| format!("{}: {} (measured {:e}, bound {:e})", c.name, c.inequality, c.measured, c.bound))
                    .collect();
                summary(EXIT_CERTIFICATE, format!("certificate failure\n{}", lines.join("\n")))
            }
        }
        Err(e @ RunError::Input(_)) => summary(EXIT_INPUT, e.to_string()),
        Err(e) => summary(EXIT_NUMERICAL, e.to_string()),
    }
}

/// Runs a validated configuration and returns its files and any failed
/// certificates, without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<(Outputs, Vec<Certificate>), RunError> {
    let mut outputs = Outputs::default();
    let result = match cfg.scenario {
        Scenario::Metrics => scenarios::metrics(cfg, &mut outputs),
        Scenario::AlmostPeriods => scenarios::almost(cfg, &mut outputs),
        Scenario::Perturb => scenarios::perturb(cfg, &mut outputs),
        Scenario::Partition => scenarios::partition(cfg, &mut outputs),
        Scenario::Select => scenarios::select(cfg, &mut outputs),
        Scenario::Verify => scenarios::verify(cfg, &mut outputs),
    }?;
    let failed: Vec<Certificate> = result.certificates.iter().filter(|c| !c.passed).cloned().collect();
    let report = Report {
        scenario: cfg.scenario.name(),
        seed: cfg.seed.unwrap_or(0),
        status: if failed.is_empty() { "pass" } else { "certificate_failure" },
        certificates: &result.certificates,
        results: result.results,
    };
    let bytes = to_json(&report).map_err(|e| RunError::Numerical { stage: "output".into(), message: e.to_string() })?;
    outputs.files.insert(0, ("report.json".into(), bytes));
    Ok((outputs, failed))
}
