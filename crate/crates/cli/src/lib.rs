//! Batch front-end: configuration, the certification pipelines and the
//! artifacts they write.
//!
//! Each command turns a [`RunConfig`] into an [`Outcome`]: a JSON report
//! with one line per check plus CSV/SVG/OBJ files. Exit codes are 0 for a
//! pass (or an expected failure of a negative control), 1 for a failed
//! certification and 2 for bad input or a solver failure.

mod config;
mod pipelines;

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use config::{parse_config, set_key, Command, NonlinearitySpec, RawConfig, RunConfig};
pub use pipelines::{cmd_profile, cmd_remark_r, cmd_sweep, cmd_theorem1, cmd_theorem2};

/// Overrides the configured output directory.
pub const OUTPUT_ENV: &str = "STABLECERT_OUT";
pub const TOOL: &str = "stablecert";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input: {0}")]
    Input(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    /// A negative control that failed the way it should.
    #[serde(rename = "EXPECTED-FAIL")]
    ExpectedFail,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::ExpectedFail => 0,
            Verdict::Fail => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::ExpectedFail => "EXPECTED-FAIL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckLine { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub config: std::collections::BTreeMap<String, String>,
    pub result: Verdict,
    pub checks: Vec<CheckLine>,
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(cfg: &RunConfig, checks: Vec<CheckLine>, data: serde_json::Value) -> Self {
        let result = if checks.iter().all(|c| c.passed) { Verdict::Pass } else { Verdict::Fail };
        Report {
            tool: TOOL,
            version: VERSION,
            command: cfg.command.name(),
            config_hash: cfg.hash(),
            config: cfg.echo(),
            result,
            checks,
            data,
        }
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// Everything a command produces; nothing touches the disk until
/// [`Outcome::write`].
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    /// `(file name, contents)`, written in this order.
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    pub fn verdict(&self) -> Verdict {
        self.report.result
    }

    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes the report as `report.json` plus every artifact into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, bytes)?;
            written.push(p);
        }
        let p = dir.join("report.json");
        std::fs::write(&p, self.report_json())?;
        written.push(p);
        Ok(written)
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Profile => cmd_profile(cfg),
        Command::Theorem1 => cmd_theorem1(cfg),
        Command::Theorem2 => cmd_theorem2(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::RemarkR => cmd_remark_r(cfg),
    }
}

/// `<output>/<command>`, with the environment override taking precedence
/// over the configured directory.
pub fn output_dir(cfg: &RunConfig, flag: Option<&Path>) -> PathBuf {
    let base = flag
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| cfg.output.clone());
    base.join(cfg.command.name())
}
