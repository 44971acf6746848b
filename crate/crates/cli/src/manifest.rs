use std::path::Path;

use serde::{Deserialize, Serialize};

use dce_core::config::RunConfig;
use dce_core::trace::{Item, Record, Trace};
use dce_core::verifier::VerifierReport;

/// What one run produced, printed after `run` and written per sweep cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub config_digest: String,
    pub horizon: u64,
    pub max_depth: u64,
    pub seed: u64,
    /// The config file the digest belongs to.
    pub config: String,
    pub trace: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    /// `PASS` or `FAIL`, when the run was verified.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    pub wall_clock_ms: u64,
    pub counts: Counts,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    /// Lines of the trace file.
    pub lines: u64,
    pub stages: u64,
    pub events: u64,
    pub initializations: u64,
}

impl Counts {
    pub fn of(trace: &Trace) -> Self {
        let mut c = Counts {
            lines: trace.len() as u64,
            ..Counts::default()
        };
        for rec in &trace.records {
            match rec {
                Record::Stage(_) => c.stages += 1,
                Record::Event(ev) => {
                    c.events += 1;
                    if matches!(ev.item, Item::Init { .. }) {
                        c.initializations += 1;
                    }
                }
                _ => {}
            }
        }
        c
    }
}

impl RunManifest {
    pub fn new(
        cfg: &RunConfig,
        config: &Path,
        trace_path: &Path,
        trace: &Trace,
        wall_clock_ms: u64,
    ) -> Self {
        Self {
            config_digest: cfg.digest(),
            horizon: cfg.horizon,
            max_depth: cfg.max_depth,
            seed: cfg.seed,
            config: config.display().to_string(),
            trace: trace_path.display().to_string(),
            report: None,
            status: None,
            wall_clock_ms,
            counts: Counts::of(trace),
        }
    }

    pub fn verified(mut self, path: &Path, report: &VerifierReport) -> Self {
        self.report = Some(path.display().to_string());
        self.status = Some(if report.passed() { "PASS" } else { "FAIL" }.to_string());
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always serializable")
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }
}
