//! Machine-readable run reports.

use std::path::Path;

use anyhow::Context;
use kdiag::synth::BeliefStats;
use kdiag::verify::{CheckResult, DiagnosabilityReport};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Input {
    pub path: String,
    pub sha256: String,
}

impl Input {
    pub fn new(path: &Path, text: &str) -> Input {
        Input {
            path: path.display().to_string(),
            sha256: hex(&Sha256::digest(text.as_bytes())),
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Default, Serialize)]
pub struct Synthesis {
    pub monitored_states: usize,
    pub beliefs: usize,
    pub edges: usize,
    pub largest_belief: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u128>,
}

impl Synthesis {
    pub fn new(states: usize, stats: BeliefStats) -> Synthesis {
        Synthesis {
            monitored_states: states,
            beliefs: stats.beliefs,
            edges: stats.edges,
            largest_belief: stats.max_belief,
            wall_time_ms: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: Vec<Input>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<Synthesis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub determinism: Option<CheckResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub results: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnosability: Vec<DiagnosabilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &'static str) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            tool: "kdiag",
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: Vec::new(),
            synthesis: None,
            determinism: None,
            results: Vec::new(),
            diagnosability: Vec::new(),
            error: None,
            passed: true,
        }
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}
