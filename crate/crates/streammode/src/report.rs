//! JSON artifacts. Each one embeds the fully-resolved config.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::ConfigDocument;
use crate::error::Failure;
use crate::harness::{LabeledTrajectory, ReplicationReport};

/// Result of `estimate` or `simulate` (`run.json`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub config: ConfigDocument,
    /// Stream seed for simulated runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Input path (`-` for standard input) for file runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub final_estimate: Vec<f64>,
    pub updates: u64,
    pub samples: usize,
}

/// Final point of one traced trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub label: String,
    pub seed: u64,
    pub initial: Vec<f64>,
    #[serde(rename = "final")]
    pub final_estimate: Vec<f64>,
}

impl From<&LabeledTrajectory> for TrajectorySummary {
    fn from(t: &LabeledTrajectory) -> Self {
        TrajectorySummary {
            label: t.label.clone(),
            seed: t.seed,
            initial: t.points[0].m.clone(),
            final_estimate: t.final_point().to_vec(),
        }
    }
}

/// `report.json` written by `replicate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub config: ConfigDocument,
    #[serde(flatten)]
    pub report: ReplicationReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trajectories: Vec<TrajectorySummary>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts always serialize");
    text.push('\n');
    text
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    fs::write(path, to_json(value)).map_err(|e| Failure::output(format!("cannot write {}: {e}", path.display())))
}
