//! Structured run records.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use modaprompt::prompt::PromptConfig;
use serde::{Deserialize, Serialize};

pub const STATUS_OK: &str = "ok";

/// Per-sequence (or aggregate) metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub name: String,
    pub pr: f64,
    pub re: f64,
    pub f: f64,
    /// `None` when the best threshold is +∞ (nothing reported), and for
    /// aggregates.
    pub tau_star: Option<f64>,
    pub success_auc: f64,
    pub precision_at_20: f64,
    pub status: String,
}

impl MetricRecord {
    pub fn failed(name: &str, message: &str) -> Self {
        Self {
            name: name.to_string(),
            pr: 0.0,
            re: 0.0,
            f: 0.0,
            tau_star: None,
            success_auc: 0.0,
            precision_at_20: 0.0,
            status: format!("failed: {message}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

/// Unweighted mean over the successful records, in the order given.
pub fn aggregate(records: &[MetricRecord]) -> MetricRecord {
    let ok: Vec<&MetricRecord> = records.iter().filter(|r| r.is_ok()).collect();
    let n = ok.len();
    let mean = |f: fn(&MetricRecord) -> f64| {
        if n == 0 {
            0.0
        } else {
            ok.iter().map(|r| f(r)).sum::<f64>() / n as f64
        }
    };
    let status = if n == records.len() {
        STATUS_OK.to_string()
    } else {
        format!("{} of {} sequences failed", records.len() - n, records.len())
    };
    MetricRecord {
        name: "aggregate".into(),
        pr: mean(|r| r.pr),
        re: mean(|r| r.re),
        f: mean(|r| r.f),
        tau_star: None,
        success_auc: mean(|r| r.success_auc),
        precision_at_20: mean(|r| r.precision_at_20),
        status,
    }
}

/// Everything that depends only on inputs, flags and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPayload {
    pub manifest_paths: Vec<PathBuf>,
    pub prompt_config: PromptConfig,
    pub tracker_name: String,
    pub tracker_params: serde_json::Value,
    pub per_sequence_results: Vec<MetricRecord>,
    pub aggregate: MetricRecord,
    pub toolkit_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub timestamp: u64,
    #[serde(flatten)]
    pub payload: MetricPayload,
}

impl RunRecord {
    pub fn new(payload: MetricPayload) -> Self {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        Self {
            run_id: format!("{:x}-{:x}", now.as_nanos(), std::process::id()),
            timestamp: now.as_secs(),
            payload,
        }
    }
}

pub fn toolkit_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}
