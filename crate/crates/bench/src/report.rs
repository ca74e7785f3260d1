use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use encact::netgraph::BootstrapPlan;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub bootstrap_count: usize,
    pub insert_before: Vec<String>,
}

impl From<&BootstrapPlan> for PlanSummary {
    fn from(p: &BootstrapPlan) -> Self {
        PlanSummary {
            bootstrap_count: p.bootstrap_count,
            insert_before: p.insert_before.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub predicted: usize,
    pub label: Option<usize>,
    pub cost_units: f64,
    pub bootstraps: usize,
}

/// Result of `infer`. Everything except `timestamp` is a function of the
/// configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub timestamp: u64,
    pub config: RunConfig,
    pub network: String,
    pub activation: String,
    pub weights_source: String,
    pub plan: PlanSummary,
    pub records: Vec<SampleRecord>,
    /// Correct / total, present only when every sample has a label.
    pub accuracy: Option<f64>,
    pub total_cost_units: f64,
    pub mean_cost_units: f64,
    pub op_counts: BTreeMap<String, u64>,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn records_csv(&self) -> String {
        let mut out = String::from("index,predicted,label,cost_units,bootstraps\n");
        for r in &self.records {
            let label = r.label.map(|l| l.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.index, r.predicted, label, r.cost_units, r.bootstraps
            ));
        }
        out
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn accuracy(predicted: &[usize], labels: Option<&[usize]>) -> Option<f64> {
    let labels = labels?;
    if labels.is_empty() {
        return None;
    }
    let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    Some(hits as f64 / labels.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub variant: String,
    /// Accuracy of the plaintext network with exact ReLU.
    pub plaintext_acc: Option<f64>,
    pub encrypted_acc: Option<f64>,
    /// Mean cost units per sample.
    pub cost_units: f64,
    pub bootstraps: usize,
    /// Accuracy of the plaintext network computing what the encrypted one does
    /// (the Chebyshev series, the quantized switch decision).
    pub series_acc: Option<f64>,
    /// Fraction of samples whose encrypted argmax equals the exact plaintext one.
    pub agreement: f64,
}

pub const COMPARE_HEADER: &str =
    "variant,plaintext_acc,encrypted_acc,cost_units,bootstraps,series_acc,agreement";

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = format!("{COMPARE_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.variant,
            opt(r.plaintext_acc),
            opt(r.encrypted_acc),
            r.cost_units,
            r.bootstraps,
            opt(r.series_acc),
            r.agreement
        ));
    }
    out
}
