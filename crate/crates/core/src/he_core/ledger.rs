use std::collections::BTreeMap;

use serde::Serialize;

/// One level transition recorded by the engine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub op: &'static str,
    pub level_before: u32,
    pub level_after: u32,
}

/// Operation counters, accumulated cost units and the level trace.
///
/// Ledgers are plain values; per-worker ledgers combine with [`OpLedger::merge`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OpLedger {
    counters: BTreeMap<&'static str, u64>,
    cost_units: f64,
    depth_trace: Vec<TraceEntry>,
}

impl OpLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `count` units of `op` at `unit_cost` each and appends a trace entry.
    pub fn record(
        &mut self,
        op: &'static str,
        count: u64,
        unit_cost: f64,
        level_before: u32,
        level_after: u32,
    ) {
        *self.counters.entry(op).or_insert(0) += count;
        self.cost_units += count as f64 * unit_cost;
        self.depth_trace.push(TraceEntry {
            op,
            level_before,
            level_after,
        });
    }

    /// Adds counts without a trace entry (used for ops fused into another).
    pub fn record_silent(&mut self, op: &'static str, count: u64, unit_cost: f64) {
        *self.counters.entry(op).or_insert(0) += count;
        self.cost_units += count as f64 * unit_cost;
    }

    pub fn merge(&mut self, other: &OpLedger) {
        for (op, n) in &other.counters {
            *self.counters.entry(op).or_insert(0) += n;
        }
        self.cost_units += other.cost_units;
        self.depth_trace.extend(other.depth_trace.iter().cloned());
    }

    pub fn count(&self, op: &str) -> u64 {
        self.counters.get(op).copied().unwrap_or(0)
    }

    pub fn counters(&self) -> &BTreeMap<&'static str, u64> {
        &self.counters
    }

    pub fn cost_units(&self) -> f64 {
        self.cost_units
    }

    pub fn depth_trace(&self) -> &[TraceEntry] {
        &self.depth_trace
    }

    /// Σ counters[op] × cost_table[op], recomputed from scratch.
    pub fn recomputed_cost(&self, cost_table: &BTreeMap<String, f64>) -> f64 {
        self.counters
            .iter()
            .map(|(op, n)| *n as f64 * cost_table.get(*op).copied().unwrap_or(0.0))
            .sum()
    }
}
