//! Scalability sweeps over synthetic instances.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explain::{ExplainConfig, ExplainContext, ExplainError, WhyNot};
use crate::scenario::{apply_feasibility_filters, generate_synthetic, ScenarioError, SyntheticParams};
use crate::verify::collect_why_not;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("sweep needs at least one point")]
    EmptySweep,
    #[error("{axis}={value}: {source}")]
    Row {
        axis: &'static str,
        value: usize,
        #[source]
        source: ExplainError,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub const QUICK_ORDERS: [usize; 4] = [25, 50, 75, 100];
pub const FULL_ORDERS: [usize; 8] = [25, 50, 75, 100, 125, 150, 175, 200];
pub const CONSTELLATION: [usize; 6] = [5, 10, 15, 20, 25, 30];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: usize,
    pub n_orders: usize,
    pub n_satellites: usize,
    pub n_scheduled: usize,
    pub n_certificates: usize,
    pub n_tradeoffs: usize,
    pub n_prefiltered: usize,
    pub constraints_count: usize,
    pub solve_ms: f64,
    pub total_extract_ms: f64,
    /// Sum of per-order extraction times; equals the wall time when sequential.
    pub cpu_extract_ms: f64,
    pub per_cert_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub seed: u64,
    pub cloud_threshold_milli: i64,
    pub parallel: bool,
    pub explain: ExplainConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 7,
            cloud_threshold_milli: 300,
            parallel: false,
            explain: ExplainConfig::default(),
        }
    }
}

/// Solves one instance and explains every unscheduled order.
pub fn run_point(axis: &'static str, value: usize, params: &SyntheticParams, cfg: &BenchConfig) -> Result<SweepRow, BenchError> {
    let sc = generate_synthetic(params, cfg.seed)?;
    let fi = apply_feasibility_filters(&sc, cfg.cloud_threshold_milli);
    let row_err = |source| BenchError::Row { axis, value, source };
    let t = Instant::now();
    let ctx = ExplainContext::new(fi, cfg.explain.clone()).map_err(row_err)?;
    let solve_ms = t.elapsed().as_secs_f64() * 1000.0;

    let t = Instant::now();
    let answers = collect_why_not(&ctx, cfg.parallel).map_err(row_err)?;
    let total_extract_ms = t.elapsed().as_secs_f64() * 1000.0;
    let count = |f: fn(&WhyNot) -> bool| answers.iter().filter(|(w, _)| f(w)).count();
    let n_certificates = count(|w| matches!(w, WhyNot::Infeasibility(_)));
    Ok(SweepRow {
        axis: axis.to_string(),
        value,
        n_orders: params.n_orders,
        n_satellites: params.n_satellites,
        n_scheduled: ctx.schedule.assignments.len(),
        n_certificates,
        n_tradeoffs: count(|w| matches!(w, WhyNot::Tradeoff(_))),
        n_prefiltered: count(|w| matches!(w, WhyNot::Prefiltered { .. })),
        constraints_count: ctx.model.constraints.len(),
        solve_ms,
        total_extract_ms,
        cpu_extract_ms: answers.iter().map(|(_, ms)| ms).sum(),
        per_cert_ms: total_extract_ms / n_certificates.max(1) as f64,
    })
}

/// Varies the order count with 10 satellites and 5 stations.
pub fn sweep_orders(orders: &[usize], cfg: &BenchConfig) -> Result<Vec<SweepRow>, BenchError> {
    if orders.is_empty() {
        return Err(BenchError::EmptySweep);
    }
    orders
        .iter()
        .map(|&n| run_point("n_orders", n, &SyntheticParams::sized(10, 5, n), cfg))
        .collect()
}

/// Varies the constellation size with 50 orders and 5 stations.
pub fn sweep_constellation(satellites: &[usize], cfg: &BenchConfig) -> Result<Vec<SweepRow>, BenchError> {
    if satellites.is_empty() {
        return Err(BenchError::EmptySweep);
    }
    satellites
        .iter()
        .map(|&k| run_point("n_satellites", k, &SyntheticParams::sized(k, 5, 50), cfg))
        .collect()
}

pub fn emit_csv(rows: &[SweepRow]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(SWEEP_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const SWEEP_COLUMNS: [&str; 13] = [
    "axis",
    "value",
    "n_orders",
    "n_satellites",
    "n_scheduled",
    "n_certificates",
    "n_tradeoffs",
    "n_prefiltered",
    "constraints_count",
    "solve_ms",
    "total_extract_ms",
    "cpu_extract_ms",
    "per_cert_ms",
];
