//! Certificates for operator queries: why an order was scheduled, why it was
//! not, and what minimal change would let it in.

mod mis;
mod whatif;
mod why;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{build_model, force_order, ModelError, ObjectiveWeights, ScheduleModel};
use crate::scenario::{FilteredInstance, PrefilterReason, ScenarioError};
use crate::solver::{check_feasibility, solve, Assignment, Schedule, SolveResult, SolverConfig, SolverError};

pub use mis::{extract_mis, project_tags, ConstraintGroup, MisCheck, MisResult};
pub use whatif::{
    apply_atoms, corrected_instance, explain_what_if, CorrectedInstance, CorrectionAtom, CorrectionCertificate,
    CorrectionChange, WhatIfGoal,
};
pub use why::{explain_why, DominanceOutcome, DominanceRecord, TightConstraint, WhyCertificate};

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("unknown order `{0}`")]
    UnknownOrder(String),
    #[error("order `{0}` is already scheduled")]
    AlreadyScheduled(String),
    #[error("order `{0}` is not scheduled")]
    NotScheduled(String),
    #[error("model is feasible; no infeasible subset exists")]
    ModelFeasible,
    #[error("invalid correction atom #{index}: {message}")]
    InvalidAtom { index: usize, message: String },
    #[error("no correction within the change space makes `{0}` schedulable")]
    NoCorrectionFound(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub solver: SolverConfig,
    pub weights: ObjectiveWeights,
    pub max_atoms: usize,
    /// Consider every unscheduled order as a dominance alternative, not only
    /// those competing for the same pass resources.
    pub widen_dominance: bool,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            solver: SolverConfig::default(),
            weights: ObjectiveWeights::default(),
            max_atoms: 2,
            widen_dominance: false,
        }
    }
}

impl ExplainConfig {
    pub fn with_seed(seed: u64) -> Self {
        ExplainConfig {
            solver: SolverConfig::with_seed(seed),
            ..ExplainConfig::default()
        }
    }
}

/// A filtered instance together with its model and optimal schedule S*.
#[derive(Debug, Clone)]
pub struct ExplainContext {
    pub fi: FilteredInstance,
    pub model: ScheduleModel,
    pub solution: SolveResult,
    pub schedule: Schedule,
    pub cfg: ExplainConfig,
}

impl ExplainContext {
    pub fn new(fi: FilteredInstance, cfg: ExplainConfig) -> Result<Self, ExplainError> {
        let model = build_model(&fi, &cfg.weights);
        Self::with_model(fi, model, cfg)
    }

    /// Solves a model built from `fi`, possibly with extra forcing rows.
    pub fn with_model(fi: FilteredInstance, model: ScheduleModel, cfg: ExplainConfig) -> Result<Self, ExplainError> {
        let solution = solve(&model, &cfg.solver)?;
        let assignment = solution
            .assignment
            .clone()
            .unwrap_or_else(|| Assignment::zeros(model.vars.len()));
        let schedule = Schedule::from_assignment(&model, &assignment);
        Ok(ExplainContext {
            fi,
            model,
            solution,
            schedule,
            cfg,
        })
    }

    pub fn objective(&self) -> i64 {
        self.solution.objective_milli.unwrap_or(0)
    }

    pub fn assignment(&self) -> Assignment {
        self.solution
            .assignment
            .clone()
            .unwrap_or_else(|| Assignment::zeros(self.model.vars.len()))
    }

    fn require_order(&self, order_id: &str) -> Result<(), ExplainError> {
        match self.fi.scenario.order(order_id) {
            Some(_) => Ok(()),
            None => Err(ExplainError::UnknownOrder(order_id.to_string())),
        }
    }

    pub fn order_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.fi.scenario.orders.iter().map(|o| o.id.clone()).collect();
        ids.sort();
        ids
    }

    pub fn status_of(&self, order_id: &str) -> Result<OrderStatus, ExplainError> {
        self.require_order(order_id)?;
        if self.schedule.is_scheduled(order_id) {
            return Ok(OrderStatus::Scheduled);
        }
        if self.fi.is_prefiltered(order_id) {
            return Ok(OrderStatus::Prefiltered);
        }
        let forced = force_order(&self.model, order_id, true)?;
        Ok(if check_feasibility(&forced, &self.cfg.solver)?.is_feasible() {
            OrderStatus::Tradeoff
        } else {
            OrderStatus::Infeasible
        })
    }

    pub fn classify(&self) -> Result<BTreeMap<String, OrderStatus>, ExplainError> {
        self.order_ids()
            .into_iter()
            .map(|o| {
                let s = self.status_of(&o)?;
                Ok((o, s))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderStatus {
    Scheduled,
    Tradeoff,
    Infeasible,
    Prefiltered,
}

impl OrderStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderStatus::Scheduled => "scheduled",
            OrderStatus::Tradeoff => "tradeoff",
            OrderStatus::Infeasible => "infeasible",
            OrderStatus::Prefiltered => "prefiltered",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    pub order_id: String,
    /// Sorted constraint ids, including the forcing constraint.
    pub mis: Vec<String>,
    /// Non-structural constraint kinds cited.
    pub kinds: Vec<String>,
    pub groups: Vec<ConstraintGroup>,
    pub checks_log: Vec<MisCheck>,
    pub n_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContrastiveCertificate {
    pub order_id: String,
    pub displaced: Vec<String>,
    /// S* minus S_a* before minimality refinement.
    pub displaced_raw: Vec<String>,
    pub objective_delta_milli: i64,
    pub forced_objective_milli: i64,
    pub forced_schedule: Schedule,
    pub forced_assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum WhyNot {
    Prefiltered {
        order_id: String,
        reasons: Vec<PrefilterReason>,
    },
    Infeasibility(InfeasibilityCertificate),
    Tradeoff(ContrastiveCertificate),
}

impl WhyNot {
    pub fn order_id(&self) -> &str {
        match self {
            WhyNot::Prefiltered { order_id, .. } => order_id,
            WhyNot::Infeasibility(c) => &c.order_id,
            WhyNot::Tradeoff(c) => &c.order_id,
        }
    }

    pub fn status(&self) -> OrderStatus {
        match self {
            WhyNot::Prefiltered { .. } => OrderStatus::Prefiltered,
            WhyNot::Infeasibility(_) => OrderStatus::Infeasible,
            WhyNot::Tradeoff(_) => OrderStatus::Tradeoff,
        }
    }

    /// Content compared across seeds: the case plus cited kinds, or the
    /// displaced set for trade-offs, or the filter kinds.
    pub fn signature(&self) -> String {
        match self {
            WhyNot::Prefiltered { order_id, reasons } => {
                let kinds: BTreeSet<&str> = reasons.iter().map(|r| r.kind.as_str()).collect();
                format!("{order_id}|prefiltered|{}", kinds.into_iter().collect::<Vec<_>>().join(","))
            }
            WhyNot::Infeasibility(c) => format!("{}|infeasible|{}|{}", c.order_id, c.kinds.join(","), c.mis.join(",")),
            WhyNot::Tradeoff(c) => format!(
                "{}|tradeoff|{}|{}",
                c.order_id,
                c.displaced.join(","),
                c.objective_delta_milli
            ),
        }
    }
}

pub fn explain_why_not(ctx: &ExplainContext, order_id: &str) -> Result<WhyNot, ExplainError> {
    ctx.require_order(order_id)?;
    if ctx.schedule.is_scheduled(order_id) {
        return Err(ExplainError::AlreadyScheduled(order_id.to_string()));
    }
    if ctx.fi.is_prefiltered(order_id) {
        return Ok(WhyNot::Prefiltered {
            order_id: order_id.to_string(),
            reasons: ctx.fi.reasons(order_id).to_vec(),
        });
    }
    let forced = force_order(&ctx.model, order_id, true)?;
    if !check_feasibility(&forced, &ctx.cfg.solver)?.is_feasible() {
        let result = extract_mis(&forced, &ctx.cfg.solver)?;
        let (kinds, groups) = project_tags(&forced, &result.mis);
        return Ok(WhyNot::Infeasibility(InfeasibilityCertificate {
            order_id: order_id.to_string(),
            mis: result.mis,
            kinds,
            groups,
            checks_log: result.checks_log,
            n_candidates: result.n_candidates,
        }));
    }

    let forced_solution = solve(&forced, &ctx.cfg.solver)?;
    let forced_assignment = forced_solution
        .assignment
        .expect("feasible forced model has an optimum");
    let forced_schedule = Schedule::from_assignment(&forced, &forced_assignment);
    let displaced_raw: Vec<String> = ctx
        .schedule
        .assignments
        .keys()
        .filter(|o| !forced_schedule.is_scheduled(o))
        .cloned()
        .collect();
    let displaced = refine_displacements(ctx, order_id, &displaced_raw)?;
    Ok(WhyNot::Tradeoff(ContrastiveCertificate {
        order_id: order_id.to_string(),
        displaced,
        displaced_raw,
        objective_delta_milli: ctx.objective() - forced_schedule.objective_milli,
        forced_objective_milli: forced_schedule.objective_milli,
        forced_schedule,
        forced_assignment,
    }))
}

/// Drops every displaced order that can be co-scheduled with `order_id`.
pub fn refine_displacements(
    ctx: &ExplainContext,
    order_id: &str,
    displaced: &[String],
) -> Result<Vec<String>, ExplainError> {
    let forced = force_order(&ctx.model, order_id, true)?;
    let mut kept = Vec::new();
    for b in displaced {
        let both = force_order(&forced, b, true)?;
        if !check_feasibility(&both, &ctx.cfg.solver)?.is_feasible() {
            kept.push(b.clone());
        }
    }
    Ok(kept)
}

/// Stable JSON envelope shared by every explanation method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateEnvelope {
    pub order: String,
    pub case: String,
    pub method: String,
    pub mis: Vec<String>,
    pub kinds: Vec<String>,
    pub groups: Vec<ConstraintGroup>,
    pub displaced: Vec<String>,
    pub delta_milli: Option<i64>,
    pub corrections: Vec<CorrectionAtom>,
    pub validated: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

impl CertificateEnvelope {
    fn empty(order: &str, case: &str) -> Self {
        CertificateEnvelope {
            order: order.to_string(),
            case: case.to_string(),
            method: "certificate".into(),
            mis: vec![],
            kinds: vec![],
            groups: vec![],
            displaced: vec![],
            delta_milli: None,
            corrections: vec![],
            validated: None,
            detail: None,
        }
    }
}

impl From<&WhyNot> for CertificateEnvelope {
    fn from(w: &WhyNot) -> Self {
        match w {
            WhyNot::Prefiltered { order_id, reasons } => {
                let mut e = CertificateEnvelope::empty(order_id, "prefiltered");
                let kinds: BTreeSet<String> = reasons.iter().map(|r| r.kind.as_str().to_string()).collect();
                e.kinds = kinds.into_iter().collect();
                e.detail = Some(serde_json::json!({ "reasons": reasons }));
                e
            }
            WhyNot::Infeasibility(c) => {
                let mut e = CertificateEnvelope::empty(&c.order_id, "infeasible");
                e.mis = c.mis.clone();
                e.kinds = c.kinds.clone();
                e.groups = c.groups.clone();
                e.detail = Some(serde_json::json!({
                    "checks": c.checks_log.len(),
                    "candidates": c.n_candidates,
                }));
                e
            }
            WhyNot::Tradeoff(c) => {
                let mut e = CertificateEnvelope::empty(&c.order_id, "tradeoff");
                e.displaced = c.displaced.clone();
                e.delta_milli = Some(c.objective_delta_milli);
                e.detail = Some(serde_json::json!({
                    "displaced_raw": c.displaced_raw,
                    "forced_objective_milli": c.forced_objective_milli,
                    "forced_schedule": c.forced_schedule,
                }));
                e
            }
        }
    }
}

impl From<&WhyCertificate> for CertificateEnvelope {
    fn from(w: &WhyCertificate) -> Self {
        let mut e = CertificateEnvelope::empty(&w.order_id, "scheduled");
        let kinds: BTreeSet<String> = w.tight.iter().map(|t| t.kind.clone()).collect();
        e.kinds = kinds.into_iter().collect();
        e.detail = Some(serde_json::json!({
            "pass": w.pass_id,
            "tight": w.tight,
            "dominance": w.dominance,
        }));
        e
    }
}

impl From<&CorrectionCertificate> for CertificateEnvelope {
    fn from(c: &CorrectionCertificate) -> Self {
        let mut e = CertificateEnvelope::empty(&c.order_id, "correction");
        e.corrections = c.chosen.clone();
        e.validated = Some(c.validated);
        e.detail = Some(serde_json::json!({
            "total_cost_milli": c.total_cost_milli,
            "ties": c.ties,
            "goal": c.goal,
            "attempts": c.attempts,
            "validated_schedule": c.validated_schedule,
        }));
        e
    }
}
