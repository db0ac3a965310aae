//! Independent checks of certificate faithfulness and the evaluation report.
//!
//! Soundness and counterfactual checks rebuild their own sub-models and call
//! only the solver; they never reuse state from the explanation pipeline.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{BaselineError, BaselineExplanation};
use crate::explain::{
    corrected_instance, explain_why_not, CorrectionAtom, CorrectionChange, ExplainConfig, ExplainContext,
    ExplainError, InfeasibilityCertificate, WhyNot,
};
use crate::model::{force_order, ConstraintKind, ScheduleModel};
use crate::scenario::FilteredInstance;
use crate::solver::{check_feasibility, evaluate, solve, Feasibility, Schedule, SolverConfig, SolverError};

pub use report::{evaluate_solved, run_full_evaluation, BaselineComparison, CoreSizeStats, EvalConfig, EvaluationReport, Ratio, Timings};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("certificate does not match model: {0}")]
    Mismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("stability needs at least two seeds")]
    TooFewSeeds,
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// Constraints kept in every verification sub-model: rows that only link
/// variable families.
fn is_link_row(kind: ConstraintKind) -> bool {
    kind.is_structural() && !kind.is_forcing()
}

fn sub_model(m: &ScheduleModel, cited: &[&str]) -> ScheduleModel {
    let keep: BTreeSet<&str> = m
        .constraints
        .iter()
        .filter(|c| is_link_row(c.kind))
        .map(|c| c.id.as_str())
        .chain(cited.iter().copied())
        .collect();
    m.restricted_to(&keep)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub id: String,
    pub tag_valid: bool,
    pub set_sufficient: bool,
    pub individually_necessary: bool,
}

impl ConstraintCheck {
    pub fn passed(&self) -> bool {
        self.tag_valid && self.set_sufficient && self.individually_necessary
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub order_id: String,
    pub checks: Vec<ConstraintCheck>,
    pub passed: usize,
    pub total: usize,
}

impl SoundnessReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }
}

/// Tag validity, collective sufficiency and individual necessity of every
/// cited constraint, each re-derived on fresh sub-models of `m_a`.
pub fn check_soundness(
    cert: &InfeasibilityCertificate,
    m_a: &ScheduleModel,
    cfg: &SolverConfig,
) -> Result<SoundnessReport, VerifyError> {
    let forced = format!("forced/{}", cert.order_id);
    if m_a.constraint(&forced).is_none() {
        return Err(VerifyError::Mismatch(format!("model has no `{forced}`")));
    }
    let cited: Vec<&str> = cert.mis.iter().map(String::as_str).collect();
    let kinds: BTreeSet<&str> = cert.kinds.iter().map(String::as_str).collect();
    let set_sufficient = !check_feasibility(&sub_model(m_a, &cited), cfg)?.is_feasible();

    let mut checks = Vec::with_capacity(cited.len());
    for id in &cited {
        let c = m_a.constraint(id);
        let tag_valid = c.is_some_and(|c| {
            c.tag == c.kind.tag() && (c.kind.is_forcing() || kinds.contains(c.kind.as_str())) && !is_link_row(c.kind)
        });
        let rest: Vec<&str> = cited.iter().copied().filter(|x| x != id).collect();
        let individually_necessary = match (c, check_feasibility(&sub_model(m_a, &rest), cfg)?) {
            (Some(c), Feasibility::Feasible(w)) => evaluate(m_a, &w)?.violated.contains(&c.id),
            _ => false,
        };
        checks.push(ConstraintCheck {
            id: id.to_string(),
            tag_valid,
            set_sufficient,
            individually_necessary,
        });
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    Ok(SoundnessReport {
        order_id: cert.order_id.clone(),
        total: checks.len(),
        passed,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterfactualResult {
    pub order_id: String,
    pub passed: bool,
    pub correction: Vec<CorrectionAtom>,
    pub schedule: Option<Schedule>,
}

/// Downlink starting one slew margin after `pass_id`, long enough to move `mb`.
fn downlink_after(fi: &FilteredInstance, pass_id: &str, mb: i64) -> Option<CorrectionChange> {
    let sc = &fi.scenario;
    let p = sc.pass(pass_id)?;
    let sat = sc.satellite(&p.satellite_id)?;
    let duration = (mb * 8000 + sat.downlink_rate_kbps - 1) / sat.downlink_rate_kbps + 1;
    let mut start = p.end_s + sat.min_slew_s.max(1);
    if start + duration > sc.horizon_s {
        start = (sc.horizon_s - duration).max(p.end_s + 1);
    }
    let mut stations: Vec<_> = sc.stations.iter().collect();
    stations.sort_by(|a, b| a.id.cmp(&b.id));
    let station = stations
        .iter()
        .find(|g| !g.unavailable_windows.iter().any(|w| w.overlaps(start, start + duration)))
        .or(stations.first())?;
    Some(CorrectionChange::AddDownlinkPass {
        satellite_id: sat.id.clone(),
        station_id: station.id.clone(),
        start_s: start,
        end_s: (start + duration).min(sc.horizon_s),
    })
}

/// Correction atoms derived from the cited constraint kinds by a fixed table.
pub fn derive_correction(
    fi: &FilteredInstance,
    m_a: &ScheduleModel,
    schedule: &Schedule,
    cert: &InfeasibilityCertificate,
) -> Result<Vec<CorrectionAtom>, VerifyError> {
    let sc = &fi.scenario;
    let order = sc
        .order(&cert.order_id)
        .ok_or_else(|| VerifyError::Mismatch(format!("unknown order `{}`", cert.order_id)))?;
    let mut storage: BTreeMap<String, i64> = BTreeMap::new();
    let mut changes: Vec<CorrectionChange> = Vec::new();
    let latest_candidate = || {
        fi.admissible_passes_of(&cert.order_id)
            .filter_map(|p| sc.pass(p))
            .max_by_key(|p| (p.end_s, p.id.clone()))
            .map(|p| p.id.clone())
    };
    for id in &cert.mis {
        let c = m_a
            .constraint(id)
            .ok_or_else(|| VerifyError::Mismatch(format!("unknown constraint `{id}`")))?;
        match c.kind {
            ConstraintKind::StorageUpperBound => {
                let deficit = (order.data_mb - c.rhs).max(1);
                let e = storage.entry(c.ctx("satellite").to_string()).or_default();
                *e = (*e).max(deficit);
            }
            ConstraintKind::NoDownlink | ConstraintKind::DownlinkRequired => {
                changes.extend(downlink_after(fi, c.ctx("pass"), order.data_mb));
            }
            ConstraintKind::StorageLowerBound => {
                if let Some(p) = latest_candidate() {
                    changes.extend(downlink_after(fi, &p, order.data_mb));
                }
            }
            ConstraintKind::TemporalExclusion => {
                for pass in [c.ctx("pass_a"), c.ctx("pass_b")] {
                    for (o, p) in &schedule.assignments {
                        if p == pass && *o != cert.order_id {
                            changes.push(CorrectionChange::ExcludeOrder { order_id: o.clone() });
                        }
                    }
                }
            }
            ConstraintKind::ForcedInclusion | ConstraintKind::ForcedExclusion => {}
            other => return Err(VerifyError::Mismatch(format!("no correction for kind `{other}`"))),
        }
    }
    for (satellite_id, mb) in storage {
        changes.push(CorrectionChange::AddStorageCapacity { satellite_id, mb });
    }
    let mut atoms: Vec<CorrectionAtom> = Vec::new();
    for change in changes {
        let atom = CorrectionAtom::new(change, 1);
        if !atoms.contains(&atom) {
            atoms.push(atom);
        }
    }
    Ok(atoms)
}

/// Change space offered when a what-if query names none: the derived
/// correction for an infeasible order, otherwise a priority bump plus the
/// exclusion of each displaced order.
pub fn suggested_change_space(ctx: &ExplainContext, order_id: &str) -> Result<Vec<CorrectionAtom>, VerifyError> {
    Ok(match explain_why_not(ctx, order_id)? {
        WhyNot::Infeasibility(cert) => {
            let m_a = force_order(&ctx.model, order_id, true).map_err(ExplainError::from)?;
            derive_correction(&ctx.fi, &m_a, &ctx.schedule, &cert)?
        }
        WhyNot::Tradeoff(c) => {
            let mut atoms = vec![CorrectionAtom::new(
                CorrectionChange::RaisePriority {
                    order_id: order_id.to_string(),
                    delta: 1,
                },
                1,
            )];
            atoms.extend(c.displaced.iter().map(|o| {
                CorrectionAtom::new(CorrectionChange::ExcludeOrder { order_id: o.clone() }, 2)
            }));
            atoms
        }
        WhyNot::Prefiltered { .. } => Vec::new(),
    })
}

/// Applies the derived correction to a cloned instance and re-solves the
/// complete model with the order forced.
pub fn check_counterfactual(
    ctx: &ExplainContext,
    cert: &InfeasibilityCertificate,
) -> Result<CounterfactualResult, VerifyError> {
    let m_a = force_order(&ctx.model, &cert.order_id, true).map_err(ExplainError::from)?;
    if check_feasibility(&m_a, &ctx.cfg.solver)?.is_feasible() {
        return Err(VerifyError::Precondition(format!("order `{}` is already feasible", cert.order_id)));
    }
    let correction = derive_correction(&ctx.fi, &m_a, &ctx.schedule, cert)?;
    let corrected = corrected_instance(&ctx.fi, &correction)?;
    if corrected.fi.is_prefiltered(&cert.order_id) {
        return Ok(CounterfactualResult {
            order_id: cert.order_id.clone(),
            passed: false,
            correction,
            schedule: None,
        });
    }
    let m = force_order(&corrected.model(&ctx.cfg.weights)?, &cert.order_id, true).map_err(ExplainError::from)?;
    let r = solve(&m, &ctx.cfg.solver)?;
    let schedule = r.assignment.map(|a| Schedule::from_assignment(&m, &a));
    Ok(CounterfactualResult {
        order_id: cert.order_id.clone(),
        passed: schedule.as_ref().is_some_and(|s| s.is_scheduled(&cert.order_id)),
        correction,
        schedule,
    })
}

/// Why-not answers for every unscheduled order, in canonical order.
pub fn collect_why_not(ctx: &ExplainContext, parallel: bool) -> Result<Vec<(WhyNot, f64)>, ExplainError> {
    let orders: Vec<String> = ctx
        .order_ids()
        .into_iter()
        .filter(|o| !ctx.schedule.is_scheduled(o))
        .collect();
    let run = |o: &String| {
        let t = Instant::now();
        explain_why_not(ctx, o).map(|w| (w, t.elapsed().as_secs_f64() * 1000.0))
    };
    if parallel {
        orders.par_iter().map(run).collect()
    } else {
        orders.iter().map(run).collect()
    }
}

/// Serialized explanation set: one entry per order.
pub fn explanation_set(ctx: &ExplainContext) -> Result<BTreeSet<String>, ExplainError> {
    let mut set: BTreeSet<String> = ctx
        .schedule
        .assignments
        .iter()
        .map(|(o, p)| format!("{o}|scheduled|{p}"))
        .collect();
    for (w, _) in collect_why_not(ctx, false)? {
        set.insert(w.signature());
    }
    Ok(set)
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub seeds: Vec<u64>,
    /// (seed a, seed b, Jaccard)
    pub pairs: Vec<(u64, u64, f64)>,
    pub min: f64,
    pub mean: f64,
}

pub fn check_stability(fi: &FilteredInstance, seeds: &[u64], cfg: &ExplainConfig) -> Result<StabilityReport, VerifyError> {
    check_stability_with(fi, seeds, |fi, seed| {
        let mut cfg = cfg.clone();
        cfg.solver.seed = seed;
        let ctx = ExplainContext::new(fi.clone(), cfg)?;
        Ok(explanation_set(&ctx)?)
    })
}

/// Stability of an arbitrary explainer, given as a function from seed to
/// explanation set.
pub fn check_stability_with<F>(fi: &FilteredInstance, seeds: &[u64], explainer: F) -> Result<StabilityReport, VerifyError>
where
    F: Fn(&FilteredInstance, u64) -> Result<BTreeSet<String>, VerifyError> + Sync,
{
    if seeds.len() < 2 {
        return Err(VerifyError::TooFewSeeds);
    }
    let sets: Vec<BTreeSet<String>> = seeds
        .par_iter()
        .map(|&s| explainer(fi, s))
        .collect::<Result<_, _>>()?;
    let mut pairs = Vec::new();
    for i in 0..seeds.len() {
        for j in i + 1..seeds.len() {
            pairs.push((seeds[i], seeds[j], jaccard(&sets[i], &sets[j])));
        }
    }
    let min = pairs.iter().map(|p| p.2).fold(1.0, f64::min);
    let mean = pairs.iter().map(|p| p.2).sum::<f64>() / pairs.len() as f64;
    Ok(StabilityReport {
        seeds: seeds.to_vec(),
        pairs,
        min,
        mean,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderComparison {
    pub order_id: String,
    pub certificate_kinds: Vec<String>,
    pub baseline_kinds: Vec<String>,
    pub noncausal: Vec<String>,
    pub conjunction: bool,
    pub incomplete: bool,
}

/// Failure-mode accounting of baseline explanations against certificates.
pub fn compare_baseline(
    certs: &[InfeasibilityCertificate],
    baseline: &[BaselineExplanation],
) -> Result<BaselineComparison, VerifyError> {
    let by_order: BTreeMap<&str, &BaselineExplanation> = baseline.iter().map(|b| (b.order_id.as_str(), b)).collect();
    let cert_orders: BTreeSet<&str> = certs.iter().map(|c| c.order_id.as_str()).collect();
    if cert_orders != by_order.keys().copied().collect::<BTreeSet<_>>() {
        return Err(VerifyError::Mismatch("certificate and baseline order sets differ".into()));
    }
    let mut rows = Vec::new();
    for cert in certs {
        let b = by_order[cert.order_id.as_str()];
        let g: BTreeSet<&str> = cert.kinds.iter().map(String::as_str).collect();
        let kinds = b.kinds();
        let noncausal: Vec<String> = kinds
            .iter()
            .filter(|k| !k.constraint_kinds().iter().any(|c| g.contains(c)))
            .map(|k| k.as_str().to_string())
            .collect();
        let covered: BTreeSet<&str> = kinds.iter().flat_map(|k| k.constraint_kinds().iter().copied()).collect();
        let conjunction = g.len() > 1;
        rows.push(OrderComparison {
            order_id: cert.order_id.clone(),
            certificate_kinds: cert.kinds.clone(),
            baseline_kinds: kinds.iter().map(|k| k.as_str().to_string()).collect(),
            incomplete: conjunction && !g.is_subset(&covered),
            noncausal,
            conjunction,
        });
    }
    Ok(BaselineComparison {
        n_orders: rows.len(),
        orders_with_noncausal: rows.iter().filter(|r| !r.noncausal.is_empty()).count(),
        noncausal_attributions: rows.iter().map(|r| r.noncausal.len()).sum(),
        total_attributions: rows.iter().map(|r| r.baseline_kinds.len()).sum(),
        conjunction_orders: rows.iter().filter(|r| r.conjunction).count(),
        baseline_incomplete_on_conjunctions: rows.iter().filter(|r| r.incomplete).count(),
        orders: rows,
    })
}
