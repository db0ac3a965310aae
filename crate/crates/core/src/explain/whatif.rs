use serde::{Deserialize, Serialize};

use super::{ExplainContext, ExplainError};
use crate::model::{build_model, exclude_order, force_order, ObjectiveWeights, ScheduleModel};
use crate::scenario::{apply_filters_with, FilterParams, FilteredInstance, PassWindow, ScenarioSpec};
use crate::solver::{check_feasibility, solve, Schedule, SolverConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrectionChange {
    /// Raise the cloud threshold for one pass, or globally when `pass_id` is absent.
    RelaxCloud {
        #[serde(default)]
        pass_id: Option<String>,
        new_threshold_milli: i64,
    },
    AddDownlinkPass {
        satellite_id: String,
        station_id: String,
        start_s: i64,
        end_s: i64,
    },
    AddStorageCapacity {
        satellite_id: String,
        mb: i64,
    },
    RaisePriority {
        order_id: String,
        delta: i64,
    },
    ExtendDeadline {
        order_id: String,
        delta_s: i64,
    },
    /// Drop another order from the plan.
    ExcludeOrder {
        order_id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionAtom {
    #[serde(flatten)]
    pub change: CorrectionChange,
    pub cost_milli: i64,
}

impl CorrectionAtom {
    pub fn new(change: CorrectionChange, cost_milli: i64) -> Self {
        CorrectionAtom { change, cost_milli }
    }
}

/// Scenario and filter settings after corrections, plus orders excluded by them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectedInstance {
    pub fi: FilteredInstance,
    pub exclusions: Vec<String>,
}

impl CorrectedInstance {
    pub fn model(&self, weights: &ObjectiveWeights) -> Result<ScheduleModel, ExplainError> {
        let mut m = build_model(&self.fi, weights);
        for o in &self.exclusions {
            m = exclude_order(&m, o)?;
        }
        Ok(m)
    }
}

fn invalid(index: usize, message: impl Into<String>) -> ExplainError {
    ExplainError::InvalidAtom {
        index,
        message: message.into(),
    }
}

/// Applies atoms to copies of the scenario and filter parameters.
pub fn apply_atoms(
    scenario: &ScenarioSpec,
    params: &FilterParams,
    atoms: &[CorrectionAtom],
) -> Result<(ScenarioSpec, FilterParams, Vec<String>), ExplainError> {
    let mut sc = scenario.clone();
    let mut params = params.clone();
    let mut exclusions = Vec::new();
    for (i, atom) in atoms.iter().enumerate() {
        if atom.cost_milli <= 0 {
            return Err(invalid(i, "cost_milli must be positive"));
        }
        match &atom.change {
            CorrectionChange::RelaxCloud { pass_id, new_threshold_milli } => {
                if !(0..=1000).contains(new_threshold_milli) {
                    return Err(invalid(i, "threshold must lie in [0, 1000]"));
                }
                match pass_id {
                    None => params.cloud_threshold_milli = *new_threshold_milli,
                    Some(p) => {
                        if !sc.pass(p).is_some_and(|p| p.is_imaging()) {
                            return Err(invalid(i, format!("unknown imaging pass `{p}`")));
                        }
                        params.pass_thresholds.insert(p.clone(), *new_threshold_milli);
                    }
                }
            }
            CorrectionChange::AddDownlinkPass { satellite_id, station_id, start_s, end_s } => {
                if sc.satellite(satellite_id).is_none() {
                    return Err(invalid(i, format!("unknown satellite `{satellite_id}`")));
                }
                if sc.station(station_id).is_none() {
                    return Err(invalid(i, format!("unknown station `{station_id}`")));
                }
                if !(0 <= *start_s && start_s < end_s && *end_s <= sc.horizon_s) {
                    return Err(invalid(i, "downlink window must satisfy 0 <= start < end <= horizon"));
                }
                let mut n = 1;
                let id = loop {
                    let id = format!("{satellite_id}-{station_id}-ADD{n}");
                    if sc.pass(&id).is_none() {
                        break id;
                    }
                    n += 1;
                };
                sc.passes
                    .push(PassWindow::downlink(id, satellite_id.as_str(), station_id.as_str(), *start_s, *end_s));
            }
            CorrectionChange::AddStorageCapacity { satellite_id, mb } => {
                if *mb <= 0 {
                    return Err(invalid(i, "added capacity must be positive"));
                }
                let Some(sat) = sc.satellite_mut(satellite_id) else {
                    return Err(invalid(i, format!("unknown satellite `{satellite_id}`")));
                };
                sat.storage_capacity_mb += mb;
            }
            CorrectionChange::RaisePriority { order_id, delta } => {
                if *delta <= 0 {
                    return Err(invalid(i, "priority delta must be positive"));
                }
                let Some(o) = sc.order_mut(order_id) else {
                    return Err(invalid(i, format!("unknown order `{order_id}`")));
                };
                o.priority += delta;
            }
            CorrectionChange::ExtendDeadline { order_id, delta_s } => {
                if *delta_s <= 0 {
                    return Err(invalid(i, "deadline extension must be positive"));
                }
                let Some(o) = sc.order_mut(order_id) else {
                    return Err(invalid(i, format!("unknown order `{order_id}`")));
                };
                let Some(d) = o.deadline_s.as_mut() else {
                    return Err(invalid(i, format!("order `{order_id}` has no deadline")));
                };
                *d += delta_s;
            }
            CorrectionChange::ExcludeOrder { order_id } => {
                if sc.order(order_id).is_none() {
                    return Err(invalid(i, format!("unknown order `{order_id}`")));
                }
                if !exclusions.contains(order_id) {
                    exclusions.push(order_id.clone());
                }
            }
        }
    }
    sc.normalize_and_validate()?;
    exclusions.sort();
    Ok((sc, params, exclusions))
}

pub fn corrected_instance(fi: &FilteredInstance, atoms: &[CorrectionAtom]) -> Result<CorrectedInstance, ExplainError> {
    let (sc, params, exclusions) = apply_atoms(&fi.scenario, &fi.params, atoms)?;
    Ok(CorrectedInstance {
        fi: apply_filters_with(&sc, &params),
        exclusions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhatIfGoal {
    /// The order cannot be scheduled at all; a correction must make it feasible.
    Feasible,
    /// The order is feasible but loses a trade-off; a correction must put it
    /// into the optimal schedule.
    Selected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionCertificate {
    pub order_id: String,
    pub goal: WhatIfGoal,
    pub chosen: Vec<CorrectionAtom>,
    pub total_cost_milli: i64,
    /// Other sets reaching the same minimal cost.
    pub ties: Vec<Vec<CorrectionAtom>>,
    pub validated: bool,
    pub validated_schedule: Option<Schedule>,
    /// Candidate sets examined.
    pub attempts: usize,
}

fn goal_met(
    fi: &FilteredInstance,
    atoms: &[CorrectionAtom],
    order_id: &str,
    goal: WhatIfGoal,
    weights: &ObjectiveWeights,
    cfg: &SolverConfig,
) -> Result<bool, ExplainError> {
    let corrected = corrected_instance(fi, atoms)?;
    if corrected.fi.is_prefiltered(order_id) || corrected.exclusions.iter().any(|o| o == order_id) {
        return Ok(false);
    }
    let m = corrected.model(weights)?;
    Ok(match goal {
        WhatIfGoal::Feasible => check_feasibility(&force_order(&m, order_id, true)?, cfg)?.is_feasible(),
        WhatIfGoal::Selected => {
            let r = solve(&m, cfg)?;
            r.assignment
                .is_some_and(|a| Schedule::from_assignment(&m, &a).is_scheduled(order_id))
        }
    })
}

/// Index subsets of size 1..=max, ordered by total cost then indices.
fn candidate_sets(space: &[CorrectionAtom], max: usize) -> Vec<(i64, Vec<usize>)> {
    fn grow(space: &[CorrectionAtom], max: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<(i64, Vec<usize>)>) {
        for i in start..space.len() {
            cur.push(i);
            out.push((cur.iter().map(|&j| space[j].cost_milli).sum(), cur.clone()));
            if cur.len() < max {
                grow(space, max, i + 1, cur, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if max > 0 {
        grow(space, max, 0, &mut Vec::new(), &mut out);
    }
    out.sort();
    out
}

pub fn explain_what_if(
    ctx: &ExplainContext,
    order_id: &str,
    space: &[CorrectionAtom],
) -> Result<CorrectionCertificate, ExplainError> {
    ctx.require_order(order_id)?;
    if ctx.schedule.is_scheduled(order_id) {
        return Err(ExplainError::AlreadyScheduled(order_id.to_string()));
    }
    // reject malformed atoms up front rather than skipping them silently
    for (i, atom) in space.iter().enumerate() {
        apply_atoms(&ctx.fi.scenario, &ctx.fi.params, std::slice::from_ref(atom)).map_err(|e| match e {
            ExplainError::InvalidAtom { message, .. } => invalid(i, message),
            other => other,
        })?;
    }
    let goal = if !ctx.fi.is_prefiltered(order_id)
        && check_feasibility(&force_order(&ctx.model, order_id, true)?, &ctx.cfg.solver)?.is_feasible()
    {
        WhatIfGoal::Selected
    } else {
        WhatIfGoal::Feasible
    };

    let mut winners: Vec<(i64, Vec<usize>)> = Vec::new();
    let mut attempts = 0;
    for (cost, set) in candidate_sets(space, ctx.cfg.max_atoms) {
        if winners.first().is_some_and(|(best, _)| cost > *best) {
            break;
        }
        let atoms: Vec<CorrectionAtom> = set.iter().map(|&i| space[i].clone()).collect();
        attempts += 1;
        if goal_met(&ctx.fi, &atoms, order_id, goal, &ctx.cfg.weights, &ctx.cfg.solver)? {
            winners.push((cost, set));
        }
    }
    let Some((total_cost_milli, chosen_idx)) = winners.first().cloned() else {
        return Err(ExplainError::NoCorrectionFound(order_id.to_string()));
    };
    let pick = |set: &[usize]| set.iter().map(|&i| space[i].clone()).collect::<Vec<_>>();
    let chosen = pick(&chosen_idx);

    let corrected = corrected_instance(&ctx.fi, &chosen)?;
    let m = corrected.model(&ctx.cfg.weights)?;
    let m = match goal {
        WhatIfGoal::Feasible => force_order(&m, order_id, true)?,
        WhatIfGoal::Selected => m,
    };
    let r = solve(&m, &ctx.cfg.solver)?;
    let validated_schedule = r.assignment.map(|a| Schedule::from_assignment(&m, &a));
    let validated = validated_schedule
        .as_ref()
        .is_some_and(|s| s.is_scheduled(order_id));

    Ok(CorrectionCertificate {
        order_id: order_id.to_string(),
        goal,
        chosen,
        total_cost_milli,
        ties: winners[1..].iter().map(|(_, s)| pick(s)).collect(),
        validated,
        validated_schedule,
        attempts,
    })
}
