use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ExplainContext, ExplainError};
use crate::model::{force_order, render_constraint, Sense, VarRef};
use crate::solver::solve;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TightConstraint {
    pub id: String,
    pub kind: String,
    pub activity: i64,
    pub rhs: i64,
    pub sense: Sense,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DominanceOutcome {
    ValueLoss { delta_milli: i64 },
    NotViable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominanceRecord {
    pub alternative: String,
    #[serde(flatten)]
    pub outcome: DominanceOutcome,
    /// Objective of the substitute schedule, when one exists.
    pub objective_milli: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhyCertificate {
    pub order_id: String,
    pub pass_id: String,
    pub tight: Vec<TightConstraint>,
    pub dominance: Vec<DominanceRecord>,
}

/// Index of the storage window a pass falls in: the number of model
/// downlinks on its satellite that start before it.
fn storage_window(ctx: &ExplainContext, pass_id: &str) -> Option<(String, usize)> {
    let sc = &ctx.fi.scenario;
    let p = sc.pass(pass_id)?;
    let n = ctx
        .fi
        .admissible_downlinks
        .iter()
        .filter_map(|q| sc.pass(q))
        .filter(|q| q.satellite_id == p.satellite_id && q.start_s < p.start_s)
        .count();
    Some((p.satellite_id.clone(), n))
}

fn competes(ctx: &ExplainContext, pass: &str, other: &str) -> bool {
    if pass == other {
        return true;
    }
    let (a, b) = if pass <= other { (pass, other) } else { (other, pass) };
    if ctx.model.constraint(&format!("temporal/{a}/{b}")).is_some() {
        return true;
    }
    storage_window(ctx, pass).is_some() && storage_window(ctx, pass) == storage_window(ctx, other)
}

pub fn explain_why(ctx: &ExplainContext, order_id: &str) -> Result<WhyCertificate, ExplainError> {
    ctx.require_order(order_id)?;
    let Some(pass_id) = ctx.schedule.pass_of(order_id).map(str::to_string) else {
        return Err(ExplainError::NotScheduled(order_id.to_string()));
    };
    let m = &ctx.model;
    let values = ctx.assignment().0;
    let own: BTreeSet<usize> = [
        m.var(&VarRef::X { order: order_id.into(), pass: pass_id.clone() }),
        m.var(&VarRef::Y { pass: pass_id.clone() }),
        m.order_var(order_id),
    ]
    .into_iter()
    .flatten()
    .collect();

    let tight = m
        .constraints
        .iter()
        .filter(|c| c.terms.iter().any(|t| own.contains(&t.var)))
        .filter_map(|c| {
            let activity = c.activity(&values);
            (activity == c.rhs).then(|| TightConstraint {
                id: c.id.clone(),
                kind: c.kind.as_str().into(),
                activity,
                rhs: c.rhs,
                sense: c.sense,
                text: render_constraint(c),
            })
        })
        .collect();

    let mut alternatives: Vec<String> = Vec::new();
    for b in ctx.order_ids() {
        if b == order_id || ctx.schedule.is_scheduled(&b) || ctx.fi.is_prefiltered(&b) {
            continue;
        }
        let local = ctx.fi.admissible_passes_of(&b).any(|q| competes(ctx, &pass_id, q));
        if local || ctx.cfg.widen_dominance {
            alternatives.push(b);
        }
    }

    let without = force_order(m, order_id, false)?;
    let mut dominance = Vec::new();
    for b in alternatives {
        let substitute = force_order(&without, &b, true)?;
        let r = solve(&substitute, &ctx.cfg.solver)?;
        let record = match r.objective_milli {
            Some(v) => DominanceRecord {
                alternative: b,
                outcome: DominanceOutcome::ValueLoss {
                    delta_milli: ctx.objective() - v,
                },
                objective_milli: Some(v),
            },
            None => DominanceRecord {
                alternative: b,
                outcome: DominanceOutcome::NotViable,
                objective_milli: None,
            },
        };
        dominance.push(record);
    }
    Ok(WhyCertificate {
        order_id: order_id.to_string(),
        pass_id,
        tight,
        dominance,
    })
}

