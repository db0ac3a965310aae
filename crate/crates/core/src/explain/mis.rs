use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ExplainError;
use crate::model::{render_constraint, ConstraintKind, ScheduleModel, TaggedConstraint};
use crate::solver::{check_feasibility_masked, SolverConfig};

/// One step of the deletion loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisCheck {
    pub constraint_id: String,
    /// Whether the model became feasible once this constraint was removed.
    pub feasible_without: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisResult {
    pub mis: Vec<String>,
    pub checks_log: Vec<MisCheck>,
    pub n_candidates: usize,
}

/// Whether a constraint stays in every sub-model instead of being a deletion
/// candidate. Link rows only tie variable families together, so they are
/// kept as background for both extraction and verification.
pub fn is_background(kind: ConstraintKind) -> bool {
    kind.is_structural() && !kind.is_forcing()
}

/// Deletion filter over the non-structural constraints of an infeasible
/// model, in canonical id order. Forcing constraints are never deleted and
/// always reported.
pub fn extract_mis(m_a: &ScheduleModel, cfg: &SolverConfig) -> Result<MisResult, ExplainError> {
    let mut enabled = vec![true; m_a.constraints.len()];
    if check_feasibility_masked(m_a, Some(&enabled), cfg)?.is_feasible() {
        return Err(ExplainError::ModelFeasible);
    }
    let candidates: Vec<usize> = m_a
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.kind.is_structural())
        .map(|(i, _)| i)
        .collect();
    let mut checks_log = Vec::with_capacity(candidates.len());
    for &i in &candidates {
        enabled[i] = false;
        let feasible = check_feasibility_masked(m_a, Some(&enabled), cfg)?.is_feasible();
        if feasible {
            enabled[i] = true;
        }
        checks_log.push(MisCheck {
            constraint_id: m_a.constraints[i].id.clone(),
            feasible_without: feasible,
        });
    }
    let mis = m_a
        .constraints
        .iter()
        .zip(&enabled)
        .filter(|(c, on)| **on && !is_background(c.kind))
        .map(|(c, _)| c.id.clone())
        .collect();
    Ok(MisResult {
        mis,
        checks_log,
        n_candidates: candidates.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintGroup {
    pub kind: String,
    pub constraint_ids: Vec<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satellite: Option<String>,
    /// Checkpoint times covered by a merged storage group, in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_range_s: Option<(i64, i64)>,
}

/// Satellite, checkpoint index and time of a storage row.
type Checkpoint = (String, usize, i64);

fn checkpoint(c: &TaggedConstraint) -> Checkpoint {
    (
        c.ctx("satellite").to_string(),
        c.ctx("checkpoint").parse().unwrap_or(0),
        c.ctx("time_s").parse().unwrap_or(0),
    )
}

/// Groups cited constraints by kind for presentation and returns the set of
/// non-structural kinds. Consecutive storage checkpoints on one satellite
/// collapse into a single trajectory group.
pub fn project_tags(m: &ScheduleModel, mis: &[String]) -> (Vec<String>, Vec<ConstraintGroup>) {
    let cited: Vec<_> = mis.iter().filter_map(|id| m.constraint(id)).collect();
    let kinds: BTreeSet<ConstraintKind> = cited
        .iter()
        .map(|c| c.kind)
        .filter(|k| !k.is_structural())
        .collect();

    let mut groups = Vec::new();
    for kind in &kinds {
        let members: Vec<&TaggedConstraint> = cited.iter().copied().filter(|c| c.kind == *kind).collect();
        let storage = matches!(kind, ConstraintKind::StorageUpperBound | ConstraintKind::StorageLowerBound);
        if !storage {
            groups.push(ConstraintGroup {
                kind: kind.as_str().into(),
                constraint_ids: members.iter().map(|c| c.id.clone()).collect(),
                text: members.iter().map(|c| render_constraint(c)).collect::<Vec<_>>().join("; "),
                satellite: None,
                time_range_s: None,
            });
            continue;
        }
        let mut sorted: Vec<_> = members.iter().map(|c| (checkpoint(c), *c)).collect();
        sorted.sort_by(|a, b| (&a.0 .0, a.0 .1).cmp(&(&b.0 .0, b.0 .1)));
        let mut runs: Vec<Vec<(Checkpoint, &TaggedConstraint)>> = Vec::new();
        for item in sorted {
            let extends = runs.last().and_then(|r| r.last()).is_some_and(|(prev, _)| {
                prev.0 == item.0 .0 && prev.1 + 1 == item.0 .1
            });
            if extends {
                runs.last_mut().expect("run exists").push(item);
            } else {
                runs.push(vec![item]);
            }
        }
        for run in runs {
            let (sat, first_k, first_t) = run[0].0.clone();
            let (_, last_k, last_t) = run[run.len() - 1].0.clone();
            let text = if run.len() == 1 {
                render_constraint(run[0].1)
            } else {
                format!(
                    "storage trajectory conflict on {sat} (checkpoints {first_k} to {last_k}, t = {first_t} s to {last_t} s)"
                )
            };
            groups.push(ConstraintGroup {
                kind: kind.as_str().into(),
                constraint_ids: run.iter().map(|(_, c)| c.id.clone()).collect(),
                text,
                satellite: Some(sat),
                time_range_s: Some((first_t, last_t)),
            });
        }
    }
    (kinds.iter().map(|k| k.as_str().to_string()).collect(), groups)
}
