//! Optimizer-agnostic post-hoc explainer used as a comparison baseline.
//!
//! It looks only at raw scenario data and the final schedule: for each
//! candidate pass of a rejected order it lists blocking reasons found by
//! inspecting the schedule state, then reports the candidate with the
//! fewest reasons. It never consults the model's constraints or the solver.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explain::CertificateEnvelope;
use crate::scenario::{FilteredInstance, PassWindow};
use crate::solver::Schedule;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("unknown order `{0}`")]
    UnknownOrder(String),
    #[error("order `{0}` is scheduled")]
    Scheduled(String),
    #[error("order `{0}` has no candidate pass")]
    NoCandidates(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    TemporalConflict,
    NoDownlink,
    StorageOverflow,
    Cloud,
    Deadline,
}

impl BaselineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::TemporalConflict => "temporal_conflict",
            BaselineKind::NoDownlink => "no_downlink",
            BaselineKind::StorageOverflow => "storage_overflow",
            BaselineKind::Cloud => "cloud",
            BaselineKind::Deadline => "deadline",
        }
    }

    /// Model constraint kinds this reason corresponds to.
    pub fn constraint_kinds(self) -> &'static [&'static str] {
        match self {
            BaselineKind::TemporalConflict => &["temporal_exclusion"],
            BaselineKind::NoDownlink => &["no_downlink", "downlink_required"],
            BaselineKind::StorageOverflow => &["storage_upper_bound", "storage_lower_bound"],
            BaselineKind::Cloud | BaselineKind::Deadline => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineReason {
    pub kind: BaselineKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineExplanation {
    pub order_id: String,
    pub chosen_pass_id: String,
    pub reasons: Vec<BaselineReason>,
    pub all_candidate_reasons: BTreeMap<String, Vec<BaselineReason>>,
}

impl BaselineExplanation {
    pub fn kinds(&self) -> BTreeSet<BaselineKind> {
        self.reasons.iter().map(|r| r.kind).collect()
    }
}

impl From<&BaselineExplanation> for CertificateEnvelope {
    fn from(b: &BaselineExplanation) -> Self {
        CertificateEnvelope {
            order: b.order_id.clone(),
            case: "posthoc".into(),
            method: "posthoc".into(),
            mis: vec![],
            kinds: b.kinds().into_iter().map(|k| k.as_str().to_string()).collect(),
            groups: vec![],
            displaced: vec![],
            delta_milli: None,
            corrections: vec![],
            validated: None,
            detail: Some(serde_json::json!({
                "pass": b.chosen_pass_id,
                "reasons": b.reasons,
            })),
        }
    }
}

fn conflicts(a: &PassWindow, b: &PassWindow, slew: i64) -> bool {
    let (first, second) = if (a.start_s, &a.id) <= (b.start_s, &b.id) { (a, b) } else { (b, a) };
    second.start_s < first.end_s + slew
}

/// Storage level on `sat` after each event, in (start, id) order, with the
/// schedule's activity plus an optional extra imaging of `extra_mb` at `extra`.
fn trajectory(fi: &FilteredInstance, s: &Schedule, sat: &str, extra: Option<(&PassWindow, i64)>) -> Vec<(String, i64)> {
    let sc = &fi.scenario;
    let mut events: Vec<(&PassWindow, i64)> = Vec::new();
    let mut imaged: BTreeMap<&str, i64> = BTreeMap::new();
    for (o, p) in &s.assignments {
        let data = sc.order(o).map(|o| o.data_mb).unwrap_or(0);
        *imaged.entry(p.as_str()).or_default() += data;
    }
    if let Some((p, mb)) = extra {
        *imaged.entry(p.id.as_str()).or_default() += mb;
    }
    for (p, mb) in imaged {
        if let Some(pass) = sc.pass(p).filter(|q| q.satellite_id == sat) {
            events.push((pass, mb));
        }
    }
    for q in &s.downlinks {
        if let Some(pass) = sc.pass(q).filter(|q| q.satellite_id == sat) {
            events.push((pass, -pass.tx()));
        }
    }
    events.sort_by(|a, b| (a.0.start_s, &a.0.id).cmp(&(b.0.start_s, &b.0.id)));
    let mut level = sc.satellite(sat).map(|s| s.initial_storage_mb).unwrap_or(0);
    events
        .into_iter()
        .map(|(p, delta)| {
            level += delta;
            (p.id.clone(), level)
        })
        .collect()
}

/// Blocking reasons for assigning `order_id` to `pass_id` on top of schedule `s`.
pub fn inspect_candidate(fi: &FilteredInstance, s: &Schedule, order_id: &str, pass_id: &str) -> Vec<BaselineReason> {
    let sc = &fi.scenario;
    let (Some(order), Some(p)) = (sc.order(order_id), sc.pass(pass_id)) else {
        return vec![];
    };
    let Some(sat) = sc.satellite(&p.satellite_id) else {
        return vec![];
    };
    let mut reasons = Vec::new();

    let used: Vec<&PassWindow> = s
        .imaging_passes
        .iter()
        .chain(&s.downlinks)
        .filter_map(|id| sc.pass(id))
        .filter(|q| q.satellite_id == p.satellite_id && q.id != p.id)
        .collect();
    let blocking: Vec<&str> = used
        .iter()
        .filter(|q| conflicts(p, q, sat.min_slew_s))
        .map(|q| q.id.as_str())
        .collect();
    if !blocking.is_empty() {
        reasons.push(BaselineReason {
            kind: BaselineKind::TemporalConflict,
            detail: format!("{} conflicts with scheduled pass {}", p.id, blocking.join(", ")),
        });
    }

    let later: Vec<&PassWindow> = fi
        .admissible_downlinks
        .iter()
        .filter_map(|q| sc.pass(q))
        .filter(|q| q.satellite_id == p.satellite_id && q.start_s > p.end_s)
        .collect();
    let traj = trajectory(fi, s, &p.satellite_id, Some((p, order.data_mb)));
    if later.is_empty() {
        reasons.push(BaselineReason {
            kind: BaselineKind::NoDownlink,
            detail: format!("no downlink pass on {} after {}", p.satellite_id, p.id),
        });
    } else {
        let drain: i64 = later
            .iter()
            .filter(|q| s.downlinks.contains(&q.id) || !used.iter().any(|u| conflicts(q, u, sat.min_slew_s)))
            .map(|q| q.tx())
            .sum();
        let level = traj.iter().find(|(id, _)| *id == p.id).map(|(_, l)| *l).unwrap_or(0);
        if drain < level {
            reasons.push(BaselineReason {
                kind: BaselineKind::NoDownlink,
                detail: format!(
                    "downlinks after {} can move {} MB but {} MB would be on board",
                    p.id, drain, level
                ),
            });
        }
    }

    if let Some((at, level)) = traj.iter().find(|(_, l)| *l > sat.storage_capacity_mb) {
        reasons.push(BaselineReason {
            kind: BaselineKind::StorageOverflow,
            detail: format!(
                "storage on {} reaches {} MB at {}, capacity {} MB",
                p.satellite_id, level, at, sat.storage_capacity_mb
            ),
        });
    }

    let threshold = fi.params.threshold_for(&p.id);
    if p.cloud() > threshold {
        reasons.push(BaselineReason {
            kind: BaselineKind::Cloud,
            detail: format!("cloud {}‰ above threshold {}‰", p.cloud(), threshold),
        });
    }
    if let Some(deadline) = order.deadline_s {
        if p.end_s > deadline {
            reasons.push(BaselineReason {
                kind: BaselineKind::Deadline,
                detail: format!("{} ends after deadline {} s", p.id, deadline),
            });
        }
    }
    reasons
}

pub fn posthoc_explain(fi: &FilteredInstance, s: &Schedule, order_id: &str) -> Result<BaselineExplanation, BaselineError> {
    posthoc_explain_with(fi, s, order_id, false)
}

/// With `all_candidates`, reports the union of reasons over every candidate
/// instead of only the best one.
pub fn posthoc_explain_with(
    fi: &FilteredInstance,
    s: &Schedule,
    order_id: &str,
    all_candidates: bool,
) -> Result<BaselineExplanation, BaselineError> {
    if fi.scenario.order(order_id).is_none() {
        return Err(BaselineError::UnknownOrder(order_id.to_string()));
    }
    if s.is_scheduled(order_id) {
        return Err(BaselineError::Scheduled(order_id.to_string()));
    }
    let mut all: BTreeMap<String, Vec<BaselineReason>> = BTreeMap::new();
    for p in fi.scenario.candidate_passes(order_id) {
        all.insert(p.id.clone(), inspect_candidate(fi, s, order_id, &p.id));
    }
    let (chosen, best) = all
        .iter()
        .min_by_key(|(id, r)| (r.len(), (*id).clone()))
        .map(|(id, r)| (id.clone(), r.clone()))
        .ok_or_else(|| BaselineError::NoCandidates(order_id.to_string()))?;
    let reasons = if all_candidates {
        let mut seen = BTreeSet::new();
        all.values()
            .flatten()
            .filter(|r| seen.insert(r.kind))
            .cloned()
            .collect()
    } else {
        best
    };
    Ok(BaselineExplanation {
        order_id: order_id.to_string(),
        chosen_pass_id: chosen,
        reasons,
        all_candidate_reasons: all,
    })
}
