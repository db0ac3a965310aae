//! The tagged 0-1 linear scheduling model.
//!
//! Four binary families: `x[o@p]` (order assigned to imaging pass), `y[p]`
//! (imaging pass used), `d[q]` (downlink pass used) and `a[o]` (order
//! scheduled). Every constraint carries a canonical id, a kind and an
//! operator-facing tag.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{FilteredInstance, PassKind, PassWindow, ScenarioSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("priority must be at least 1, got {0}")]
    InvalidPriority(i64),
    #[error("unknown order `{0}`")]
    UnknownOrder(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VarRef {
    X { order: String, pass: String },
    Y { pass: String },
    D { pass: String },
    A { order: String },
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarRef::X { order, pass } => write!(f, "x[{order}@{pass}]"),
            VarRef::Y { pass } => write!(f, "y[{pass}]"),
            VarRef::D { pass } => write!(f, "d[{pass}]"),
            VarRef::A { order } => write!(f, "a[{order}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub alpha_milli: i64,
    pub beta_milli: i64,
    pub lambda_milli: i64,
    pub mu_milli: i64,
    pub eta_milli: i64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            alpha_milli: 500,
            beta_milli: 10,
            lambda_milli: 100,
            mu_milli: 500,
            eta_milli: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Visibility,
    Deadline,
    Cloud,
    Storage,
    Downlink,
    Temporal,
    Energy,
    Policy,
    Structural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    UniqueAssignment,
    AssignImpliesPass,
    OrderScheduledLink,
    PassRequiresAssignment,
    DownlinkRequired,
    NoDownlink,
    TemporalExclusion,
    StorageUpperBound,
    StorageLowerBound,
    ForcedInclusion,
    ForcedExclusion,
}

impl ConstraintKind {
    pub fn tag(self) -> Tag {
        use ConstraintKind::*;
        match self {
            StorageUpperBound | StorageLowerBound => Tag::Storage,
            DownlinkRequired | NoDownlink => Tag::Downlink,
            TemporalExclusion => Tag::Temporal,
            UniqueAssignment | AssignImpliesPass | OrderScheduledLink | PassRequiresAssignment
            | ForcedInclusion | ForcedExclusion => Tag::Structural,
        }
    }

    pub fn is_structural(self) -> bool {
        self.tag() == Tag::Structural
    }

    pub fn is_forcing(self) -> bool {
        matches!(self, ConstraintKind::ForcedInclusion | ConstraintKind::ForcedExclusion)
    }

    pub fn as_str(self) -> &'static str {
        use ConstraintKind::*;
        match self {
            UniqueAssignment => "unique_assignment",
            AssignImpliesPass => "assign_implies_pass",
            OrderScheduledLink => "order_scheduled_link",
            PassRequiresAssignment => "pass_requires_assignment",
            DownlinkRequired => "downlink_required",
            NoDownlink => "no_downlink",
            TemporalExclusion => "temporal_exclusion",
            StorageUpperBound => "storage_upper_bound",
            StorageLowerBound => "storage_lower_bound",
            ForcedInclusion => "forced_inclusion",
            ForcedExclusion => "forced_exclusion",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Visibility => "visibility",
            Tag::Deadline => "deadline",
            Tag::Cloud => "cloud",
            Tag::Storage => "storage",
            Tag::Downlink => "downlink",
            Tag::Temporal => "temporal",
            Tag::Energy => "energy",
            Tag::Policy => "policy",
            Tag::Structural => "structural",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Sense {
    pub fn holds(self, activity: i64, rhs: i64) -> bool {
        match self {
            Sense::Le => activity <= rhs,
            Sense::Eq => activity == rhs,
            Sense::Ge => activity >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// `coef * vars[var]`, with `var` indexing [`ScheduleModel::vars`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub var: usize,
    pub coef: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedConstraint {
    pub id: String,
    pub tag: Tag,
    pub kind: ConstraintKind,
    pub terms: Vec<Term>,
    pub sense: Sense,
    pub rhs: i64,
    pub context: BTreeMap<String, String>,
}

impl TaggedConstraint {
    pub fn activity(&self, values: &[bool]) -> i64 {
        self.terms
            .iter()
            .filter(|t| values[t.var])
            .map(|t| t.coef)
            .sum()
    }

    pub fn satisfied_by(&self, values: &[bool]) -> bool {
        self.sense.holds(self.activity(values), self.rhs)
    }

    pub fn mentions(&self, var: usize) -> bool {
        self.terms.iter().any(|t| t.var == var)
    }

    pub fn ctx(&self, key: &str) -> &str {
        self.context.get(key).map(String::as_str).unwrap_or("?")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleModel {
    pub vars: Vec<VarRef>,
    pub constraints: Vec<TaggedConstraint>,
    pub objective: Vec<Term>,
    pub provenance: String,
    #[serde(skip)]
    index: HashMap<VarRef, usize>,
}

impl ScheduleModel {
    /// Assemble a model from parts; vars are sorted and constraints ordered by id.
    pub fn from_parts(
        vars: Vec<VarRef>,
        constraints: Vec<TaggedConstraint>,
        objective: Vec<Term>,
        provenance: impl Into<String>,
    ) -> Self {
        let index = vars.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let mut m = ScheduleModel {
            vars,
            constraints,
            objective,
            provenance: provenance.into(),
            index,
        };
        m.constraints.sort_by(|a, b| a.id.cmp(&b.id));
        m
    }

    pub fn var(&self, v: &VarRef) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn order_var(&self, order: &str) -> Option<usize> {
        self.var(&VarRef::A { order: order.to_string() })
    }

    pub fn constraint(&self, id: &str) -> Option<&TaggedConstraint> {
        self.constraints
            .binary_search_by(|c| c.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.constraints[i])
    }

    pub fn constraint_index(&self, id: &str) -> Option<usize> {
        self.constraints.binary_search_by(|c| c.id.as_str().cmp(id)).ok()
    }

    pub fn objective_coef(&self, var: usize) -> i64 {
        self.objective
            .iter()
            .filter(|t| t.var == var)
            .map(|t| t.coef)
            .sum()
    }

    pub fn objective_value(&self, values: &[bool]) -> i64 {
        self.objective
            .iter()
            .filter(|t| values[t.var])
            .map(|t| t.coef)
            .sum()
    }

    /// Order ids in canonical order.
    pub fn orders(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().filter_map(|v| match v {
            VarRef::A { order } => Some(order.as_str()),
            _ => None,
        })
    }

    /// Copy restricted to the given constraint ids (vars and objective kept).
    pub fn restricted_to(&self, keep: &BTreeSet<&str>) -> ScheduleModel {
        let constraints = self
            .constraints
            .iter()
            .filter(|c| keep.contains(c.id.as_str()))
            .cloned()
            .collect();
        ScheduleModel::from_parts(self.vars.clone(), constraints, self.objective.clone(), self.provenance.clone())
    }

    /// One line per constraint: `id | tag | kind | terms | sense | rhs`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for c in &self.constraints {
            let terms = c
                .terms
                .iter()
                .map(|t| format!("{:+} {}", t.coef, self.vars[t.var]))
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(&format!(
                "{} | {} | {} | {} | {} | {}\n",
                c.id,
                c.tag.as_str(),
                c.kind,
                terms,
                c.sense.symbol(),
                c.rhs
            ));
        }
        out
    }
}

/// `W(P) = 1 + alpha (P - 1)` in milli-units.
pub fn priority_weight(priority: i64, alpha_milli: i64) -> Result<i64, ModelError> {
    if priority < 1 {
        return Err(ModelError::InvalidPriority(priority));
    }
    Ok(1000 + alpha_milli * (priority - 1))
}

/// Latency from the end of imaging pass `p` to the earliest start among
/// `downlinks` that begin strictly after it, normalized by the horizon.
/// Returns 1000 when there is no such downlink.
pub fn compute_latency_milli(p: &PassWindow, downlinks: &[&PassWindow], horizon_s: i64) -> i64 {
    downlinks
        .iter()
        .filter(|q| q.kind == PassKind::Downlink && q.satellite_id == p.satellite_id && q.start_s > p.end_s)
        .map(|q| q.start_s)
        .min()
        .map(|start| ((1000 * (start - p.end_s)).div_euclid(horizon_s)).clamp(0, 1000))
        .unwrap_or(1000)
}

/// Unordered pass pairs on one satellite that overlap or leave less than
/// `min_slew_s` between them. Each pair is returned with ids in sorted order.
pub fn build_exclusions(passes: &[&PassWindow], min_slew_s: i64) -> BTreeSet<(String, String)> {
    let mut sorted: Vec<&PassWindow> = passes.to_vec();
    sorted.sort_by(|a, b| (a.start_s, &a.id).cmp(&(b.start_s, &b.id)));
    let mut out = BTreeSet::new();
    for (i, first) in sorted.iter().enumerate() {
        for second in &sorted[i + 1..] {
            if second.start_s >= first.end_s + min_slew_s {
                // later passes start even later, but may end earlier than `first`
                // does not matter: only start times are compared against first.end
                break;
            }
            let pair = if first.id <= second.id {
                (first.id.clone(), second.id.clone())
            } else {
                (second.id.clone(), first.id.clone())
            };
            out.insert(pair);
        }
    }
    out
}

fn ctx(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

pub fn build_model(fi: &FilteredInstance, w: &ObjectiveWeights) -> ScheduleModel {
    let sc: &ScenarioSpec = &fi.scenario;
    let passes: HashMap<&str, &PassWindow> = sc.passes.iter().map(|p| (p.id.as_str(), p)).collect();

    let mut order_ids: Vec<&str> = sc.orders.iter().map(|o| o.id.as_str()).collect();
    order_ids.sort();
    let imaging_ids: BTreeSet<&str> = fi.admissible_pairs.iter().map(|(_, p)| p.as_str()).collect();
    let downlink_ids: BTreeSet<&str> = fi.admissible_downlinks.iter().map(String::as_str).collect();

    let mut vars: Vec<VarRef> = Vec::new();
    for (o, p) in &fi.admissible_pairs {
        vars.push(VarRef::X { order: o.clone(), pass: p.clone() });
    }
    vars.extend(imaging_ids.iter().map(|p| VarRef::Y { pass: p.to_string() }));
    vars.extend(downlink_ids.iter().map(|p| VarRef::D { pass: p.to_string() }));
    vars.extend(order_ids.iter().map(|o| VarRef::A { order: o.to_string() }));
    vars.sort();
    let index: HashMap<&VarRef, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let x = |o: &str, p: &str| index[&VarRef::X { order: o.into(), pass: p.into() }];
    let y = |p: &str| index[&VarRef::Y { pass: p.into() }];
    let d = |p: &str| index[&VarRef::D { pass: p.into() }];
    let a = |o: &str| index[&VarRef::A { order: o.into() }];

    let mut pairs_by_order: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut pairs_by_pass: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (o, p) in &fi.admissible_pairs {
        pairs_by_order.entry(o).or_default().push(p);
        pairs_by_pass.entry(p).or_default().push(o);
    }

    // model passes per satellite, chronological by (start, id)
    let mut by_sat: BTreeMap<&str, Vec<&PassWindow>> = BTreeMap::new();
    for id in imaging_ids.iter().chain(downlink_ids.iter()) {
        let p = passes[id];
        by_sat.entry(p.satellite_id.as_str()).or_default().push(p);
    }
    for list in by_sat.values_mut() {
        list.sort_by(|a, b| (a.start_s, &a.id).cmp(&(b.start_s, &b.id)));
    }
    let downlinks_of = |sat: &str| -> Vec<&PassWindow> {
        by_sat
            .get(sat)
            .map(|l| l.iter().copied().filter(|p| !p.is_imaging()).collect())
            .unwrap_or_default()
    };

    let mut objective = Vec::new();
    let mut constraints = Vec::new();
    let mut push = |id: String, kind: ConstraintKind, terms: Vec<Term>, sense: Sense, rhs: i64, context| {
        constraints.push(TaggedConstraint {
            id,
            tag: kind.tag(),
            kind,
            terms,
            sense,
            rhs,
            context,
        });
    };
    let t = |var: usize, coef: i64| Term { var, coef };

    for o in &order_ids {
        let order = sc.order(o).expect("order exists");
        let weight = priority_weight(order.priority, w.alpha_milli).expect("validated priority");
        let cands = pairs_by_order.get(o).cloned().unwrap_or_default();
        for p in &cands {
            let pass = passes[p];
            let dls = downlinks_of(&pass.satellite_id);
            let latency = compute_latency_milli(pass, &dls, sc.horizon_s);
            let factor = 1_000_000 - w.mu_milli * pass.cloud() - w.eta_milli * latency;
            let coef = (order.value_milli as i128 * weight as i128 * factor as i128).div_euclid(1_000_000_000);
            objective.push(t(x(o, p), coef as i64));
        }
        objective.push(t(a(o), w.beta_milli));

        let mut unique: Vec<Term> = cands.iter().map(|p| t(x(o, p), 1)).collect();
        unique.sort_by_key(|t| t.var);
        push(
            format!("unique/{o}"),
            ConstraintKind::UniqueAssignment,
            unique.clone(),
            Sense::Le,
            1,
            ctx(&[("order", o.to_string())]),
        );
        let mut link = vec![t(a(o), 1)];
        link.extend(unique.iter().map(|u| t(u.var, -1)));
        push(
            format!("order_link/{o}"),
            ConstraintKind::OrderScheduledLink,
            link,
            Sense::Eq,
            0,
            ctx(&[("order", o.to_string())]),
        );
        for p in &cands {
            push(
                format!("assign_link/{o}/{p}"),
                ConstraintKind::AssignImpliesPass,
                vec![t(x(o, p), 1), t(y(p), -1)],
                Sense::Le,
                0,
                ctx(&[("order", o.to_string()), ("pass", p.to_string())]),
            );
        }
    }

    for q in &downlink_ids {
        objective.push(t(d(q), -w.lambda_milli));
    }

    for p in &imaging_ids {
        let pass = passes[p];
        let assigned = &pairs_by_pass[p];
        let mut terms = vec![t(y(p), 1)];
        terms.extend(assigned.iter().map(|o| t(x(o, p), -1)));
        push(
            format!("pass_link/{p}"),
            ConstraintKind::PassRequiresAssignment,
            terms,
            Sense::Le,
            0,
            ctx(&[("pass", p.to_string()), ("orders", assigned.join(","))]),
        );

        let later: Vec<&PassWindow> = downlinks_of(&pass.satellite_id)
            .into_iter()
            .filter(|q| q.start_s > pass.end_s)
            .collect();
        let base_ctx = [
            ("pass", p.to_string()),
            ("satellite", pass.satellite_id.clone()),
            ("orders", assigned.join(",")),
            ("end_s", pass.end_s.to_string()),
        ];
        if later.is_empty() {
            push(
                format!("no_downlink/{p}"),
                ConstraintKind::NoDownlink,
                vec![t(y(p), 1)],
                Sense::Le,
                0,
                ctx(&base_ctx),
            );
        } else {
            let mut terms = vec![t(y(p), 1)];
            terms.extend(later.iter().map(|q| t(d(&q.id), -1)));
            let mut c = ctx(&base_ctx);
            c.insert(
                "downlinks".into(),
                later.iter().map(|q| q.id.as_str()).collect::<Vec<_>>().join(","),
            );
            push(format!("downlink_req/{p}"), ConstraintKind::DownlinkRequired, terms, Sense::Le, 0, c);
        }
    }

    let pass_var = |p: &PassWindow| if p.is_imaging() { y(&p.id) } else { d(&p.id) };
    for (sat_id, list) in &by_sat {
        let sat = sc.satellite(sat_id).expect("satellite exists");
        for (i, j) in build_exclusions(list, sat.min_slew_s) {
            let (pi, pj) = (passes[i.as_str()], passes[j.as_str()]);
            let mut terms = vec![t(pass_var(pi), 1), t(pass_var(pj), 1)];
            terms.sort_by_key(|t| t.var);
            push(
                format!("temporal/{i}/{j}"),
                ConstraintKind::TemporalExclusion,
                terms,
                Sense::Le,
                1,
                ctx(&[
                    ("satellite", sat_id.to_string()),
                    ("pass_a", i.clone()),
                    ("pass_b", j.clone()),
                    ("orders_a", pairs_by_pass.get(i.as_str()).map(|v| v.join(",")).unwrap_or_default()),
                    ("orders_b", pairs_by_pass.get(j.as_str()).map(|v| v.join(",")).unwrap_or_default()),
                ]),
            );
        }

        let mut cumulative: Vec<Term> = Vec::new();
        for (k, pass) in list.iter().enumerate() {
            if pass.is_imaging() {
                for o in &pairs_by_pass[pass.id.as_str()] {
                    let data = sc.order(o).expect("order exists").data_mb;
                    cumulative.push(t(x(o, &pass.id), data));
                }
            } else {
                cumulative.push(t(d(&pass.id), -pass.tx()));
            }
            let mut terms = cumulative.clone();
            terms.sort_by_key(|t| t.var);
            let context = ctx(&[
                ("satellite", sat_id.to_string()),
                ("checkpoint", (k + 1).to_string()),
                ("pass", pass.id.clone()),
                ("time_s", pass.end_s.to_string()),
                ("capacity_mb", sat.storage_capacity_mb.to_string()),
                ("initial_mb", sat.initial_storage_mb.to_string()),
            ]);
            push(
                format!("storage_ub/{sat_id}/k={:04}", k + 1),
                ConstraintKind::StorageUpperBound,
                terms.clone(),
                Sense::Le,
                sat.storage_capacity_mb - sat.initial_storage_mb,
                context.clone(),
            );
            push(
                format!("storage_lb/{sat_id}/k={:04}", k + 1),
                ConstraintKind::StorageLowerBound,
                terms,
                Sense::Ge,
                -sat.initial_storage_mb,
                context,
            );
        }
    }

    objective.sort_by_key(|t| t.var);
    let provenance = format!(
        "{} (cloud threshold {}‰)",
        sc.name, fi.params.cloud_threshold_milli
    );
    ScheduleModel::from_parts(vars, constraints, objective, provenance)
}

/// Clone of `m` with `a[order] = value` added as `forced/<order>`.
pub fn force_order(m: &ScheduleModel, order_id: &str, value: bool) -> Result<ScheduleModel, ModelError> {
    fix_order(m, "forced", order_id, value)
}

/// Clone of `m` with an operator exclusion `excluded/<order>`. It survives a
/// later `force_order` on the same order, which then becomes infeasible.
pub fn exclude_order(m: &ScheduleModel, order_id: &str) -> Result<ScheduleModel, ModelError> {
    fix_order(m, "excluded", order_id, false)
}

fn fix_order(m: &ScheduleModel, prefix: &str, order_id: &str, value: bool) -> Result<ScheduleModel, ModelError> {
    let var = m
        .order_var(order_id)
        .ok_or_else(|| ModelError::UnknownOrder(order_id.to_string()))?;
    let mut out = m.clone();
    let kind = if value {
        ConstraintKind::ForcedInclusion
    } else {
        ConstraintKind::ForcedExclusion
    };
    let c = TaggedConstraint {
        id: format!("{prefix}/{order_id}"),
        tag: kind.tag(),
        kind,
        terms: vec![Term { var, coef: 1 }],
        sense: Sense::Eq,
        rhs: value as i64,
        context: ctx(&[("order", order_id.to_string())]),
    };
    match out.constraints.binary_search_by(|x| x.id.cmp(&c.id)) {
        Ok(i) => out.constraints[i] = c,
        Err(i) => out.constraints.insert(i, c),
    }
    Ok(out)
}

/// Deterministic operator-facing sentence for one constraint.
pub fn render_constraint(c: &TaggedConstraint) -> String {
    use ConstraintKind::*;
    match c.kind {
        UniqueAssignment => format!("order {} is imaged at most once", c.ctx("order")),
        AssignImpliesPass => format!(
            "assigning order {} to pass {} uses that pass",
            c.ctx("order"),
            c.ctx("pass")
        ),
        OrderScheduledLink => format!(
            "order {} counts as scheduled exactly when it is assigned to a pass",
            c.ctx("order")
        ),
        PassRequiresAssignment => format!("pass {} is only used when an order is assigned to it", c.ctx("pass")),
        DownlinkRequired => format!(
            "imaging pass {} needs a downlink afterward on {} (one of {})",
            c.ctx("pass"),
            c.ctx("satellite"),
            c.ctx("downlinks")
        ),
        NoDownlink => format!(
            "imaging pass {} has no subsequent downlink pass on {}",
            c.ctx("pass"),
            c.ctx("satellite")
        ),
        TemporalExclusion => format!(
            "passes {} and {} conflict temporally (overlap or slew)",
            c.ctx("pass_a"),
            c.ctx("pass_b")
        ),
        StorageUpperBound => format!(
            "storage capacity on {} ({} MB) bounds the data on board after pass {} (checkpoint {}, {} MB free initially)",
            c.ctx("satellite"),
            c.ctx("capacity_mb"),
            c.ctx("pass"),
            c.ctx("checkpoint"),
            c.context
                .get("capacity_mb")
                .zip(c.context.get("initial_mb"))
                .and_then(|(cap, init)| Some(cap.parse::<i64>().ok()? - init.parse::<i64>().ok()?))
                .map(|v| v.to_string())
                .unwrap_or_else(|| "?".into())
        ),
        StorageLowerBound => format!(
            "storage on {} cannot go below zero after pass {} (checkpoint {})",
            c.ctx("satellite"),
            c.ctx("pass"),
            c.ctx("checkpoint")
        ),
        ForcedInclusion => format!("the request to include order {}", c.ctx("order")),
        ForcedExclusion => format!("the request to exclude order {}", c.ctx("order")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{apply_feasibility_filters, GroundStation, Order, Satellite};

    fn pw(id: &str, start: i64, end: i64) -> PassWindow {
        PassWindow::imaging(id, "S1", start, end, &["O1"], 0)
    }

    #[test]
    fn priority_weight_examples() {
        assert_eq!(priority_weight(1, 777), Ok(1000));
        assert_eq!(priority_weight(3, 500), Ok(2000));
        assert_eq!(priority_weight(2, 0), Ok(1000));
        assert_eq!(priority_weight(0, 500), Err(ModelError::InvalidPriority(0)));
    }

    #[test]
    fn latency_examples() {
        let p = pw("P", 0, 100);
        let q0 = PassWindow::downlink("Q0", "S1", "G", 101, 200);
        assert_eq!(compute_latency_milli(&p, &[&q0], 1000), 1);
        let q1 = PassWindow::downlink("Q1", "S1", "G", 350, 400);
        assert_eq!(compute_latency_milli(&p, &[&q1], 1000), 250);
        assert_eq!(compute_latency_milli(&p, &[], 1000), 1000);
        // a downlink starting exactly at the end of imaging is not "after" it
        let q2 = PassWindow::downlink("Q2", "S1", "G", 100, 150);
        assert_eq!(compute_latency_milli(&p, &[&q2], 1000), 1000);
        // earliest wins; other satellites ignored
        let other = PassWindow::downlink("Q3", "S2", "G", 101, 150);
        assert_eq!(compute_latency_milli(&p, &[&q1, &other, &q0], 1000), 1);
    }

    #[test]
    fn zero_gap_latency_is_zero() {
        // closest possible strict start is one second later; with a 2000 s
        // horizon the normalized value floors to zero
        let p = pw("P", 0, 100);
        let q = PassWindow::downlink("Q", "S1", "G", 101, 200);
        assert_eq!(compute_latency_milli(&p, &[&q], 2000), 0);
    }

    #[test]
    fn exclusion_examples() {
        let a = pw("A", 0, 100);
        let b = pw("B", 400, 500);
        assert!(build_exclusions(&[&a, &b], 150).is_empty());
        let c = pw("C", 50, 150);
        assert!(build_exclusions(&[&a, &c], 0).contains(&("A".into(), "C".into())));
        let d = pw("D", 200, 300); // gap of 100 s after A
        assert!(build_exclusions(&[&d, &a], 150).contains(&("A".into(), "D".into())));
        assert!(build_exclusions(&[&d, &a], 100).is_empty());
    }

    #[test]
    fn exclusions_with_nested_windows() {
        let long = pw("L", 0, 1000);
        let early = pw("E", 10, 20);
        let late = pw("Z", 900, 950);
        let ex = build_exclusions(&[&long, &early, &late], 0);
        assert_eq!(ex.len(), 2);
        assert!(ex.contains(&("E".into(), "L".into())));
        assert!(ex.contains(&("L".into(), "Z".into())));
    }

    fn single() -> FilteredInstance {
        let mut s = ScenarioSpec {
            name: "single".into(),
            horizon_s: 1000,
            satellites: vec![Satellite {
                id: "S1".into(),
                storage_capacity_mb: 500,
                initial_storage_mb: 100,
                downlink_rate_kbps: 8000,
                min_slew_s: 10,
                unavailable_windows: vec![],
            }],
            stations: vec![GroundStation { id: "G1".into(), unavailable_windows: vec![] }],
            orders: vec![Order { id: "O1".into(), value_milli: 3000, priority: 2, data_mb: 50, deadline_s: None }],
            passes: vec![pw("P1", 0, 60), PassWindow::downlink("Q1", "S1", "G1", 500, 600)],
        };
        s.normalize_and_validate().unwrap();
        apply_feasibility_filters(&s, 1000)
    }

    #[test]
    fn single_order_model_has_exact_constraint_ids() {
        let m = build_model(&single(), &ObjectiveWeights::default());
        let ids: Vec<&str> = m.constraints.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(
            ids,
            vec![
                "assign_link/O1/P1",
                "downlink_req/P1",
                "order_link/O1",
                "pass_link/P1",
                "storage_lb/S1/k=0001",
                "storage_lb/S1/k=0002",
                "storage_ub/S1/k=0001",
                "storage_ub/S1/k=0002",
                "unique/O1",
            ]
        );
        assert_eq!(m.vars.len(), 4);
        for c in &m.constraints {
            assert_eq!(c.tag, c.kind.tag());
        }
        let ub2 = m.constraint("storage_ub/S1/k=0002").unwrap();
        assert_eq!(ub2.rhs, 400);
        // 8000 kbps * 100 s / 8000 = 100 MB transmitted
        let d = m.var(&VarRef::D { pass: "Q1".into() }).unwrap();
        assert!(ub2.terms.contains(&Term { var: d, coef: -100 }));
    }

    #[test]
    fn objective_coefficients() {
        let w = ObjectiveWeights { alpha_milli: 500, beta_milli: 7, lambda_milli: 30, mu_milli: 0, eta_milli: 1000 };
        let m = build_model(&single(), &w);
        let x = m.var(&VarRef::X { order: "O1".into(), pass: "P1".into() }).unwrap();
        // V * W = 3000 * 1.5; latency (500 - 60) / 1000 = 440 milli
        assert_eq!(m.objective_coef(x), 4500 * 560 / 1000);
        assert_eq!(m.objective_coef(m.order_var("O1").unwrap()), 7);
        assert_eq!(m.objective_coef(m.var(&VarRef::D { pass: "Q1".into() }).unwrap()), -30);
    }

    #[test]
    fn no_downlink_row_when_nothing_follows() {
        let mut fi = single();
        fi.scenario.passes[1].start_s = 10;
        fi.scenario.passes[1].end_s = 50;
        fi.scenario.normalize();
        fi.scenario.passes[1].tx_mb = Some(40);
        let m = build_model(&fi, &ObjectiveWeights::default());
        let c = m.constraint("no_downlink/P1").unwrap();
        assert_eq!(c.kind, ConstraintKind::NoDownlink);
        assert_eq!(c.tag, Tag::Downlink);
        assert_eq!(render_constraint(c), "imaging pass P1 has no subsequent downlink pass on S1");
        assert!(m.constraint("downlink_req/P1").is_none());
        assert!(m.constraint("temporal/P1/Q1").is_some());
    }

    #[test]
    fn forcing_adds_one_sorted_constraint() {
        let m = build_model(&single(), &ObjectiveWeights::default());
        let f = force_order(&m, "O1", true).unwrap();
        assert_eq!(f.constraints.len(), m.constraints.len() + 1);
        let c = f.constraint("forced/O1").unwrap();
        assert_eq!(c.kind, ConstraintKind::ForcedInclusion);
        assert_eq!(render_constraint(c), "the request to include order O1");
        assert!(f.constraints.windows(2).all(|w| w[0].id < w[1].id));
        assert_eq!(force_order(&m, "nope", true), Err(ModelError::UnknownOrder("nope".into())));
    }

    #[test]
    fn exclusion_survives_forcing() {
        let m = build_model(&single(), &ObjectiveWeights::default());
        let f = force_order(&exclude_order(&m, "O1").unwrap(), "O1", true).unwrap();
        assert_eq!(f.constraints.len(), m.constraints.len() + 2);
        assert_eq!(f.constraint("excluded/O1").unwrap().kind, ConstraintKind::ForcedExclusion);
        assert_eq!(f.constraint("forced/O1").unwrap().kind, ConstraintKind::ForcedInclusion);
    }

    #[test]
    fn builds_are_identical() {
        let a = build_model(&single(), &ObjectiveWeights::default());
        let b = build_model(&single(), &ObjectiveWeights::default());
        assert_eq!(a.dump(), b.dump());
        assert_eq!(a, b);
    }

    #[test]
    fn render_temporal() {
        let c = TaggedConstraint {
            id: "temporal/p4/p7".into(),
            tag: Tag::Temporal,
            kind: ConstraintKind::TemporalExclusion,
            terms: vec![],
            sense: Sense::Le,
            rhs: 1,
            context: ctx(&[("pass_a", "p4".into()), ("pass_b", "p7".into())]),
        };
        assert_eq!(render_constraint(&c), "passes p4 and p7 conflict temporally (overlap or slew)");
    }
}
