use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use certsched_core::explain::{
    corrected_instance, explain_what_if, explain_why, explain_why_not, CorrectionAtom, ExplainConfig,
    ExplainContext, ExplainError,
};
use certsched_core::model::{build_model, exclude_order};
use certsched_core::scenario::{apply_filters_with, FilterParams, ScenarioSpec};
use certsched_core::solver::Schedule;
use certsched_core::verify::{evaluate_solved, suggested_change_space, EvalConfig, EvaluationReport, VerifyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Why,
    Whynot,
    Whatif,
}

impl QueryKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "why" => Some(QueryKind::Why),
            "whynot" => Some(QueryKind::Whynot),
            "whatif" => Some(QueryKind::Whatif),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderRow {
    pub order_id: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleSummary {
    pub session_id: String,
    pub scenario: String,
    pub objective_milli: i64,
    pub n_orders: usize,
    pub n_scheduled: usize,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScheduleDiff {
    pub newly_scheduled: Vec<String>,
    pub newly_unscheduled: Vec<String>,
    /// Orders that stayed scheduled on a different pass: (order, from, to).
    pub moved: Vec<(String, String, String)>,
    pub objective_before_milli: i64,
    pub objective_after_milli: i64,
}

impl ScheduleDiff {
    pub fn between(before: &Schedule, after: &Schedule) -> Self {
        let mut d = ScheduleDiff {
            objective_before_milli: before.objective_milli,
            objective_after_milli: after.objective_milli,
            ..ScheduleDiff::default()
        };
        for (o, p) in &after.assignments {
            match before.assignments.get(o) {
                None => d.newly_scheduled.push(o.clone()),
                Some(q) if q != p => d.moved.push((o.clone(), q.clone(), p.clone())),
                Some(_) => {}
            }
        }
        d.newly_unscheduled = before
            .assignments
            .keys()
            .filter(|o| !after.assignments.contains_key(*o))
            .cloned()
            .collect();
        d
    }

    pub fn is_empty(&self) -> bool {
        self.newly_scheduled.is_empty() && self.newly_unscheduled.is_empty() && self.moved.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionOutcome {
    pub summary: ScheduleSummary,
    pub diff: ScheduleDiff,
}

/// Answer to a what-if query whose change space holds no working correction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoCorrectionFound {
    pub case: String,
    pub order_id: String,
    pub message: String,
}

type CacheKey = (String, QueryKind, String);

pub struct Session {
    pub id: String,
    pub ctx: ExplainContext,
    /// Orders dropped by applied corrections; kept forced out on every re-solve.
    pub exclusions: BTreeSet<String>,
    pub history: Vec<Vec<CorrectionAtom>>,
    cache: Mutex<HashMap<CacheKey, Value>>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("certificate types serialize")
}

impl Session {
    pub fn create(id: String, scenario: ScenarioSpec, filter: &FilterParams, cfg: ExplainConfig) -> Result<Self, ExplainError> {
        let fi = apply_filters_with(&scenario, filter);
        Ok(Session {
            id,
            ctx: ExplainContext::new(fi, cfg)?,
            exclusions: BTreeSet::new(),
            history: Vec::new(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn summary(&self) -> ScheduleSummary {
        ScheduleSummary {
            session_id: self.id.clone(),
            scenario: self.ctx.fi.scenario.name.clone(),
            objective_milli: self.ctx.schedule.objective_milli,
            n_orders: self.ctx.fi.scenario.orders.len(),
            n_scheduled: self.ctx.schedule.assignments.len(),
            schedule: self.ctx.schedule.clone(),
        }
    }

    pub fn orders(&self) -> Result<Vec<OrderRow>, ExplainError> {
        Ok(self
            .ctx
            .classify()?
            .into_iter()
            .map(|(order_id, status)| OrderRow {
                pass_id: self.ctx.schedule.pass_of(&order_id).map(str::to_string),
                order_id,
                status: status.as_str().to_string(),
            })
            .collect())
    }

    /// Answers a query, serving repeated ones from the cache.
    pub fn query(&self, order_id: &str, kind: QueryKind, changes: Option<&[CorrectionAtom]>) -> Result<Value, VerifyError> {
        let key = (
            order_id.to_string(),
            kind,
            changes.map(|c| to_value(&c).to_string()).unwrap_or_default(),
        );
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v.clone());
        }
        let v = match kind {
            QueryKind::Why => to_value(&explain_why(&self.ctx, order_id)?),
            QueryKind::Whynot => to_value(&explain_why_not(&self.ctx, order_id)?),
            QueryKind::Whatif => {
                let space = match changes {
                    Some(c) => c.to_vec(),
                    None => suggested_change_space(&self.ctx, order_id)?,
                };
                match explain_what_if(&self.ctx, order_id, &space) {
                    Ok(c) => to_value(&c),
                    Err(e @ ExplainError::NoCorrectionFound(_)) => to_value(&NoCorrectionFound {
                        case: "no_correction_found".into(),
                        order_id: order_id.to_string(),
                        message: e.to_string(),
                    }),
                    Err(e) => return Err(e.into()),
                }
            }
        };
        self.cache.lock().expect("cache lock").insert(key, v.clone());
        Ok(v)
    }

    /// Applies atoms to the session scenario, re-solves and clears the cache.
    pub fn apply_correction(&mut self, atoms: &[CorrectionAtom]) -> Result<CorrectionOutcome, ExplainError> {
        let corrected = corrected_instance(&self.ctx.fi, atoms)?;
        let mut exclusions = self.exclusions.clone();
        exclusions.extend(corrected.exclusions);
        let mut model = build_model(&corrected.fi, &self.ctx.cfg.weights);
        for o in &exclusions {
            model = exclude_order(&model, o)?;
        }
        let ctx = ExplainContext::with_model(corrected.fi, model, self.ctx.cfg.clone())?;
        let diff = ScheduleDiff::between(&self.ctx.schedule, &ctx.schedule);
        self.ctx = ctx;
        self.exclusions = exclusions;
        self.history.push(atoms.to_vec());
        self.cache.lock().expect("cache lock").clear();
        Ok(CorrectionOutcome {
            summary: self.summary(),
            diff,
        })
    }

    pub fn report(&self, seeds: Vec<u64>) -> Result<EvaluationReport, VerifyError> {
        let cfg = EvalConfig {
            explain: self.ctx.cfg.clone(),
            seeds,
            parallel: true,
        };
        evaluate_solved(&self.ctx, &cfg)
    }

    pub fn cached_queries(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

/// Status per order, keyed by id.
pub fn status_map(rows: &[OrderRow]) -> BTreeMap<String, String> {
    rows.iter().map(|r| (r.order_id.clone(), r.status.clone())).collect()
}
