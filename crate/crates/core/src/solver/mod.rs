//! Exact branch-and-bound optimizer and feasibility oracle for 0-1 models.
//!
//! Every row is normalized to `sum(coef * x) <= rhs`. Search state keeps two
//! activities per row: the minimum reachable activity (for propagation) and
//! the activity of the zero completion (all unfixed variables at 0). A node
//! whose zero completion violates no row is a feasible leaf.

mod engine;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ScheduleModel, VarRef};
use engine::{Compiled, Engine};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("search limit exceeded after {nodes} nodes")]
    LimitExceeded { nodes: u64 },
    #[error("brute force supports at most {max} variables, model has {actual}")]
    TooManyVariables { max: usize, actual: usize },
    #[error("assignment covers {got} variables, model has {expected}")]
    PartialAssignment { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Permutes branching order among equally scored variables.
    pub seed: u64,
    pub node_limit: Option<u64>,
    pub time_limit_ms: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            node_limit: Some(50_000_000),
            time_limit_ms: None,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        SolverConfig { seed, ..SolverConfig::default() }
    }
}

/// Total 0-1 assignment aligned with [`ScheduleModel::vars`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment(pub Vec<bool>);

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment(vec![false; n])
    }

    pub fn get(&self, var: usize) -> bool {
        self.0[var]
    }

    pub fn ones<'a>(&'a self, m: &'a ScheduleModel) -> impl Iterator<Item = &'a VarRef> {
        m.vars.iter().zip(&self.0).filter(|(_, v)| **v).map(|(r, _)| r)
    }

    pub fn to_map(&self, m: &ScheduleModel) -> BTreeMap<String, u8> {
        m.vars
            .iter()
            .zip(&self.0)
            .map(|(r, v)| (r.to_string(), *v as u8))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub propagations: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    pub objective_milli: Option<i64>,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Feasibility {
    Feasible(Assignment),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn witness(&self) -> Option<&Assignment> {
        match self {
            Feasibility::Feasible(a) => Some(a),
            Feasibility::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub feasible: bool,
    pub objective_milli: i64,
    pub violated: Vec<String>,
}

/// Decoded schedule: which order sits on which pass and which downlinks run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub assignments: BTreeMap<String, String>,
    pub imaging_passes: BTreeSet<String>,
    pub downlinks: BTreeSet<String>,
    pub objective_milli: i64,
}

impl Schedule {
    pub fn from_assignment(m: &ScheduleModel, a: &Assignment) -> Self {
        let mut s = Schedule {
            objective_milli: m.objective_value(&a.0),
            ..Schedule::default()
        };
        for v in a.ones(m) {
            match v {
                VarRef::X { order, pass } => {
                    s.assignments.insert(order.clone(), pass.clone());
                }
                VarRef::Y { pass } => {
                    s.imaging_passes.insert(pass.clone());
                }
                VarRef::D { pass } => {
                    s.downlinks.insert(pass.clone());
                }
                VarRef::A { .. } => {}
            }
        }
        s
    }

    pub fn is_scheduled(&self, order: &str) -> bool {
        self.assignments.contains_key(order)
    }

    pub fn pass_of(&self, order: &str) -> Option<&str> {
        self.assignments.get(order).map(String::as_str)
    }

    pub fn uses_pass(&self, pass: &str) -> bool {
        self.imaging_passes.contains(pass) || self.downlinks.contains(pass)
    }
}

pub fn evaluate(m: &ScheduleModel, a: &Assignment) -> Result<Evaluation, SolverError> {
    if a.0.len() != m.vars.len() {
        return Err(SolverError::PartialAssignment {
            expected: m.vars.len(),
            got: a.0.len(),
        });
    }
    let violated: Vec<String> = m
        .constraints
        .iter()
        .filter(|c| !c.satisfied_by(&a.0))
        .map(|c| c.id.clone())
        .collect();
    Ok(Evaluation {
        feasible: violated.is_empty(),
        objective_milli: m.objective_value(&a.0),
        violated,
    })
}

pub fn solve(m: &ScheduleModel, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
    let started = Instant::now();
    let compiled = Compiled::new(m, None);
    let mut engine = Engine::new(&compiled, cfg, started);
    let outcome = engine.optimize();
    let mut stats = engine.stats();
    stats.wall_ms = started.elapsed().as_secs_f64() * 1000.0;
    let best = outcome?;
    Ok(match best {
        None => SolveResult {
            status: SolveStatus::Infeasible,
            assignment: None,
            objective_milli: None,
            stats,
        },
        Some((value, witness)) => SolveResult {
            status: SolveStatus::Optimal,
            assignment: Some(Assignment(witness)),
            objective_milli: Some(value),
            stats,
        },
    })
}

pub fn check_feasibility(m: &ScheduleModel, cfg: &SolverConfig) -> Result<Feasibility, SolverError> {
    check_feasibility_masked(m, None, cfg)
}

/// Feasibility of `m` restricted to the constraints whose mask entry is true.
/// The mask is aligned with `m.constraints`.
pub fn check_feasibility_masked(
    m: &ScheduleModel,
    enabled: Option<&[bool]>,
    cfg: &SolverConfig,
) -> Result<Feasibility, SolverError> {
    let compiled = Compiled::new(m, enabled);
    let mut engine = Engine::new(&compiled, cfg, Instant::now());
    Ok(match engine.find_feasible()? {
        Some(w) => Feasibility::Feasible(Assignment(w)),
        None => Feasibility::Infeasible,
    })
}

pub const BRUTE_FORCE_MAX_VARS: usize = 25;

/// Exhaustive reference solver. Enumerates assignments in lexicographic
/// order and keeps the first strictly better one, so among optima it returns
/// the lexicographically smallest, like [`solve`].
pub fn brute_force_solve(m: &ScheduleModel) -> Result<SolveResult, SolverError> {
    let n = m.vars.len();
    if n > BRUTE_FORCE_MAX_VARS {
        return Err(SolverError::TooManyVariables {
            max: BRUTE_FORCE_MAX_VARS,
            actual: n,
        });
    }
    let started = Instant::now();
    let mut best: Option<(i64, Vec<bool>)> = None;
    let mut values = vec![false; n];
    for mask in 0u64..(1u64 << n) {
        for (i, v) in values.iter_mut().enumerate() {
            *v = mask >> (n - 1 - i) & 1 == 1;
        }
        if !m.constraints.iter().all(|c| c.satisfied_by(&values)) {
            continue;
        }
        let obj = m.objective_value(&values);
        if best.as_ref().is_none_or(|(b, _)| obj > *b) {
            best = Some((obj, values.clone()));
        }
    }
    let stats = SolveStats {
        nodes: 1u64 << n,
        propagations: 0,
        wall_ms: started.elapsed().as_secs_f64() * 1000.0,
    };
    Ok(match best {
        Some((v, a)) => SolveResult {
            status: SolveStatus::Optimal,
            assignment: Some(Assignment(a)),
            objective_milli: Some(v),
            stats,
        },
        None => SolveResult {
            status: SolveStatus::Infeasible,
            assignment: None,
            objective_milli: None,
            stats,
        },
    })
}

#[cfg(test)]
mod tests;
