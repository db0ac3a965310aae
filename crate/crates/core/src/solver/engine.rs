use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{SolverConfig, SolverError, SolveStats};
use crate::model::{ScheduleModel, Sense};

struct Row {
    terms: Vec<(usize, i64)>,
    rhs: i64,
    max_abs: i64,
}

impl Row {
    fn new(terms: &BTreeMap<usize, i64>, rhs: i64) -> Row {
        let terms: Vec<(usize, i64)> = terms.iter().filter(|(_, c)| **c != 0).map(|(j, c)| (*j, *c)).collect();
        let max_abs = terms.iter().map(|(_, c)| c.abs()).max().unwrap_or(0);
        Row { terms, rhs, max_abs }
    }

    fn is_at_most_one(&self) -> bool {
        self.rhs == 1 && self.terms.len() > 1 && self.terms.iter().all(|(_, c)| *c == 1)
    }
}

/// Rows in `<=` form plus per-variable occurrence lists.
pub(super) struct Compiled {
    n: usize,
    rows: Vec<Row>,
    obj: Vec<i64>,
}

impl Compiled {
    pub(super) fn new(m: &ScheduleModel, enabled: Option<&[bool]>) -> Compiled {
        let n = m.vars.len();
        let mut rows = Vec::new();
        for (i, c) in m.constraints.iter().enumerate() {
            if enabled.is_some_and(|mask| !mask[i]) {
                continue;
            }
            let mut terms: BTreeMap<usize, i64> = BTreeMap::new();
            for t in &c.terms {
                *terms.entry(t.var).or_default() += t.coef;
            }
            let negated: BTreeMap<usize, i64> = terms.iter().map(|(j, c)| (*j, -c)).collect();
            match c.sense {
                Sense::Le => rows.push(Row::new(&terms, c.rhs)),
                Sense::Ge => rows.push(Row::new(&negated, -c.rhs)),
                Sense::Eq => {
                    rows.push(Row::new(&terms, c.rhs));
                    rows.push(Row::new(&negated, -c.rhs));
                }
            }
        }
        let mut obj = vec![0; n];
        for t in &m.objective {
            obj[t.var] += t.coef;
        }
        Compiled { n, rows, obj }
    }

    /// Copy with the extra row `objective >= floor`.
    fn with_objective_floor(&self, floor: i64) -> Compiled {
        let terms: BTreeMap<usize, i64> = self.obj.iter().enumerate().map(|(j, c)| (j, -c)).collect();
        let mut rows: Vec<Row> = self
            .rows
            .iter()
            .map(|r| Row {
                terms: r.terms.clone(),
                rhs: r.rhs,
                max_abs: r.max_abs,
            })
            .collect();
        rows.push(Row::new(&terms, -floor));
        Compiled {
            n: self.n,
            rows,
            obj: self.obj.clone(),
        }
    }
}

pub(super) struct Engine<'a> {
    c: &'a Compiled,
    cfg: SolverConfig,
    started: Instant,
    occ: Vec<Vec<(usize, i64)>>,
    val: Vec<i8>,
    min_act: Vec<i64>,
    zc_act: Vec<i64>,
    violated: BTreeSet<usize>,
    trail: Vec<usize>,
    queue: Vec<usize>,
    queued: Vec<bool>,
    rank: Vec<usize>,
    fixed_obj: i64,
    positive: Vec<usize>,
    group_of: Vec<Option<usize>>,
    group_best: Vec<i64>,
    touched: Vec<usize>,
    best: Option<(i64, Vec<bool>)>,
    /// Objective every solution found by the feasibility search must reach.
    target: Option<i64>,
    nodes: u64,
    propagations: u64,
}

const UNFIXED: i8 = -1;

impl<'a> Engine<'a> {
    pub(super) fn new(c: &'a Compiled, cfg: &SolverConfig, started: Instant) -> Engine<'a> {
        let mut occ = vec![Vec::new(); c.n];
        let mut min_act = Vec::with_capacity(c.rows.len());
        let mut violated = BTreeSet::new();
        for (r, row) in c.rows.iter().enumerate() {
            for &(j, coef) in &row.terms {
                occ[j].push((r, coef));
            }
            min_act.push(row.terms.iter().map(|(_, c)| (*c).min(0)).sum());
            if row.rhs < 0 {
                violated.insert(r);
            }
        }

        let mut rank: Vec<usize> = (0..c.n).collect();
        if cfg.seed != 0 {
            let mut order: Vec<usize> = (0..c.n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
            for (pos, j) in order.into_iter().enumerate() {
                rank[j] = pos;
            }
        }

        // disjoint at-most-one groups over profitable variables
        let positive: Vec<usize> = (0..c.n).filter(|&j| c.obj[j] > 0).collect();
        let mut group_of = vec![None; c.n];
        let mut n_groups = 0;
        for row in c.rows.iter().filter(|r| r.is_at_most_one()) {
            let free: Vec<usize> = row
                .terms
                .iter()
                .map(|(j, _)| *j)
                .filter(|&j| c.obj[j] > 0 && group_of[j].is_none())
                .collect();
            if free.len() > 1 {
                for j in free {
                    group_of[j] = Some(n_groups);
                }
                n_groups += 1;
            }
        }

        Engine {
            c,
            cfg: *cfg,
            started,
            occ,
            val: vec![UNFIXED; c.n],
            min_act,
            zc_act: vec![0; c.rows.len()],
            violated,
            trail: Vec::new(),
            queue: (0..c.rows.len()).rev().collect(),
            queued: vec![true; c.rows.len()],
            rank,
            fixed_obj: 0,
            positive,
            group_of,
            group_best: vec![0; n_groups],
            touched: Vec::new(),
            best: None,
            target: None,
            nodes: 0,
            propagations: 0,
        }
    }

    pub(super) fn stats(&self) -> SolveStats {
        SolveStats {
            nodes: self.nodes,
            propagations: self.propagations,
            wall_ms: 0.0,
        }
    }

    fn tick(&mut self) -> Result<(), SolverError> {
        self.nodes += 1;
        if self.cfg.node_limit.is_some_and(|l| self.nodes > l) {
            return Err(SolverError::LimitExceeded { nodes: self.nodes });
        }
        if self.nodes.is_multiple_of(1024) {
            if let Some(ms) = self.cfg.time_limit_ms {
                if self.started.elapsed() > Duration::from_millis(ms) {
                    return Err(SolverError::LimitExceeded { nodes: self.nodes });
                }
            }
        }
        Ok(())
    }

    fn enqueue(&mut self, r: usize) {
        if !self.queued[r] {
            self.queued[r] = true;
            self.queue.push(r);
        }
    }

    fn clear_queue(&mut self) {
        for r in self.queue.drain(..) {
            self.queued[r] = false;
        }
    }

    fn refresh_violation(&mut self, r: usize) {
        if self.zc_act[r] > self.c.rows[r].rhs {
            self.violated.insert(r);
        } else {
            self.violated.remove(&r);
        }
    }

    fn assign(&mut self, j: usize, one: bool) {
        self.val[j] = one as i8;
        self.trail.push(j);
        if one {
            self.fixed_obj += self.c.obj[j];
        }
        for k in 0..self.occ[j].len() {
            let (r, coef) = self.occ[j][k];
            if one {
                self.zc_act[r] += coef;
                self.refresh_violation(r);
                if coef > 0 {
                    self.min_act[r] += coef;
                    self.enqueue(r);
                }
            } else if coef < 0 {
                self.min_act[r] -= coef;
                self.enqueue(r);
            }
        }
    }

    fn unassign(&mut self, j: usize) {
        let one = self.val[j] == 1;
        self.val[j] = UNFIXED;
        if one {
            self.fixed_obj -= self.c.obj[j];
        }
        for k in 0..self.occ[j].len() {
            let (r, coef) = self.occ[j][k];
            if one {
                self.zc_act[r] -= coef;
                self.refresh_violation(r);
                if coef > 0 {
                    self.min_act[r] -= coef;
                }
            } else if coef < 0 {
                self.min_act[r] += coef;
            }
        }
    }

    fn undo_to(&mut self, mark: usize) {
        self.clear_queue();
        while self.trail.len() > mark {
            let j = self.trail.pop().expect("trail above mark");
            self.unassign(j);
        }
    }

    /// Returns false on conflict.
    fn propagate(&mut self) -> bool {
        let c = self.c;
        while let Some(r) = self.queue.pop() {
            self.queued[r] = false;
            self.propagations += 1;
            let row = &c.rows[r];
            let slack = row.rhs - self.min_act[r];
            if slack < 0 {
                self.clear_queue();
                return false;
            }
            if slack >= row.max_abs {
                continue;
            }
            // forcing a variable never changes this row's minimum activity
            for &(j, coef) in &row.terms {
                if self.val[j] == UNFIXED && coef.abs() > slack {
                    self.assign(j, coef < 0);
                }
            }
        }
        true
    }

    fn solution(&self) -> Vec<bool> {
        self.val.iter().map(|v| *v == 1).collect()
    }

    /// Unfixed variable that can lower the activity of the first violated row.
    fn pick_repair(&self) -> usize {
        let r = *self.violated.iter().next().expect("a violated row");
        self.c.rows[r]
            .terms
            .iter()
            .filter(|(j, coef)| *coef < 0 && self.val[*j] == UNFIXED)
            .min_by_key(|(j, coef)| (*coef, self.rank[*j]))
            .map(|(j, _)| *j)
            .expect("propagation leaves a repair candidate")
    }

    fn pick_objective(&self) -> Option<usize> {
        self.positive
            .iter()
            .filter(|&&j| self.val[j] == UNFIXED)
            .min_by_key(|&&j| (-self.c.obj[j], self.rank[j]))
            .copied()
    }

    /// Upper bound from disjoint at-most-one groups of profitable variables.
    fn bound(&mut self) -> i64 {
        let mut b = self.fixed_obj;
        for &j in &self.positive {
            if self.val[j] != UNFIXED {
                continue;
            }
            let o = self.c.obj[j];
            match self.group_of[j] {
                None => b += o,
                Some(g) => {
                    if self.group_best[g] == 0 {
                        self.touched.push(g);
                    }
                    self.group_best[g] = self.group_best[g].max(o);
                }
            }
        }
        for g in self.touched.drain(..) {
            b += self.group_best[g];
            self.group_best[g] = 0;
        }
        b
    }

    /// Depth-first search for a solution; with a target set, only for one
    /// whose objective can still reach it.
    fn dfs_feasible(&mut self) -> Result<bool, SolverError> {
        self.tick()?;
        if !self.propagate() {
            return Ok(false);
        }
        if self.target.is_some_and(|t| self.bound() < t) {
            return Ok(false);
        }
        if self.violated.is_empty() {
            return Ok(true);
        }
        let j = self.pick_repair();
        let mark = self.trail.len();
        for one in [true, false] {
            self.assign(j, one);
            if self.dfs_feasible()? {
                return Ok(true);
            }
            self.undo_to(mark);
        }
        Ok(false)
    }

    pub(super) fn find_feasible(&mut self) -> Result<Option<Vec<bool>>, SolverError> {
        Ok(self.dfs_feasible()?.then(|| self.solution()))
    }

    fn branch_and_bound(&mut self) -> Result<(), SolverError> {
        self.tick()?;
        if !self.propagate() {
            return Ok(());
        }
        let bound = self.bound();
        if self.best.as_ref().is_some_and(|(b, _)| bound <= *b) {
            return Ok(());
        }
        let j = if self.violated.is_empty() {
            let value = self.fixed_obj;
            if self.best.as_ref().is_none_or(|(b, _)| value > *b) {
                self.best = Some((value, self.solution()));
            }
            if bound <= value {
                return Ok(());
            }
            match self.pick_objective() {
                Some(j) => j,
                None => return Ok(()),
            }
        } else {
            self.pick_repair()
        };
        let mark = self.trail.len();
        for one in [true, false] {
            self.assign(j, one);
            self.branch_and_bound()?;
            self.undo_to(mark);
        }
        Ok(())
    }

    /// Walks variables in canonical order, fixing each to 0 whenever some
    /// optimal solution that agrees with the prefix still exists.
    fn lex_min(&mut self, mut witness: Vec<bool>) -> Result<Vec<bool>, SolverError> {
        if !self.propagate() {
            return Ok(witness);
        }
        for j in 0..self.c.n {
            if self.val[j] != UNFIXED {
                continue;
            }
            let zero_ok = !witness[j] || {
                let mark = self.trail.len();
                self.assign(j, false);
                let found = self.dfs_feasible()?;
                if found {
                    witness = self.solution();
                }
                self.undo_to(mark);
                found
            };
            self.assign(j, !zero_ok);
            self.propagate();
        }
        Ok(self.solution())
    }

    pub(super) fn optimize(&mut self) -> Result<Option<(i64, Vec<bool>)>, SolverError> {
        self.branch_and_bound()?;
        let Some((value, witness)) = self.best.take() else {
            return Ok(None);
        };
        let floored = self.c.with_objective_floor(value);
        let mut second = Engine::new(&floored, &self.cfg, self.started);
        second.nodes = self.nodes;
        second.target = Some(value);
        let result = second.lex_min(witness);
        self.nodes = second.nodes;
        self.propagations += second.propagations;
        Ok(Some((value, result?)))
    }
}
