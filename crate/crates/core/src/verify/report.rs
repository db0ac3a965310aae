use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_counterfactual, check_soundness, check_stability_with, collect_why_not, explanation_set, compare_baseline, CounterfactualResult,
    OrderComparison, SoundnessReport, StabilityReport, VerifyError,
};
use crate::baseline::posthoc_explain;
use crate::explain::{ExplainConfig, ExplainContext, InfeasibilityCertificate, WhyNot};
use crate::model::force_order;
use crate::scenario::FilteredInstance;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub explain: ExplainConfig,
    /// Seeds for the stability check; fewer than two skips it.
    pub seeds: Vec<u64>,
    pub parallel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            explain: ExplainConfig::default(),
            seeds: (0..8).collect(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub passed: usize,
    pub total: usize,
}

impl Ratio {
    pub fn all(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreSizeStats {
    pub n: usize,
    pub total: usize,
    pub mean: f64,
    pub median: f64,
    pub max: usize,
}

impl CoreSizeStats {
    pub fn from_sizes(sizes: &[usize]) -> Self {
        let mut s = sizes.to_vec();
        s.sort_unstable();
        let n = s.len();
        let total: usize = s.iter().sum();
        let median = match n {
            0 => 0.0,
            _ if n % 2 == 1 => s[n / 2] as f64,
            _ => (s[n / 2 - 1] + s[n / 2]) as f64 / 2.0,
        };
        CoreSizeStats {
            n,
            total,
            mean: if n == 0 { 0.0 } else { total as f64 / n as f64 },
            median,
            max: s.last().copied().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub n_orders: usize,
    pub orders_with_noncausal: usize,
    pub noncausal_attributions: usize,
    pub total_attributions: usize,
    pub conjunction_orders: usize,
    pub baseline_incomplete_on_conjunctions: usize,
    pub orders: Vec<OrderComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub solve_ms: f64,
    /// Wall time for all why-not explanations.
    pub extract_ms: f64,
    /// Sum of per-order explanation times.
    pub extract_cpu_ms: f64,
    pub soundness_ms: f64,
    pub counterfactual_ms: f64,
    pub stability_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub scenario: String,
    pub n_orders: usize,
    pub n_scheduled: usize,
    pub n_certificates: usize,
    pub n_tradeoffs: usize,
    pub n_prefiltered: usize,
    pub n_constraints: usize,
    pub objective_milli: i64,
    pub status: BTreeMap<String, String>,
    pub certificates: Vec<InfeasibilityCertificate>,
    pub soundness: Ratio,
    pub soundness_detail: Vec<SoundnessReport>,
    pub counterfactual: Ratio,
    pub counterfactual_detail: Vec<CounterfactualResult>,
    pub stability: Option<StabilityReport>,
    pub core_size: CoreSizeStats,
    pub baseline: BaselineComparison,
    pub timings: Timings,
    pub all_passed: bool,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

/// Solves, explains every unscheduled order and runs every check.
pub fn run_full_evaluation(fi: &FilteredInstance, cfg: &EvalConfig) -> Result<EvaluationReport, VerifyError> {
    let start = Instant::now();
    let ctx = ExplainContext::new(fi.clone(), cfg.explain.clone())?;
    evaluate_context(&ctx, cfg, start)
}

/// Runs every check against an already solved context. Stability re-solves
/// the context's own model, so extra forcing rows are kept.
pub fn evaluate_solved(ctx: &ExplainContext, cfg: &EvalConfig) -> Result<EvaluationReport, VerifyError> {
    evaluate_context(ctx, cfg, Instant::now())
}

fn evaluate_context(ctx: &ExplainContext, cfg: &EvalConfig, start: Instant) -> Result<EvaluationReport, VerifyError> {
    let fi = &ctx.fi;

    let t = Instant::now();
    let answers = collect_why_not(ctx, cfg.parallel)?;
    let extract_ms = ms(t);
    let extract_cpu_ms = answers.iter().map(|(_, ms)| ms).sum();

    let mut status: BTreeMap<String, String> = ctx
        .schedule
        .assignments
        .keys()
        .map(|o| (o.clone(), "scheduled".to_string()))
        .collect();
    let mut certificates = Vec::new();
    for (w, _) in &answers {
        status.insert(w.order_id().to_string(), w.status().as_str().to_string());
        if let WhyNot::Infeasibility(c) = w {
            certificates.push(c.clone());
        }
    }
    let count = |s: &str| status.values().filter(|v| *v == s).count();

    let t = Instant::now();
    let soundness_one = |c: &InfeasibilityCertificate| {
        let m_a = force_order(&ctx.model, &c.order_id, true).map_err(crate::explain::ExplainError::from)?;
        check_soundness(c, &m_a, &ctx.cfg.solver)
    };
    let soundness_detail: Vec<SoundnessReport> = if cfg.parallel {
        certificates.par_iter().map(soundness_one).collect::<Result<_, _>>()?
    } else {
        certificates.iter().map(soundness_one).collect::<Result<_, _>>()?
    };
    let soundness_ms = ms(t);

    let t = Instant::now();
    let counterfactual_detail: Vec<CounterfactualResult> = if cfg.parallel {
        certificates.par_iter().map(|c| check_counterfactual(ctx, c)).collect::<Result<_, _>>()?
    } else {
        certificates.iter().map(|c| check_counterfactual(ctx, c)).collect::<Result<_, _>>()?
    };
    let counterfactual_ms = ms(t);

    let t = Instant::now();
    let stability = if cfg.seeds.len() >= 2 {
        Some(check_stability_with(fi, &cfg.seeds, |fi, seed| {
            let mut explain = cfg.explain.clone();
            explain.solver.seed = seed;
            let c = ExplainContext::with_model(fi.clone(), ctx.model.clone(), explain)?;
            Ok(explanation_set(&c)?)
        })?)
    } else {
        None
    };
    let stability_ms = ms(t);

    let baseline_expl = certificates
        .iter()
        .map(|c| posthoc_explain(&ctx.fi, &ctx.schedule, &c.order_id))
        .collect::<Result<Vec<_>, _>>()?;
    let baseline = compare_baseline(&certificates, &baseline_expl)?;

    let soundness = Ratio {
        passed: soundness_detail.iter().map(|r| r.passed).sum(),
        total: soundness_detail.iter().map(|r| r.total).sum(),
    };
    let counterfactual = Ratio {
        passed: counterfactual_detail.iter().filter(|r| r.passed).count(),
        total: counterfactual_detail.len(),
    };
    let sizes: Vec<usize> = certificates.iter().map(|c| c.mis.len()).collect();
    let all_passed = soundness.all() && counterfactual.all() && stability.as_ref().is_none_or(|s| s.min >= 1.0);

    Ok(EvaluationReport {
        scenario: fi.scenario.name.clone(),
        n_orders: fi.scenario.orders.len(),
        n_scheduled: ctx.schedule.assignments.len(),
        n_certificates: certificates.len(),
        n_tradeoffs: count("tradeoff"),
        n_prefiltered: count("prefiltered"),
        n_constraints: ctx.model.constraints.len(),
        objective_milli: ctx.objective(),
        status,
        core_size: CoreSizeStats::from_sizes(&sizes),
        certificates,
        soundness,
        soundness_detail,
        counterfactual,
        counterfactual_detail,
        stability,
        baseline,
        timings: Timings {
            solve_ms: ctx.solution.stats.wall_ms,
            extract_ms,
            extract_cpu_ms,
            soundness_ms,
            counterfactual_ms,
            stability_ms,
            total_ms: ms(start),
        },
        all_passed,
    })
}

impl EvaluationReport {
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Evaluation: {}\n", self.scenario);
        let _ = writeln!(
            s,
            "{} orders, {} scheduled, {} infeasible, {} trade-off, {} prefiltered; {} constraints; objective {}\n",
            self.n_orders,
            self.n_scheduled,
            self.n_certificates,
            self.n_tradeoffs,
            self.n_prefiltered,
            self.n_constraints,
            self.objective_milli
        );
        let _ = writeln!(s, "| check | result |\n|---|---|");
        let _ = writeln!(s, "| soundness | {}/{} |", self.soundness.passed, self.soundness.total);
        let _ = writeln!(s, "| counterfactual | {}/{} |", self.counterfactual.passed, self.counterfactual.total);
        match &self.stability {
            Some(st) => {
                let _ = writeln!(s, "| stability | {} pairs, min {:.3}, mean {:.3} |", st.pairs.len(), st.min, st.mean);
            }
            None => {
                let _ = writeln!(s, "| stability | skipped |");
            }
        }
        let c = &self.core_size;
        let _ = writeln!(
            s,
            "| core size | mean {:.2}, median {:.1}, max {} over {} certificates |",
            c.mean, c.median, c.max, c.n
        );
        let b = &self.baseline;
        let _ = writeln!(
            s,
            "| baseline | {} of {} attributions non-causal ({} orders); incomplete on {} of {} conjunctions |",
            b.noncausal_attributions,
            b.total_attributions,
            b.orders_with_noncausal,
            b.baseline_incomplete_on_conjunctions,
            b.conjunction_orders
        );
        let _ = writeln!(s, "\n## Certificates\n\n| order | kinds | constraints |\n|---|---|---|");
        for cert in &self.certificates {
            let _ = writeln!(s, "| {} | {} | {} |", cert.order_id, cert.kinds.join(", "), cert.mis.join(", "));
        }
        let t = &self.timings;
        let _ = writeln!(
            s,
            "\n## Timings (ms)\n\nsolve {:.1}, extract {:.1} (cpu {:.1}), soundness {:.1}, counterfactual {:.1}, stability {:.1}, total {:.1}",
            t.solve_ms, t.extract_ms, t.extract_cpu_ms, t.soundness_ms, t.counterfactual_ms, t.stability_ms, t.total_ms
        );
        let _ = writeln!(s, "\nall checks passed: {}", self.all_passed);
        s
    }
}
