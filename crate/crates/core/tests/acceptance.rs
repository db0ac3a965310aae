//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use certsched_core::bench::{sweep_constellation, sweep_orders, BenchConfig, CONSTELLATION, QUICK_ORDERS};
use certsched_core::explain::{ExplainConfig, ExplainContext, WhyNot};
use certsched_core::model::{build_model, force_order, ObjectiveWeights};
use certsched_core::scenario::{
    apply_feasibility_filters, canonical_scenario, generate_synthetic, FilteredInstance, SyntheticParams,
};
use certsched_core::solver::{brute_force_solve, solve, SolverConfig};
use certsched_core::verify::{check_soundness, check_stability, collect_why_not, run_full_evaluation, EvalConfig};

const CANONICAL_LIMIT_S: f64 = 30.0;
const CORE_MAX: usize = 3;
const CORE_MEAN_MAX: f64 = 2.5;
const FUZZ_SOUNDNESS: usize = 50;
const FUZZ_STABILITY: usize = 10;
const ORACLE_INSTANCES: usize = 100;
const ORACLE_MAX_VARS: usize = 24;
const ORACLE_LIMIT_S: f64 = 60.0;
const QUICK_SWEEP_LIMIT_S: f64 = 600.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn canonical() -> FilteredInstance {
    apply_feasibility_filters(&canonical_scenario(), 200)
}

fn fuzz_instance(seed: u64) -> FilteredInstance {
    let p = SyntheticParams {
        horizon_s: 4 * 3600,
        ..SyntheticParams::sized(3, 2, 6)
    };
    apply_feasibility_filters(&generate_synthetic(&p, seed).expect("fuzz instance"), 300)
}

fn canonical_profile() -> Outcome {
    let t = Instant::now();
    let r = run_full_evaluation(&canonical(), &EvalConfig::default()).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let got = (r.n_scheduled, r.n_tradeoffs, r.n_certificates);
    let detail = format!("scheduled/trade-off/infeasible = {got:?}, {secs:.2}s");
    if got == (1, 2, 7) && secs < CANONICAL_LIMIT_S {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn canonical_soundness() -> Outcome {
    let r = run_full_evaluation(&canonical(), &EvalConfig { seeds: vec![], ..EvalConfig::default() })
        .map_err(|e| e.to_string())?;
    let s = r.soundness;
    let detail = format!("{}/{} cited constraints", s.passed, s.total);
    if s.all() && s.total > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fuzzed_soundness() -> Outcome {
    let cfg = ExplainConfig::default();
    let (mut passed, mut total, mut certs) = (0, 0, 0);
    for seed in 0..FUZZ_SOUNDNESS as u64 {
        let ctx = ExplainContext::new(fuzz_instance(seed), cfg.clone()).map_err(|e| e.to_string())?;
        for (w, _) in collect_why_not(&ctx, true).map_err(|e| e.to_string())? {
            if let WhyNot::Infeasibility(c) = w {
                let m_a = force_order(&ctx.model, &c.order_id, true).map_err(|e| e.to_string())?;
                let r = check_soundness(&c, &m_a, &cfg.solver).map_err(|e| e.to_string())?;
                passed += r.passed;
                total += r.total;
                certs += 1;
            }
        }
    }
    let detail = format!("{passed}/{total} over {certs} certificates on {FUZZ_SOUNDNESS} instances");
    if passed == total && certs > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn core_compactness() -> Outcome {
    let r = run_full_evaluation(&canonical(), &EvalConfig { seeds: vec![], ..EvalConfig::default() })
        .map_err(|e| e.to_string())?;
    let c = r.core_size;
    let detail = format!("max {}, mean {:.2}, median {:.1}", c.max, c.mean, c.median);
    if c.n == 7 && c.max <= CORE_MAX && c.mean <= CORE_MEAN_MAX {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn counterfactual() -> Outcome {
    let r = run_full_evaluation(&canonical(), &EvalConfig { seeds: vec![], ..EvalConfig::default() })
        .map_err(|e| e.to_string())?;
    let c = r.counterfactual;
    let detail = format!("{}/{}", c.passed, c.total);
    if c.all() && c.total == 7 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn stability() -> Outcome {
    let seeds: Vec<u64> = (0..8).collect();
    let cfg = ExplainConfig::default();
    let r = check_stability(&canonical(), &seeds, &cfg).map_err(|e| e.to_string())?;
    let mut fuzz_min: f64 = 1.0;
    for seed in 0..FUZZ_STABILITY as u64 {
        let f = check_stability(&fuzz_instance(1000 + seed), &seeds, &cfg).map_err(|e| e.to_string())?;
        fuzz_min = fuzz_min.min(f.min);
    }
    let detail = format!(
        "canonical {} pairs min {:.3}; {FUZZ_STABILITY} fuzzed min {fuzz_min:.3}",
        r.pairs.len(),
        r.min
    );
    if r.pairs.len() == 28 && r.min == 1.0 && fuzz_min == 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn baseline_failure_modes() -> Outcome {
    let r = run_full_evaluation(&canonical(), &EvalConfig { seeds: vec![], ..EvalConfig::default() })
        .map_err(|e| e.to_string())?;
    let b = r.baseline;
    let detail = format!(
        "conjunctions {}, baseline incomplete on {}, non-causal in {}/{} orders",
        b.conjunction_orders, b.baseline_incomplete_on_conjunctions, b.orders_with_noncausal, b.n_orders
    );
    if b.conjunction_orders == 3 && b.baseline_incomplete_on_conjunctions == 3 && b.orders_with_noncausal >= 2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let weights = ObjectiveWeights::default();
    let cfg = SolverConfig::default();
    let (mut checked, mut mismatches, mut seed) = (0, 0, 0u64);
    let mut max_vars = 0;
    while checked < ORACLE_INSTANCES && seed < 10 * ORACLE_INSTANCES as u64 {
        let p = SyntheticParams {
            horizon_s: 3 * 3600,
            ..SyntheticParams::sized(2, 1, 4)
        };
        seed += 1;
        let sc = generate_synthetic(&p, seed).map_err(|e| e.to_string())?;
        let m = build_model(&apply_feasibility_filters(&sc, 300), &weights);
        if m.vars.len() > ORACLE_MAX_VARS || m.vars.is_empty() {
            continue;
        }
        max_vars = max_vars.max(m.vars.len());
        let fast = solve(&m, &cfg).map_err(|e| e.to_string())?;
        let brute = brute_force_solve(&m).map_err(|e| e.to_string())?;
        if fast.status != brute.status || fast.objective_milli != brute.objective_milli {
            mismatches += 1;
        }
        checked += 1;
    }
    let secs = t.elapsed().as_secs_f64();
    let detail = format!("{checked} instances (max {max_vars} vars), {mismatches} mismatches, {secs:.2}s");
    if checked >= ORACLE_INSTANCES && mismatches == 0 && secs < ORACLE_LIMIT_S {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scalability_orders() -> Outcome {
    let t = Instant::now();
    let rows = sweep_orders(&QUICK_ORDERS, &BenchConfig::default()).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let shape: Vec<String> = rows
        .iter()
        .map(|r| format!("{}: solve {:.0}ms extract {:.0}ms", r.value, r.solve_ms, r.total_extract_ms))
        .collect();
    let detail = format!("{secs:.1}s; {}", shape.join(", "));
    if secs < QUICK_SWEEP_LIMIT_S && rows.iter().all(|r| r.total_extract_ms > r.solve_ms) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scalability_constellation() -> Outcome {
    let rows = sweep_constellation(&CONSTELLATION, &BenchConfig::default()).map_err(|e| e.to_string())?;
    let certs: Vec<usize> = rows.iter().map(|r| r.n_certificates).collect();
    let detail = format!("certificates over {CONSTELLATION:?} satellites: {certs:?}");
    if certs.windows(2).all(|w| w[1] <= w[0]) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mis_call_budget() -> Outcome {
    let ctx = ExplainContext::new(canonical(), ExplainConfig::default()).map_err(|e| e.to_string())?;
    let mut worst = (0, 0);
    let mut ok = true;
    let mut n = 0;
    for (w, _) in collect_why_not(&ctx, false).map_err(|e| e.to_string())? {
        if let WhyNot::Infeasibility(c) = w {
            n += 1;
            ok &= c.checks_log.len() <= c.n_candidates;
            if c.checks_log.len() >= worst.0 {
                worst = (c.checks_log.len(), c.n_candidates);
            }
        }
    }
    let detail = format!("{n} certificates, largest loop {} checks for {} candidates", worst.0, worst.1);
    if ok && n == 7 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn both(a: Outcome, b: Outcome) -> Outcome {
    match (a, b) {
        (Ok(a), Ok(b)) => Ok(format!("{a}; {b}")),
        (Ok(a) | Err(a), Ok(b) | Err(b)) => Err(format!("{a}; {b}")),
    }
}

fn soundness() -> Outcome {
    both(canonical_soundness(), fuzzed_soundness())
}

fn scalability() -> Outcome {
    both(scalability_orders(), scalability_constellation())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("canonical profile", canonical_profile),
        ("soundness", soundness),
        ("core compactness", core_compactness),
        ("counterfactual validity", counterfactual),
        ("stability", stability),
        ("baseline failure modes", baseline_failure_modes),
        ("oracle equivalence", oracle_equivalence),
        ("scalability shape", scalability),
        ("mis call budget", mis_call_budget),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
