use proptest::prelude::*;

use super::*;
use crate::model::{build_model, force_order, ConstraintKind, ObjectiveWeights, Sense, Tag, TaggedConstraint, Term};
use crate::scenario::{apply_feasibility_filters, tiny_scenario};

fn vars(n: usize) -> Vec<VarRef> {
    (0..n).map(|i| VarRef::Y { pass: format!("v{i:02}") }).collect()
}

fn row(id: &str, terms: &[(usize, i64)], sense: Sense, rhs: i64) -> TaggedConstraint {
    TaggedConstraint {
        id: id.into(),
        tag: Tag::Structural,
        kind: ConstraintKind::UniqueAssignment,
        terms: terms.iter().map(|&(var, coef)| Term { var, coef }).collect(),
        sense,
        rhs,
        context: Default::default(),
    }
}

fn toy(n: usize, rows: Vec<TaggedConstraint>, obj: &[i64]) -> ScheduleModel {
    let objective = obj.iter().enumerate().map(|(var, &coef)| Term { var, coef }).collect();
    ScheduleModel::from_parts(vars(n), rows, objective, "toy")
}

fn tiny_weights() -> ObjectiveWeights {
    ObjectiveWeights { alpha_milli: 0, beta_milli: 10, lambda_milli: 100, mu_milli: 0, eta_milli: 0 }
}

fn tiny_model() -> ScheduleModel {
    build_model(&apply_feasibility_filters(&tiny_scenario(), 1000), &tiny_weights())
}

#[test]
fn unconstrained_picks_profitable_vars() {
    let m = toy(2, vec![], &[5, -3]);
    let r = solve(&m, &SolverConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_eq!(r.objective_milli, Some(5));
    assert_eq!(r.assignment, Some(Assignment(vec![true, false])));
    assert_eq!(check_feasibility(&m, &SolverConfig::default()).unwrap(), Feasibility::Feasible(Assignment::zeros(2)));
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let m = toy(1, vec![row("a", &[(0, 1)], Sense::Ge, 1), row("b", &[(0, 1)], Sense::Le, 0)], &[1]);
    assert_eq!(check_feasibility(&m, &SolverConfig::default()).unwrap(), Feasibility::Infeasible);
    assert_eq!(solve(&m, &SolverConfig::default()).unwrap().status, SolveStatus::Infeasible);
    assert_eq!(brute_force_solve(&m).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn tiny_instance_objective() {
    let m = tiny_model();
    assert_eq!(m.vars.len(), 7);
    // x1 + x2 + a1 + a2 - d = 10000 + 5000 + 10 + 10 - 100
    let r = solve(&m, &SolverConfig::default()).unwrap();
    assert_eq!(r.objective_milli, Some(14_920));
    let brute = brute_force_solve(&m).unwrap();
    assert_eq!(brute.objective_milli, Some(14_920));
    assert_eq!(brute.assignment, r.assignment);
    let s = Schedule::from_assignment(&m, r.assignment.as_ref().unwrap());
    assert!(s.is_scheduled("o1") && s.is_scheduled("o2"));
    assert!(s.downlinks.contains("q1"));
}

#[test]
fn tiny_all_ones_violations() {
    let m = tiny_model();
    let ones = Assignment(vec![true; m.vars.len()]);
    // both orders fill storage exactly and the downlink empties it
    let e = evaluate(&m, &ones).unwrap();
    assert!(e.feasible, "{:?}", e.violated);
    assert_eq!(e.objective_milli, 14_920);

    let mut sc = tiny_scenario();
    sc.satellites[0].min_slew_s = 50;
    sc.satellites[0].storage_capacity_mb = 1500;
    let m = build_model(&apply_feasibility_filters(&sc, 1000), &tiny_weights());
    let e = evaluate(&m, &Assignment(vec![true; m.vars.len()])).unwrap();
    assert_eq!(e.violated, vec!["storage_ub/S1/k=0002", "temporal/p1/p2"]);

    let zeros = evaluate(&m, &Assignment::zeros(m.vars.len())).unwrap();
    assert!(zeros.feasible);
    assert_eq!(zeros.objective_milli, 0);
}

#[test]
fn partial_assignment_rejected() {
    let m = tiny_model();
    assert_eq!(
        evaluate(&m, &Assignment(vec![true])),
        Err(SolverError::PartialAssignment { expected: 7, got: 1 })
    );
}

#[test]
fn brute_force_refuses_large_models() {
    let m = toy(26, vec![], &[0; 26]);
    assert_eq!(
        brute_force_solve(&m).unwrap_err(),
        SolverError::TooManyVariables { max: 25, actual: 26 }
    );
}

#[test]
fn forced_exclusion_changes_optimum() {
    let m = force_order(&tiny_model(), "o1", false).unwrap();
    let r = solve(&m, &SolverConfig::default()).unwrap();
    // o2 alone cannot keep storage non-negative through the 2048 MB downlink
    assert_eq!(r.objective_milli, Some(0));
}

#[test]
fn node_limit_is_reported_distinctly() {
    let n = 20;
    let rows = vec![row("cap", &(0..n).map(|j| (j, 3 + j as i64 % 5)).collect::<Vec<_>>(), Sense::Le, 25)];
    let obj: Vec<i64> = (0..n).map(|j| 10 + (j as i64 * 7) % 13).collect();
    let m = toy(n, rows, &obj);
    let cfg = SolverConfig { node_limit: Some(3), ..SolverConfig::default() };
    assert!(matches!(solve(&m, &cfg), Err(SolverError::LimitExceeded { .. })));
}

#[test]
fn masked_feasibility_ignores_disabled_rows() {
    let m = toy(1, vec![row("a", &[(0, 1)], Sense::Ge, 1), row("b", &[(0, 1)], Sense::Le, 0)], &[1]);
    let f = check_feasibility_masked(&m, Some(&[true, false]), &SolverConfig::default()).unwrap();
    assert_eq!(f, Feasibility::Feasible(Assignment(vec![true])));
}

fn arb_model() -> impl Strategy<Value = ScheduleModel> {
    (1usize..=12).prop_flat_map(|n| {
        let term = (0..n, -4i64..=4);
        let r = (prop::collection::vec(term, 1..=5), 0u8..3, -3i64..=6);
        (
            Just(n),
            prop::collection::vec(r, 0..=8),
            prop::collection::vec(-10i64..=10, n),
        )
            .prop_map(|(n, rows, obj)| {
                let rows = rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, (terms, s, rhs))| {
                        let sense = [Sense::Le, Sense::Eq, Sense::Ge][s as usize];
                        row(&format!("r{i:02}"), &terms, sense, rhs)
                    })
                    .collect();
                toy(n, rows, &obj)
            })
    })
}

proptest! {
    #[test]
    fn matches_brute_force(m in arb_model(), seed in 0u64..4) {
        let cfg = SolverConfig::with_seed(seed);
        let fast = solve(&m, &cfg).unwrap();
        let brute = brute_force_solve(&m).unwrap();
        prop_assert_eq!(fast.status, brute.status);
        prop_assert_eq!(fast.objective_milli, brute.objective_milli);
        prop_assert_eq!(&fast.assignment, &brute.assignment);
        if let Some(a) = &fast.assignment {
            let e = evaluate(&m, a).unwrap();
            prop_assert!(e.feasible);
            prop_assert_eq!(Some(e.objective_milli), fast.objective_milli);
        }
        let feas = check_feasibility(&m, &cfg).unwrap();
        prop_assert_eq!(feas.is_feasible(), brute.status == SolveStatus::Optimal);
        if let Some(w) = feas.witness() {
            prop_assert!(evaluate(&m, w).unwrap().feasible);
        }
    }
}
