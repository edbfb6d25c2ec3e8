mod support;

use std::f64::consts::PI;

use indefinite_bvp::eigen::HypothesisOptions;
use indefinite_bvp::expr::Expr;
use indefinite_bvp::figure1;
use indefinite_bvp::multiplicity::{run_experiment, solve_all, RMode, RPolicy};
use indefinite_bvp::shooting::{integrate, isolate_roots, shoot_value, Problem, ShootingOptions, SlopeRange};
use indefinite_bvp::weights::{decompose, Decomposition, WeightFunction, DEFAULT_GRID, DEFAULT_SIGN_TOL};

use support::{figure1_forcing, shoot_rk4};

#[test]
fn figure1_trajectories_match_fixed_step_oracle() {
    let p = figure1::problem().unwrap();
    let opts = ShootingOptions::default();
    let roots = isolate_roots(&p, figure1::slopes(), &opts).unwrap();
    assert_eq!(roots.accepted.len(), 3);
    let f = figure1_forcing(0.5);
    for sol in &roots.accepted {
        // 60000 steps: kinks at 1/3 and 2/3 fall on nodes; output grid every 30 steps
        let oracle = shoot_rk4(&f, sol.slope, 1.0, 60_000);
        let mut gap = 0.0f64;
        for (j, s) in sol.trajectory.samples.iter().enumerate() {
            let (x, u, up) = oracle[30 * j];
            assert!((x - s.x).abs() < 1e-12);
            gap = gap.max((u - s.u).abs()).max((up - s.u_prime).abs() / 10.0);
        }
        assert!(gap < 1e-7, "slope {} differs from oracle by {gap:e}", sol.slope);
        assert!(oracle.last().unwrap().1.abs() < 1e-8);
    }
}

#[test]
fn shooting_value_brackets_every_root() {
    let p = figure1::problem().unwrap();
    let opts = ShootingOptions::default();
    let roots = isolate_roots(&p, figure1::slopes(), &opts).unwrap();
    for sol in &roots.accepted {
        let below = shoot_value(&p, sol.slope - 1e-6, &opts).unwrap();
        let above = shoot_value(&p, sol.slope + 1e-6, &opts).unwrap();
        assert!(below * above < 0.0, "no sign change around {}", sol.slope);
    }
    let changes = roots.scan.windows(2).filter(|w| (w[0].1 < 0.0) != (w[1].1 < 0.0)).count();
    assert_eq!(changes, 3);
}

#[test]
fn without_negative_part_a_solution_still_exists() {
    let p = figure1::problem_with_mu(0.0).unwrap();
    let rep = solve_all(&p, figure1::slopes(), 0.3, RMode::Empirical, &ShootingOptions::default()).unwrap();
    assert!(rep.count >= 1);
}

#[test]
fn linear_problem_has_no_positive_solution() {
    let w = WeightFunction::from_expr(Expr::parse("1", "x").unwrap(), 1.0, 1.0).unwrap();
    let d = decompose(&w, DEFAULT_SIGN_TOL, DEFAULT_GRID).unwrap();
    let p = Problem::new(w, d, Expr::parse("s", "s").unwrap()).unwrap();
    let rep = run_experiment(
        &p,
        SlopeRange::new(0.0, 5.0, 100).unwrap(),
        RPolicy::Explicit(0.1),
        &HypothesisOptions::default(),
        &ShootingOptions::default(),
    )
    .unwrap();
    assert_eq!(rep.count, 0);
    assert!(!rep.prediction_met);
    assert!(rep.notes.iter().any(|n| n.contains("hypotheses not verified")), "{:?}", rep.notes);
}

#[test]
fn single_hump_is_independent_of_mu() {
    let w = WeightFunction::from_expr(Expr::parse("sin(x)", "x").unwrap(), 1.0, PI).unwrap();
    let d = decompose(&w, DEFAULT_SIGN_TOL, DEFAULT_GRID).unwrap();
    assert_eq!(d.n(), 1);
    let p = Problem::new(w, d, Expr::parse("s^3", "s").unwrap()).unwrap();
    let slopes = SlopeRange::new(0.0, 10.0, 200).unwrap();
    let opts = ShootingOptions::default();
    let base = solve_all(&p, slopes, 0.01, RMode::Empirical, &opts).unwrap();
    assert!(base.count >= 1);
    for mu in [0.1, 1.0, 10.0] {
        let rep = solve_all(&p.with_mu(mu).unwrap(), slopes, 0.01, RMode::Empirical, &opts).unwrap();
        assert_eq!(rep.count, base.count);
        assert_eq!(rep.solutions[0].slope, base.solutions[0].slope);
    }
}

#[test]
fn coverage_lists_every_nonempty_subset() {
    let p = figure1::problem().unwrap();
    let rep = solve_all(&p, figure1::slopes(), 0.3, RMode::Empirical, &ShootingOptions::default()).unwrap();
    assert_eq!(rep.coverage.len(), 3);
    assert!(rep.solutions.iter().all(|s| s.signature.is_some_and(|g| !g.is_empty())));
    assert!(rep.big_r_used > rep.solutions.iter().map(|s| s.sup_norm).fold(0.0, f64::max));
}

#[test]
fn explicit_and_detected_decompositions_agree() {
    let p = figure1::problem().unwrap();
    let explicit = Decomposition::new(vec![0.0, 2.0 / 3.0], vec![1.0 / 3.0, 1.0], 1.0).unwrap();
    let q = Problem::new(p.weight().clone(), explicit, Expr::parse(figure1::NONLINEARITY, "s").unwrap()).unwrap();
    let opts = ShootingOptions::default();
    let a = isolate_roots(&p, figure1::slopes(), &opts).unwrap();
    let b = isolate_roots(&q, figure1::slopes(), &opts).unwrap();
    assert_eq!(a.accepted.len(), b.accepted.len());
    for (x, y) in a.accepted.iter().zip(&b.accepted) {
        assert!((x.slope - y.slope).abs() < 1e-9);
    }
}

#[test]
fn trajectory_reaches_the_end_exactly() {
    let p = figure1::problem().unwrap();
    let t = integrate(&p, 2.0, &ShootingOptions::default()).unwrap();
    assert_eq!(t.samples.len(), 2001);
    assert_eq!(t.samples.last().unwrap().x, 1.0);
    assert!(t.stats.accepted > 0);
}
