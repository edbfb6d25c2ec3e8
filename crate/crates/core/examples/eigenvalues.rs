//! Weighted Dirichlet eigenvalues by Prüfer-angle bisection, and the
//! growth conditions on g compared against them.

use std::f64::consts::PI;

use indefinite_bvp::eigen::{check_hypotheses, first_eigenvalue, EigenProblem, HypothesisOptions};
use indefinite_bvp::figure1;
use indefinite_bvp::weights::WeightFunction;

fn main() {
    for l in [1.0, 0.5, 1.0 / 3.0] {
        let p = EigenProblem::new(|_x: f64| 1.0, 0.0, l).unwrap();
        let lam = first_eigenvalue(&p, 1e-12).unwrap();
        println!("q = 1 on [0, {l:.4}]: lambda = {lam:.12} (pi^2/L^2 = {:.12})", (PI / l).powi(2));
    }

    // a step weight: 1 on [0, pi] except 0 near pi/2, -1 on (pi, 2 pi]
    for eps in [PI / 6.0, 0.01] {
        let step = move |x: f64| {
            if x > PI {
                -1.0
            } else if (x - PI / 2.0).abs() < eps {
                0.0
            } else {
                1.0
            }
        };
        let w = WeightFunction::new(step, 1.0, 2.0 * PI).unwrap();
        let split = EigenProblem::positive_part(&w, 0.0, PI / 2.0 - eps, vec![]).unwrap();
        let merged = EigenProblem::positive_part(&w, 0.0, PI, vec![PI / 2.0 - eps, PI / 2.0 + eps]).unwrap();
        println!(
            "eps = {eps:.4}: split hump {:.9}, merged [0, pi] {:.9}",
            first_eigenvalue(&split, 1e-12).unwrap(),
            first_eigenvalue(&merged, 1e-12).unwrap()
        );
    }

    let p = figure1::problem().unwrap();
    let h = check_hypotheses(p.weight(), p.decomposition(), p.g(), &HypothesisOptions::default()).unwrap();
    println!("lambda0 = {:.10}, lambda1 = {:?}", h.lambda0, h.lambda1);
    println!("g0 ~ {:.3e} ({:?}), g_inf ~ {:.6} ({:?})", h.g0_estimate, h.small_verdict, h.ginf_estimate, h.large_verdict);
}
