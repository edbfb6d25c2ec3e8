//! Two humps of `sin(3πx)` at `mu = 0.5`: three positive solutions with
//! signatures {1}, {2} and {1,2}.

use std::time::Instant;

use indefinite_bvp::eigen::HypothesisOptions;
use indefinite_bvp::figure1;
use indefinite_bvp::multiplicity::{run_experiment, RPolicy};
use indefinite_bvp::shooting::residual_profile;
use indefinite_bvp::ShootingOptions;

fn main() -> indefinite_bvp::Result<()> {
    let p = figure1::problem()?;
    let start = Instant::now();
    let report = run_experiment(
        &p,
        figure1::slopes(),
        RPolicy::default(),
        &HypothesisOptions::default(),
        &ShootingOptions::default(),
    )?;
    println!("humps: {:?}", p.decomposition().humps().collect::<Vec<_>>());
    println!("r = {:.6e}, R = {:.6e}", report.r_used, report.big_r_used);
    for sol in &report.solutions {
        let worst = residual_profile(&p, sol)?
            .into_iter()
            .map(|(_, r)| r)
            .fold(0.0, f64::max);
        println!(
            "d = {:.12}  |u(L)| = {:.2e}  sup = {:.6}  signature = {}  residual = {:.2e}",
            sol.slope,
            sol.boundary_residual,
            sol.sup_norm,
            sol.signature.map(|s| s.to_string()).unwrap_or_default(),
            worst
        );
    }
    for rej in &report.rejected {
        println!("rejected d = {:.12}: {:?}", rej.slope, rej.reasons);
    }
    if let Some(h) = &report.hypotheses {
        println!(
            "lambda0 = {:.6}, lambda1 = {:?}, g0 ~ {:.3e}, g_inf ~ {:.3e}",
            h.lambda0, h.lambda1, h.g0_estimate, h.ginf_estimate
        );
    }
    println!(
        "count = {}, lower bound = {}, met = {}, elapsed = {:.2?}",
        report.count,
        report.predicted_lower_bound,
        report.prediction_met,
        start.elapsed()
    );
    Ok(())
}
