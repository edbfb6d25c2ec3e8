//! Solution counts and signature coverage as the negative part of the
//! weight is scaled up.

use indefinite_bvp::eigen::HypothesisOptions;
use indefinite_bvp::figure1;
use indefinite_bvp::multiplicity::{resolve_r, sweep_mu, RPolicy};
use indefinite_bvp::shooting::{ShootingOptions, SlopeRange};

fn main() -> indefinite_bvp::Result<()> {
    let p = figure1::problem()?;
    let (r, _) = resolve_r(&p, RPolicy::default(), &HypothesisOptions::default())?;
    let mus = [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0];
    let sweep = sweep_mu(&p, &mus, SlopeRange::new(0.0, 10.0, 1000)?, r, &ShootingOptions::default())?;
    println!("r = {r:.6e}");
    for row in &sweep.rows {
        let sigs: Vec<String> = row.signatures.iter().map(|s| s.to_string()).collect();
        let slopes: Vec<String> = row.slopes.iter().map(|d| format!("{d:.6}")).collect();
        println!(
            "mu = {:<5} count = {}  full = {:<5}  signatures {:<18} slopes {}",
            row.mu,
            row.count,
            row.full_coverage,
            sigs.join(" "),
            slopes.join(" ")
        );
    }
    println!("smallest grid mu with full coverage: {:?}", sweep.mu_hat);
    Ok(())
}
