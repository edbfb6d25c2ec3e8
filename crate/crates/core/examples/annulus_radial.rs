//! Radial positive solutions on an annulus via the change of variable
//! t = h(r), mapped back to v(r).

use std::f64::consts::E;

use indefinite_bvp::eigen::HypothesisOptions;
use indefinite_bvp::expr::Expr;
use indefinite_bvp::multiplicity::{run_experiment, RPolicy};
use indefinite_bvp::radial::{back_map, AnnulusProblem};
use indefinite_bvp::shooting::{ShootingOptions, SlopeRange};

fn run(ap: &AnnulusProblem, d_max: f64) -> indefinite_bvp::Result<()> {
    let rd = ap.radial_decomposition(1e-12, 4096)?;
    let p = ap.transform_with(&rd)?;
    let opts = ShootingOptions::default();
    let rep = run_experiment(&p, SlopeRange::new(0.0, d_max, 1000)?, RPolicy::default(), &HypothesisOptions::default(), &opts)?;
    let (r1, r2) = ap.radii();
    println!("N = {}, annulus ({r1}, {r2:.6}), L = h(R2) = {:.6}, humps {}", ap.dim(), p.length(), rd.n());
    for sol in &rep.solutions {
        let v = back_map(ap, &p, &rd.breakpoints(), sol, &opts)?;
        let peak = v.samples.iter().max_by(|a, b| a.v.total_cmp(&b.v)).unwrap();
        println!(
            "  slope {:.9}  signature {}  max v = {:.6} at r = {:.4}  radial residual {:.1e}",
            sol.slope,
            sol.signature.map(|s| s.to_string()).unwrap_or_default(),
            peak.v,
            peak.r,
            v.residual
        );
    }
    Ok(())
}

fn main() -> indefinite_bvp::Result<()> {
    let cube = Expr::parse("s^3", "s")?;
    run(&AnnulusProblem::new(2, 1.0, E, Expr::parse("1", "r")?, 1.0, cube)?, 50.0)?;

    let g = Expr::parse("max(0, 100*s*atan(abs(s)))", "s")?;
    let a = Expr::parse("sin(3*pi*(r - 1))", "r")?;
    run(&AnnulusProblem::new(3, 1.0, 2.0, a, 1.0, g)?, 20.0)
}
