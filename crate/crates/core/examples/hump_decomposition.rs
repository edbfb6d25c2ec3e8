//! Hump decomposition of sign-changing weights, including the merge of
//! flat stretches into neighbouring humps.

use std::f64::consts::PI;

use indefinite_bvp::expr::Expr;
use indefinite_bvp::weights::{decompose, validate_decomposition, Decomposition, WeightFunction};

fn show(name: &str, w: &WeightFunction) {
    let d = decompose(w, 1e-12, 4096).unwrap();
    println!("{name}: {} hump(s)", d.n());
    for (i, (s, t)) in d.humps().enumerate() {
        println!("  I_{} = [{s:.12}, {t:.12}]", i + 1);
    }
    for g in d.gaps() {
        println!("  gap  ({:.12}, {:.12})", g.start, g.end);
    }
}

fn main() {
    let a = Expr::parse("sin(3*pi*x)", "x").unwrap();
    show("sin(3 pi x) on [0, 1]", &WeightFunction::from_expr(a, 0.5, 1.0).unwrap());

    let a = Expr::parse("x^2 - 0.25", "x").unwrap();
    show("x^2 - 1/4 on [0, 1]", &WeightFunction::from_expr(a, 1.0, 1.0).unwrap());

    let flat = |x: f64| {
        if x <= PI || (3.0 * PI..=4.0 * PI).contains(&x) || x >= 6.0 * PI {
            x.sin()
        } else {
            0.0
        }
    };
    show("sin x with flat stretches on [0, 7 pi]", &WeightFunction::new(flat, 1.0, 7.0 * PI).unwrap());

    let w = WeightFunction::from_expr(Expr::parse("sin(3*pi*x)", "x").unwrap(), 1.0, 1.0).unwrap();
    let wrong = Decomposition::new(vec![0.0, 2.0 / 3.0], vec![0.5, 1.0], 1.0).unwrap();
    let report = validate_decomposition(&w, &wrong, 1e-12);
    println!("user-supplied [0, 0.5] u [2/3, 1]: passed = {}, {:?}", report.passed, report.violation);
}
