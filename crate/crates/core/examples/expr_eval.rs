//! Parsing and evaluating the expression language used in config files.

use indefinite_bvp::expr::Expr;

fn main() {
    let g = Expr::parse("max(0, 100*s*atan(abs(s)))", "s").unwrap();
    println!("g(s) = {g}");
    for s in [-1.0, 0.0, 0.5, 1.0, 10.0] {
        println!("  g({s}) = {}", g.eval(s).unwrap());
    }

    let a = Expr::parse("sin(3*pi*x)", "x").unwrap();
    println!("a(1/6) = {}", a.eval(1.0 / 6.0).unwrap());

    for bad in ["sin(", "2 $ 3", "sin(x)", "max(1)", "log(x)"] {
        match Expr::parse(bad, "s") {
            Ok(e) => println!("{bad:>8}: parses, eval(0) -> {:?}", e.eval(0.0)),
            Err(e) => println!("{bad:>8}: {e}"),
        }
    }
}
