//! Degree bookkeeping over hump subsets: deg = (-1)^{#S} and the
//! alternating subset sums.

use std::time::Instant;

use indefinite_bvp::multiplicity::{degree_bookkeeping_check, nonempty_subsets, predicted_degree};

fn main() {
    for s in nonempty_subsets(3) {
        println!("{s:<8} degree {:+}", predicted_degree(s));
    }
    for n in [1, 2, 5, 10, 16] {
        let start = Instant::now();
        let ok = degree_bookkeeping_check(n);
        println!("n = {n:>2}: {} ({:.2?}), lower bound 2^n - 1 = {}", if ok { "exact" } else { "FAILED" }, start.elapsed(), (1u64 << n) - 1);
    }
}
