//! Positive solutions of the Dirichlet problem
//! `u'' + a_mu(x) g(u) = 0`, `u(0) = u(L) = 0`, with a sign-changing
//! weight `a_mu = a^+ - mu a^-`.
//!
//! The crate finds positive solutions by shooting, validates them,
//! classifies them by the humps of `a` on which they are large, and
//! checks the eigenvalue conditions under which at least `2^n - 1`
//! positive solutions are expected (`n` the number of positive humps).
//!
//! - [`expr`]: expression language for `a(x)` and `g(s)`.
//! - [`weights`]: `a_mu` and its hump decomposition.
//! - [`eigen`]: first weighted Dirichlet eigenvalues, growth checks.
//! - [`shooting`]: integration, root isolation, solution validation.
//! - [`multiplicity`]: signatures, degree bookkeeping, `mu` sweeps.
//! - [`radial`]: annulus problems reduced to one dimension.
//! - [`cli`]: config files, reports, and the `ibvp` command.
//!
//! See `examples/` for one runnable program per capability.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod eigen;
pub mod error;
pub mod expr;
pub mod fd;
pub mod multiplicity;
pub mod ode;
pub mod radial;
pub mod report;
pub mod shooting;
pub mod weights;

pub use error::{Error, Result};
pub use expr::{Expr, RealFn};
pub use shooting::{Problem, ShootingOptions, SlopeRange, Solution};
pub use weights::{Decomposition, WeightFunction};

pub mod figure1 {
    //! The two-hump reference problem: `a(x) = sin(3πx)` on `[0, 1]`,
    //! `mu = 0.5`, `g(s) = max{0, 100 s atan|s|}`, slopes in `(0, 5]`.

    use crate::error::Result;
    use crate::expr::Expr;
    use crate::shooting::{Problem, SlopeRange};
    use crate::weights::{decompose, WeightFunction, DEFAULT_GRID, DEFAULT_SIGN_TOL};

    pub const WEIGHT: &str = "sin(3*pi*x)";
    pub const NONLINEARITY: &str = "max(0, 100*s*atan(abs(s)))";
    pub const MU: f64 = 0.5;
    pub const LENGTH: f64 = 1.0;
    pub const D_MAX: f64 = 5.0;
    pub const GRID: usize = 500;

    pub fn problem_with_mu(mu: f64) -> Result<Problem> {
        let w = WeightFunction::from_expr(Expr::parse(WEIGHT, "x")?, mu, LENGTH)?;
        let d = decompose(&w, DEFAULT_SIGN_TOL, DEFAULT_GRID)?;
        Problem::new(w, d, Expr::parse(NONLINEARITY, "s")?)
    }

    pub fn problem() -> Result<Problem> {
        problem_with_mu(MU)
    }

    pub fn slopes() -> SlopeRange {
        SlopeRange {
            min: 0.0,
            max: D_MAX,
            grid: GRID,
        }
    }
}
