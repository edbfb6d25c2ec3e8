//! Radial solutions on an annulus `R1 < |x| < R2` in `R^N`.
//!
//! With `t = h(r) = ∫_{R1}^r ξ^{1-N} dξ` the radial equation
//! `v'' + (N-1)/r v' + A_mu(r) g(v) = 0` becomes
//! `u'' + r(t)^{2(N-1)} A_mu(r(t)) g(u) = 0` on `[0, h(R2)]`, which is
//! the one-dimensional problem handled by [`crate::shooting`].

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, RealFn, SharedFn};
use crate::fd;
use crate::shooting::{integrate_on, Problem, ShootingOptions, Solution, Termination};
use crate::weights::{decompose, Decomposition, WeightFunction};

/// `h(r) = ln(r/R1)` for `N = 2`, `(R1^{2-N} - r^{2-N})/(N-2)` otherwise.
pub fn h_map(dim: u32, r1: f64, r: f64) -> Result<f64> {
    if !(r >= r1) {
        return Err(Error::InvalidArgument(format!("r = {r} lies below R1 = {r1}")));
    }
    Ok(if dim == 2 {
        (r / r1).ln()
    } else {
        let k = dim as f64 - 2.0;
        (r1.powf(-k) - r.powf(-k)) / k
    })
}

/// Closed-form inverse of [`h_map`]. `length` is `h(R2)`.
pub fn h_inverse(dim: u32, r1: f64, length: f64, t: f64) -> Result<f64> {
    let slack = 1e-14 * length.max(1.0);
    if !(t >= -slack && t <= length + slack) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [0, {length}]")));
    }
    let t = t.clamp(0.0, length);
    Ok(if dim == 2 {
        r1 * t.exp()
    } else {
        let k = dim as f64 - 2.0;
        (r1.powf(-k) - k * t).powf(-1.0 / k)
    })
}

/// Dirichlet problem `-ΔU = A_mu(|x|) g(U)` on the annulus.
#[derive(Clone)]
pub struct AnnulusProblem {
    dim: u32,
    r1: f64,
    r2: f64,
    weight: SharedFn,
    weight_label: String,
    mu: f64,
    g: Expr,
}

impl std::fmt::Debug for AnnulusProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnnulusProblem")
            .field("dim", &self.dim)
            .field("r1", &self.r1)
            .field("r2", &self.r2)
            .field("weight", &self.weight_label)
            .field("mu", &self.mu)
            .field("g", &self.g.to_string())
            .finish()
    }
}

impl AnnulusProblem {
    pub fn new(dim: u32, r1: f64, r2: f64, weight: Expr, mu: f64, g: Expr) -> Result<Self> {
        let label = weight.to_string();
        Self::from_shared(dim, r1, r2, Arc::new(weight), label, mu, g)
    }

    pub fn from_shared(
        dim: u32,
        r1: f64,
        r2: f64,
        weight: SharedFn,
        weight_label: impl Into<String>,
        mu: f64,
        g: Expr,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {dim}")));
        }
        if !(r1 > 0.0 && r2 > r1 && r2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "annulus needs 0 < R1 < R2, got R1 = {r1}, R2 = {r2}"
            )));
        }
        Ok(AnnulusProblem {
            dim,
            r1,
            r2,
            weight,
            weight_label: weight_label.into(),
            mu,
            g,
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.r1, self.r2)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn g(&self) -> &Expr {
        &self.g
    }

    /// `L = h(R2)`.
    pub fn length(&self) -> f64 {
        h_map(self.dim, self.r1, self.r2).expect("R2 > R1")
    }

    pub fn h(&self, r: f64) -> Result<f64> {
        h_map(self.dim, self.r1, r)
    }

    pub fn r_of_t(&self, t: f64) -> Result<f64> {
        h_inverse(self.dim, self.r1, self.length(), t)
    }

    /// `A_mu(r)`.
    pub fn weight_at(&self, r: f64) -> Result<f64> {
        let a = self.weight.call(r)?;
        Ok(if a >= 0.0 { a } else { self.mu * a })
    }

    /// The radial weight shifted onto `[0, R2 - R1]`, used to find its
    /// humps.
    fn shifted_weight(&self) -> Result<WeightFunction> {
        let a = self.weight.clone();
        let r1 = self.r1;
        let shifted = move |rho: f64| a.call(r1 + rho).unwrap_or(f64::NAN);
        WeightFunction::new(shifted, self.mu, self.r2 - self.r1)
    }

    /// Hump decomposition of `A` in `r`.
    pub fn radial_decomposition(&self, sign_tol: f64, grid: usize) -> Result<Decomposition> {
        let d = decompose(&self.shifted_weight()?, sign_tol, grid)?;
        Decomposition::new(
            d.sigma().iter().map(|s| s + self.r1).collect(),
            d.tau().iter().map(|t| t + self.r1).collect(),
            self.r2,
        )
    }

    /// The equivalent one-dimensional problem on `[0, h(R2)]`. Humps are
    /// the images of the radial humps under `h`.
    pub fn transform(&self, sign_tol: f64, grid: usize) -> Result<Problem> {
        let rd = self.radial_decomposition(sign_tol, grid)?;
        self.transform_with(&rd)
    }

    /// [`AnnulusProblem::transform`] with an explicit radial decomposition.
    pub fn transform_with(&self, radial: &Decomposition) -> Result<Problem> {
        let len = self.length();
        let (dim, r1) = (self.dim, self.r1);
        let a = self.weight.clone();
        let composed = move |t: f64| -> f64 {
            match h_inverse(dim, r1, len, t) {
                Ok(r) => r.powi(2 * (dim as i32 - 1)) * a.call(r).unwrap_or(f64::NAN),
                Err(_) => f64::NAN,
            }
        };
        let label = format!("r(t)^{} * ({})", 2 * (dim - 1), self.weight_label);
        let w = WeightFunction::from_shared(Arc::new(composed), label, self.mu, len)?;
        let map = |r: f64| if r >= self.r2 { len } else { self.h(r).unwrap_or(0.0) };
        let d = Decomposition::new(
            radial.sigma().iter().map(|&s| map(s)).collect(),
            radial.tau().iter().map(|&t| map(t)).collect(),
            len,
        )?;
        Problem::new(w, d, self.g.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialSample {
    pub r: f64,
    pub v: f64,
    pub v_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSolution {
    pub slope: f64,
    pub samples: Vec<RadialSample>,
    /// Largest relative residual of the radial equation.
    pub residual: f64,
}

pub const RADIAL_POINTS: usize = 2001;
pub const RADIAL_RESIDUAL_TOL: f64 = 1e-6;

/// Maps a solution of the transformed problem back to `v(r) = u(h(r))`
/// on a uniform `r`-grid, and checks the radial equation there by finite
/// differences.
pub fn back_map(
    ap: &AnnulusProblem,
    transformed: &Problem,
    radial_breaks: &[f64],
    sol: &Solution,
    opts: &ShootingOptions,
) -> Result<RadialSolution> {
    let (r1, r2) = ap.radii();
    let m = RADIAL_POINTS;
    let rs: Vec<f64> = (0..m)
        .map(|j| if j + 1 == m { r2 } else { r1 + (r2 - r1) * j as f64 / (m - 1) as f64 })
        .collect();
    let len = transformed.length();
    let ts: Vec<f64> = rs
        .iter()
        .map(|&r| if r == r2 { Ok(len) } else { ap.h(r) })
        .collect::<Result<_>>()?;
    let traj = integrate_on(transformed, sol.slope, &ts, opts)?;
    if traj.termination != Termination::Reached || traj.samples.len() != m {
        return Err(Error::InvalidArgument(format!(
            "re-integration of slope {} did not reach the outer radius",
            sol.slope
        )));
    }
    let n = ap.dim() as f64;
    let samples: Vec<RadialSample> = rs
        .iter()
        .zip(&traj.samples)
        .map(|(&r, s)| RadialSample {
            r,
            v: s.u,
            v_prime: s.u_prime * r.powf(1.0 - n),
        })
        .collect();

    let vs: Vec<f64> = samples.iter().map(|s| s.v).collect();
    let d2 = fd::second_derivative(&rs, &vs, radial_breaks);
    let mut worst = 0.0f64;
    for j in 1..m - 1 {
        let Some(vpp) = d2[j] else { continue };
        let s = &samples[j];
        let forcing = ap.weight_at(s.r)? * transformed.g_extended(s.v)?;
        let residual = vpp + (n - 1.0) / s.r * s.v_prime + forcing;
        let bound = RADIAL_RESIDUAL_TOL * (1.0 + forcing.abs());
        if residual.abs() > bound {
            return Err(Error::ResidualViolation {
                r: s.r,
                residual: residual.abs(),
                bound,
            });
        }
        worst = worst.max(residual.abs() / (1.0 + forcing.abs()));
    }
    Ok(RadialSolution {
        slope: sol.slope,
        samples,
        residual: worst,
    })
}

impl RealFn for AnnulusProblem {
    /// `A_mu(r)`, so an annulus can stand in wherever a weight is expected.
    fn call(&self, r: f64) -> std::result::Result<f64, crate::expr::EvalError> {
        let a = self.weight.call(r)?;
        Ok(if a >= 0.0 { a } else { self.mu * a })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn h_closed_forms() {
        assert!((h_map(2, 1.0, E).unwrap() - 1.0).abs() < 1e-15);
        assert!((h_map(3, 1.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        for n in 2..6 {
            assert_eq!(h_map(n, 1.7, 1.7).unwrap(), 0.0);
        }
        assert!(h_map(2, 1.0, 0.5).is_err());
    }

    #[test]
    fn inverse_closed_forms() {
        assert!((h_inverse(2, 1.0, 1.0, 1.0).unwrap() - E).abs() < 1e-15);
        assert!((h_inverse(3, 1.0, 0.5, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(h_inverse(3, 1.0, 0.5, 0.7).is_err());
        assert!(h_inverse(3, 1.0, 0.5, -0.1).is_err());
    }

    #[test]
    fn transformed_weights() {
        let one = Expr::parse("1", "r").unwrap();
        let g = Expr::parse("s^3", "s").unwrap();
        let ap = AnnulusProblem::new(2, 1.0, E, one.clone(), 1.0, g.clone()).unwrap();
        let p = ap.transform(1e-12, 4096).unwrap();
        assert!((p.length() - 1.0).abs() < 1e-15);
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let w = p.weight().eval(t).unwrap();
            assert!(((w - (2.0 * t).exp()) / w).abs() < 1e-14);
        }
        let ap = AnnulusProblem::new(3, 1.0, 2.0, one, 1.0, g).unwrap();
        let p = ap.transform(1e-12, 4096).unwrap();
        assert!((p.length() - 0.5).abs() < 1e-15);
        for k in 0..10 {
            let t = k as f64 / 20.0;
            let w = p.weight().eval(t).unwrap();
            assert!(((w - (1.0 - t).powi(-4)) / w).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_annulus() {
        let one = Expr::parse("1", "r").unwrap();
        let g = Expr::parse("s^3", "s").unwrap();
        assert!(AnnulusProblem::new(1, 1.0, 2.0, one.clone(), 1.0, g.clone()).is_err());
        assert!(AnnulusProblem::new(2, 0.0, 2.0, one.clone(), 1.0, g.clone()).is_err());
        assert!(AnnulusProblem::new(2, 2.0, 1.0, one, 1.0, g).is_err());
    }
}
