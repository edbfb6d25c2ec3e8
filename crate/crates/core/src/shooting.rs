//! Shooting for positive solutions of `u'' + a_mu(x) g(u) = 0`,
//! `u(0) = u(L) = 0`.
//!
//! The nonlinearity is extended by zero for negative arguments, so every
//! trajectory starting at `(0, d)` with `d > 0` that returns to zero at
//! `x = L` with `u > 0` in between is a positive solution. Roots of the
//! shooting value `d -> u(L; d)` are bracketed on a slope grid and
//! refined by bisection; each candidate is then re-integrated on an
//! output grid and validated against the maximum principle and the sign
//! structure of the weight.

use std::fmt;
use std::ops::ControlFlow;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{EvalError, Expr, RealFn, SharedFn};
use crate::fd;
use crate::multiplicity::Signature;
use crate::ode::{DormandPrince, Stats};
use crate::weights::{Decomposition, WeightFunction};

/// Weight, hump decomposition and nonlinearity of one Dirichlet problem.
#[derive(Clone)]
pub struct Problem {
    weight: WeightFunction,
    decomposition: Decomposition,
    g: SharedFn,
    g_label: String,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("weight", &self.weight)
            .field("decomposition", &self.decomposition)
            .field("g", &self.g_label)
            .finish()
    }
}

impl Problem {
    pub fn new(weight: WeightFunction, decomposition: Decomposition, g: Expr) -> Result<Self> {
        let label = g.to_string();
        Self::from_shared(weight, decomposition, Arc::new(g), label)
    }

    pub fn from_shared(
        weight: WeightFunction,
        decomposition: Decomposition,
        g: SharedFn,
        g_label: impl Into<String>,
    ) -> Result<Self> {
        let at_zero = g.call(0.0)?;
        if at_zero.abs() > 1e-14 {
            return Err(Error::NonZeroAtOrigin(at_zero));
        }
        if (decomposition.length() - weight.length()).abs() > 1e-12 * weight.length() {
            return Err(Error::Decomposition(format!(
                "decomposition covers [0, {}] but the weight lives on [0, {}]",
                decomposition.length(),
                weight.length()
            )));
        }
        Ok(Problem {
            weight,
            decomposition,
            g,
            g_label: g_label.into(),
        })
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Ok(Problem {
            weight: self.weight.with_mu(mu)?,
            ..self.clone()
        })
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn g(&self) -> &dyn RealFn {
        self.g.as_ref()
    }

    pub fn g_label(&self) -> &str {
        &self.g_label
    }

    pub fn length(&self) -> f64 {
        self.weight.length()
    }

    /// `g(s)` for `s >= 0`, zero below.
    pub fn g_extended(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            Ok(0.0)
        } else {
            Ok(self.g.call(s)?)
        }
    }

    /// `a_mu(x) g~(u)`.
    pub fn forcing(&self, x: f64, u: f64) -> Result<f64> {
        let g = self.g_extended(u)?;
        if g == 0.0 {
            return Ok(0.0);
        }
        Ok(self.weight.eval(x)? * g)
    }

    fn rhs(&self, x: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        match self.forcing(x, y[0]) {
            Ok(f) => Ok([y[1], -f]),
            // Blow-up inside a trial stage: let the integrator shrink the step.
            Err(Error::Eval(EvalError::Overflow { .. })) => Ok([y[1], f64::NAN]),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub rtol: f64,
    pub atol: f64,
    pub u_cap: f64,
    /// Points of the uniform output grid on `[0, L]`.
    pub output_points: usize,
    pub bc_tol: f64,
    pub curv_tol: f64,
    /// Bisection stops once the slope bracket is this narrow.
    pub bisect_width: f64,
    /// Roots closer than this in slope are merged.
    pub dedup_tol: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            rtol: 1e-10,
            atol: 1e-12,
            u_cap: 1e6,
            output_points: 2001,
            bc_tol: 1e-9,
            curv_tol: 1e-6,
            bisect_width: 1e-13,
            dedup_tol: 1e-9,
        }
    }
}

impl ShootingOptions {
    fn stepper(&self) -> DormandPrince {
        DormandPrince::new(self.rtol, self.atol)
    }

    pub fn uniform_grid(&self, length: f64) -> Vec<f64> {
        let m = self.output_points.max(2);
        (0..m)
            .map(|j| {
                if j + 1 == m {
                    length
                } else {
                    length * j as f64 / (m - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub x: f64,
    pub u: f64,
    pub u_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EscapeReason {
    /// `|u| > u_cap`
    Value,
    /// `|u'| > 10 u_cap`
    Slope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Termination {
    Reached,
    Escaped { x: f64, reason: EscapeReason },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// State where integration stopped: `x = L` unless escaped.
    pub end: Sample,
    pub termination: Termination,
    pub stats: Stats,
}

impl Trajectory {
    pub fn escaped(&self) -> bool {
        matches!(self.termination, Termination::Escaped { .. })
    }
}

/// Integrates from `(u, u')(0) = (0, d)` and samples on the default
/// uniform output grid.
pub fn integrate(p: &Problem, d: f64, opts: &ShootingOptions) -> Result<Trajectory> {
    integrate_on(p, d, &opts.uniform_grid(p.length()), opts)
}

/// Like [`integrate`], sampling on an arbitrary ascending grid in
/// `[0, L]`. Grid points are hit exactly by the stepper.
pub fn integrate_on(p: &Problem, d: f64, grid: &[f64], opts: &ShootingOptions) -> Result<Trajectory> {
    if !d.is_finite() {
        return Err(Error::InvalidArgument(format!("initial slope must be finite, got {d}")));
    }
    if !(opts.u_cap > 0.0) {
        return Err(Error::InvalidArgument("u_cap must be positive".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("output grid must be strictly increasing".into()));
    }
    let l = p.length();
    let end_tol = 1e-14 * l;

    // Output points and weight breakpoints share one stop list.
    let mut stops: Vec<(f64, bool)> = grid
        .iter()
        .filter(|&&x| x > 0.0 && x < l - end_tol)
        .map(|&x| (x, true))
        .collect();
    stops.extend(p.decomposition.breakpoints().into_iter().map(|b| (b, false)));
    stops.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    stops.dedup_by(|b, a| a.0 == b.0);
    let stop_x: Vec<f64> = stops.iter().map(|s| s.0).collect();

    let mut samples = Vec::with_capacity(grid.len());
    if grid.first().is_some_and(|&x| x <= end_tol) {
        samples.push(Sample {
            x: 0.0,
            u: 0.0,
            u_prime: d,
        });
    }
    let mut escape = None;
    let cap = opts.u_cap;
    let out = opts.stepper().integrate(
        |x, y: &[f64; 2]| p.rhs(x, y),
        0.0,
        [0.0, d],
        l,
        &stop_x,
        |step| {
            if let Some(i) = step.stop {
                if stops[i].1 {
                    samples.push(Sample {
                        x: step.t1,
                        u: step.y1[0],
                        u_prime: step.y1[1],
                    });
                }
            }
            if step.y1[0].abs() > cap {
                escape = Some((step.t1, EscapeReason::Value));
                ControlFlow::Break(())
            } else if step.y1[1].abs() > 10.0 * cap {
                escape = Some((step.t1, EscapeReason::Slope));
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        },
    )?;
    let end = Sample {
        x: out.t,
        u: out.y[0],
        u_prime: out.y[1],
    };
    let termination = match escape {
        Some((x, reason)) => Termination::Escaped { x, reason },
        None => {
            if grid.last().is_some_and(|&x| (x - l).abs() <= end_tol) {
                samples.push(end);
            }
            Termination::Reached
        }
    };
    Ok(Trajectory {
        samples,
        end,
        termination,
        stats: out.stats,
    })
}

/// `u(L; d)`, or `sign(u) * u_cap` when the trajectory escapes.
pub fn shoot_value(p: &Problem, d: f64, opts: &ShootingOptions) -> Result<f64> {
    if d < 0.0 {
        return Err(Error::InvalidArgument(format!("slope must be >= 0, got {d}")));
    }
    let t = integrate_on(p, d, &[], opts)?;
    Ok(match t.termination {
        Termination::Reached => t.end.u,
        Termination::Escaped { .. } => t.end.u.signum() * opts.u_cap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeRange {
    pub min: f64,
    pub max: f64,
    /// Number of grid intervals.
    pub grid: usize,
}

impl SlopeRange {
    pub fn new(min: f64, max: f64, grid: usize) -> Result<Self> {
        if !(min >= 0.0 && max > min && max.is_finite()) || grid < 2 {
            return Err(Error::InvalidArgument(format!(
                "slope range needs 0 <= d_min < d_max and grid >= 2, got [{min}, {max}] / {grid}"
            )));
        }
        Ok(SlopeRange { min, max, grid })
    }

    /// Grid slopes, excluding `d = 0` (the trivial solution).
    pub fn points(&self) -> Vec<f64> {
        (0..=self.grid)
            .map(|k| {
                if k == self.grid {
                    self.max
                } else {
                    self.min + (self.max - self.min) * k as f64 / self.grid as f64
                }
            })
            .filter(|&d| d > 0.0)
            .collect()
    }
}

/// A validated positive solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub slope: f64,
    #[serde(skip)]
    pub trajectory: Trajectory,
    /// `|u(L)|`
    pub boundary_residual: f64,
    /// Minimum of `u` over interior grid points.
    pub positivity_margin: f64,
    pub start_slope: f64,
    pub end_slope: f64,
    pub sup_norm: f64,
    pub signature: Option<Signature>,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RejectReason {
    Escaped { x: f64 },
    BoundaryResidual { residual: f64 },
    NotPositive { x: f64, u: f64 },
    StartSlopeNotPositive,
    EndSlopeNotNegative { end_slope: f64 },
    NotConcaveOnHump { x: f64, second_difference: f64 },
    NotConvexOnGap { x: f64, second_difference: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejected {
    pub slope: f64,
    pub reasons: Vec<RejectReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSearch {
    pub accepted: Vec<Solution>,
    pub rejected: Vec<Rejected>,
    /// Shooting values on the slope grid, `(d, u(L; d))`.
    #[serde(skip)]
    pub scan: Vec<(f64, f64)>,
}

/// Re-integrates slope `d` on the output grid and checks every solution
/// invariant. Returns the reasons for rejection when any fail.
pub fn validate(p: &Problem, d: f64, opts: &ShootingOptions) -> Result<std::result::Result<Solution, Rejected>> {
    let traj = integrate(p, d, opts)?;
    let mut reasons = Vec::new();
    if let Termination::Escaped { x, .. } = traj.termination {
        reasons.push(RejectReason::Escaped { x });
        return Ok(Err(Rejected { slope: d, reasons }));
    }
    let residual = traj.end.u.abs();
    if !(residual <= opts.bc_tol) {
        reasons.push(RejectReason::BoundaryResidual { residual });
    }
    let s = &traj.samples;
    let interior = &s[1..s.len() - 1];
    let margin = interior.iter().map(|p| p.u).fold(f64::INFINITY, f64::min);
    if let Some(bad) = interior.iter().find(|p| !(p.u > 0.0)) {
        reasons.push(RejectReason::NotPositive { x: bad.x, u: bad.u });
    }
    if !(d > 0.0) {
        reasons.push(RejectReason::StartSlopeNotPositive);
    }
    if !(traj.end.u_prime < 0.0) {
        reasons.push(RejectReason::EndSlopeNotNegative {
            end_slope: traj.end.u_prime,
        });
    }
    if let Some(r) = curvature_violation(p, s, opts.curv_tol) {
        reasons.push(r);
    }
    if !reasons.is_empty() {
        return Ok(Err(Rejected { slope: d, reasons }));
    }
    let sup = s.iter().map(|p| p.u).fold(0.0, f64::max);
    Ok(Ok(Solution {
        slope: d,
        boundary_residual: residual,
        positivity_margin: margin,
        start_slope: d,
        end_slope: traj.end.u_prime,
        sup_norm: sup,
        signature: None,
        ambiguous: false,
        trajectory: traj,
    }))
}

fn second_difference(s: &[Sample], j: usize) -> f64 {
    let h1 = s[j].x - s[j - 1].x;
    let h2 = s[j + 1].x - s[j].x;
    2.0 * ((s[j + 1].u - s[j].u) / h2 - (s[j].u - s[j - 1].u) / h1) / (h1 + h2)
}

/// Concavity on humps and convexity on gaps, wherever `u > 0`. Only
/// stencils that lie inside a single interval are checked: a second
/// difference is a positive average of `u''` over its stencil.
fn curvature_violation(p: &Problem, s: &[Sample], tol: f64) -> Option<RejectReason> {
    let d = p.decomposition();
    let inside = |j: usize, a: f64, b: f64| s[j - 1].x >= a && s[j + 1].x <= b;
    for j in 1..s.len().saturating_sub(1) {
        if !(s[j].u > 0.0) {
            continue;
        }
        if d.humps().any(|(a, b)| inside(j, a, b)) {
            let dd = second_difference(s, j);
            if dd > tol {
                return Some(RejectReason::NotConcaveOnHump {
                    x: s[j].x,
                    second_difference: dd,
                });
            }
        } else if d.gaps().iter().any(|g| inside(j, g.start, g.end)) {
            let dd = second_difference(s, j);
            if dd < -tol {
                return Some(RejectReason::NotConvexOnGap {
                    x: s[j].x,
                    second_difference: dd,
                });
            }
        }
    }
    None
}

/// Relative ODE residual `|u'' + a_mu g(u)| / (1 + |a_mu g(u)|)` at every
/// interior sample, with `u''` from piecewise finite differences on the
/// (uniform) output grid.
pub fn residual_profile(p: &Problem, sol: &Solution) -> Result<Vec<(f64, f64)>> {
    let s = &sol.trajectory.samples;
    let xs: Vec<f64> = s.iter().map(|p| p.x).collect();
    let us: Vec<f64> = s.iter().map(|p| p.u).collect();
    let d2 = fd::second_derivative(&xs, &us, &p.decomposition().breakpoints());
    let mut out = Vec::with_capacity(s.len());
    for j in 1..s.len().saturating_sub(1) {
        if let Some(upp) = d2[j] {
            let f = p.forcing(xs[j], us[j])?;
            out.push((xs[j], (upp + f).abs() / (1.0 + f.abs())));
        }
    }
    Ok(out)
}

fn bisect(p: &Problem, mut lo: f64, mut f_lo: f64, mut hi: f64, mut f_hi: f64, opts: &ShootingOptions) -> Result<f64> {
    while hi - lo > opts.bisect_width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = shoot_value(p, mid, opts)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}

/// Scans the slope grid for sign changes of the shooting value, refines
/// each by bisection and validates the result.
pub fn isolate_roots(p: &Problem, range: SlopeRange, opts: &ShootingOptions) -> Result<RootSearch> {
    let ds = range.points();
    let values: Vec<f64> = ds
        .par_iter()
        .map(|&d| shoot_value(p, d, opts))
        .collect::<Result<_>>()?;
    let scan: Vec<(f64, f64)> = ds.iter().copied().zip(values.iter().copied()).collect();

    let mut brackets = Vec::new();
    for (k, &(d, v)) in scan.iter().enumerate() {
        if v == 0.0 {
            brackets.push((d, v, d, v));
        } else if let Some(&(d2, v2)) = scan.get(k + 1) {
            if v2 != 0.0 && (v < 0.0) != (v2 < 0.0) {
                brackets.push((d, v, d2, v2));
            }
        }
    }
    let refined: Vec<std::result::Result<Solution, Rejected>> = brackets
        .par_iter()
        .map(|&(a, fa, b, fb)| {
            let root = if a == b { a } else { bisect(p, a, fa, b, fb, opts)? };
            validate(p, root, opts)
        })
        .collect::<Result<_>>()?;

    let mut accepted: Vec<Solution> = Vec::new();
    let mut rejected = Vec::new();
    for r in refined {
        match r {
            Ok(sol) => {
                if accepted
                    .last()
                    .is_some_and(|prev| (sol.slope - prev.slope).abs() < opts.dedup_tol)
                {
                    continue;
                }
                accepted.push(sol);
            }
            Err(rej) => rejected.push(rej),
        }
    }
    Ok(RootSearch {
        accepted,
        rejected,
        scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_unit() -> Problem {
        let w = WeightFunction::new(|_x: f64| 1.0, 1.0, 1.0).unwrap();
        let d = Decomposition::new(vec![0.0], vec![1.0], 1.0).unwrap();
        Problem::new(w, d, Expr::parse("s", "s").unwrap()).unwrap()
    }

    #[test]
    fn linear_closed_form() {
        let p = linear_unit();
        let t = integrate(&p, 2.0, &ShootingOptions::default()).unwrap();
        assert_eq!(t.termination, Termination::Reached);
        assert!((t.end.u - 2.0 * 1f64.sin()).abs() < 1e-8);
        assert!((t.end.u_prime - 2.0 * 1f64.cos()).abs() < 1e-8);
        assert_eq!(t.samples.len(), 2001);
        assert_eq!(t.samples[0].x, 0.0);
        assert_eq!(t.samples[2000].x, 1.0);
        for s in &t.samples {
            assert!((s.u - 2.0 * s.x.sin()).abs() < 1e-8);
        }
        assert!(t.samples.windows(2).all(|w| w[1].x > w[0].x));
    }

    #[test]
    fn zero_slope_is_equilibrium() {
        let p = linear_unit();
        let t = integrate(&p, 0.0, &ShootingOptions::default()).unwrap();
        assert!(t.samples.iter().all(|s| s.u == 0.0 && s.u_prime == 0.0));
        assert_eq!(shoot_value(&p, 0.0, &ShootingOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn linear_has_no_roots() {
        let p = linear_unit();
        let opts = ShootingOptions::default();
        for d in [0.5, 3.0, 10.0] {
            let v = shoot_value(&p, d, &opts).unwrap();
            assert!((v - d * 1f64.sin()).abs() < 1e-8);
        }
        let res = isolate_roots(&p, SlopeRange::new(0.0, 10.0, 100).unwrap(), &opts).unwrap();
        assert!(res.accepted.is_empty());
    }

    #[test]
    fn extension_is_zero_below() {
        let p = linear_unit();
        assert_eq!(p.g_extended(-3.0).unwrap(), 0.0);
        assert_eq!(p.g_extended(3.0).unwrap(), 3.0);
    }

    #[test]
    fn g_must_vanish_at_zero() {
        let w = WeightFunction::new(|_x: f64| 1.0, 1.0, 1.0).unwrap();
        let d = Decomposition::new(vec![0.0], vec![1.0], 1.0).unwrap();
        let r = Problem::new(w, d, Expr::parse("s + 1", "s").unwrap());
        assert!(matches!(r, Err(Error::NonZeroAtOrigin(_))));
    }

    #[test]
    fn escape_is_recorded() {
        // u'' = +u^3 on a negative weight blows up fast
        let w = WeightFunction::new(|_x: f64| -100.0, 1.0, 1.0).unwrap();
        let d = Decomposition::new(vec![0.0], vec![0.5], 1.0).unwrap();
        let p = Problem::new(w, d, Expr::parse("s^3", "s").unwrap()).unwrap();
        let opts = ShootingOptions {
            u_cap: 1e3,
            ..Default::default()
        };
        let t = integrate(&p, 50.0, &opts).unwrap();
        assert!(t.escaped());
        assert_eq!(shoot_value(&p, 50.0, &opts).unwrap(), 1e3);
    }

    #[test]
    fn slope_grid_skips_zero() {
        let r = SlopeRange::new(0.0, 5.0, 500).unwrap();
        let pts = r.points();
        assert_eq!(pts.len(), 500);
        assert_eq!(pts[0], 0.01);
        assert_eq!(*pts.last().unwrap(), 5.0);
        assert!(SlopeRange::new(1.0, 1.0, 10).is_err());
    }
}
