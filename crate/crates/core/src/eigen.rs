//! First Dirichlet eigenvalue of `phi'' + lambda q(x) phi = 0` on a
//! subinterval, by Prüfer-angle bisection, and the growth-condition
//! checker built on top of it.
//!
//! The Prüfer angle solves `theta' = cos^2 theta + lambda q sin^2 theta`
//! with `theta(x1) = 0`; `lambda` is the first eigenvalue exactly when
//! `theta(x2) = pi`. For `q >= 0` the end angle is non-decreasing in
//! `lambda`, so doubling plus bisection always brackets it. Stretches
//! where `q = 0` cost nothing special: the flow there is `theta' = cos^2`.

use std::ops::ControlFlow;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{RealFn, SharedFn};
use crate::ode::DormandPrince;
use crate::weights::{Decomposition, WeightFunction};

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const ANGLE_ATOL: f64 = 1e-12;
const BRACKET_LIMIT: f64 = 1e12;
const SIGN_SAMPLES: usize = 1024;

/// `q >= 0` on `J = [x1, x2]`.
#[derive(Clone)]
pub struct EigenProblem {
    q: SharedFn,
    x1: f64,
    x2: f64,
    breakpoints: Vec<f64>,
}

impl std::fmt::Debug for EigenProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EigenProblem")
            .field("x1", &self.x1)
            .field("x2", &self.x2)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl EigenProblem {
    pub fn new(q: impl RealFn + 'static, x1: f64, x2: f64) -> Result<Self> {
        Self::from_shared(Arc::new(q), x1, x2, Vec::new())
    }

    /// `breakpoints` are points where `q` may be non-smooth; the angle
    /// integration steps onto them exactly.
    pub fn from_shared(q: SharedFn, x1: f64, x2: f64, mut breakpoints: Vec<f64>) -> Result<Self> {
        if !(x1 < x2) || !x1.is_finite() || !x2.is_finite() {
            return Err(Error::InvalidArgument(format!("empty interval [{x1}, {x2}]")));
        }
        breakpoints.retain(|&b| b > x1 && b < x2);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let p = EigenProblem {
            q,
            x1,
            x2,
            breakpoints,
        };
        p.check_weight()?;
        Ok(p)
    }

    /// `a^+` of a weight, restricted to `[x1, x2]`.
    pub fn positive_part(w: &WeightFunction, x1: f64, x2: f64, breakpoints: Vec<f64>) -> Result<Self> {
        let w = w.clone();
        let q = move |x: f64| w.positive_part(x).unwrap_or(f64::NAN);
        Self::from_shared(Arc::new(q), x1, x2, breakpoints)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.x1, self.x2)
    }

    fn check_weight(&self) -> Result<()> {
        let h = (self.x2 - self.x1) / SIGN_SAMPLES as f64;
        let mut integral = 0.0;
        let mut prev = None;
        for k in 0..=SIGN_SAMPLES {
            let x = self.x1 + h * k as f64;
            let v = self.q.call(x)?;
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "eigen weight must be non-negative, q({x}) = {v}"
                )));
            }
            if let Some(p) = prev {
                integral += 0.5 * h * (p + v);
            }
            prev = Some(v);
        }
        if !(integral > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eigen weight vanishes on [{}, {}]",
                self.x1, self.x2
            )));
        }
        Ok(())
    }
}

/// End value `theta(x2)` of the Prüfer angle for the given `lambda`.
pub fn prufer_angle(p: &EigenProblem, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite, got {lambda}")));
    }
    let dp = DormandPrince {
        rtol: 0.0,
        atol: ANGLE_ATOL,
        max_steps: 50_000_000,
        ..Default::default()
    };
    let q = &p.q;
    let out = dp.integrate(
        |x, th: &[f64; 1]| {
            let (s, c) = th[0].sin_cos();
            Ok([c * c + lambda * q.call(x)? * s * s])
        },
        p.x1,
        [0.0],
        p.x2,
        &p.breakpoints,
        |_| ControlFlow::Continue(()),
    )?;
    Ok(out.y[0])
}

/// First eigenvalue, to relative bracket width `rel_tol`.
pub fn first_eigenvalue(p: &EigenProblem, rel_tol: f64) -> Result<f64> {
    use std::f64::consts::PI;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while prufer_angle(p, hi)? < PI {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return Err(Error::EigenBracket {
                limit: BRACKET_LIMIT,
            });
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if prufer_angle(p, mid)? < PI {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "NOT GUARANTEED")]
    NotGuaranteed,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::NotGuaranteed
        }
    }
}

/// Outcome of checking `g_0 < lambda_0` and `g_inf > max_i lambda_1^i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub lambda0: f64,
    pub lambda1: Vec<f64>,
    pub g0_estimate: f64,
    pub g0_range: [f64; 2],
    pub ginf_estimate: f64,
    pub ginf_range: [f64; 2],
    pub samples_per_range: usize,
    pub small_verdict: Verdict,
    pub large_verdict: Verdict,
    /// `lambda0 <= min lambda_1^i` up to tolerance.
    pub domain_monotonicity: bool,
    pub caveat: &'static str,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.small_verdict == Verdict::Pass && self.large_verdict == Verdict::Pass
    }

    pub fn max_lambda1(&self) -> f64 {
        self.lambda1.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HypothesisOptions {
    pub s_lo: f64,
    pub s_hi: f64,
    pub samples: usize,
    pub rel_tol: f64,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        HypothesisOptions {
            s_lo: 1e-10,
            s_hi: 1e8,
            samples: 256,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

fn geometric(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let ratio = (hi / lo).ln();
    (0..count).map(move |k| {
        if k + 1 == count {
            hi
        } else {
            lo * (ratio * k as f64 / (count - 1) as f64).exp()
        }
    })
}

/// `lambda_0 = mu_1^{[0,L]}(a^+)`.
pub fn lambda0(w: &WeightFunction, d: &Decomposition, rel_tol: f64) -> Result<f64> {
    let p = EigenProblem::positive_part(w, 0.0, w.length(), d.breakpoints())?;
    first_eigenvalue(&p, rel_tol)
}

/// `lambda_1^i = mu_1^{I_i}(a^+)` for each hump.
pub fn hump_eigenvalues(w: &WeightFunction, d: &Decomposition, rel_tol: f64) -> Result<Vec<f64>> {
    (0..d.n())
        .into_par_iter()
        .map(|i| {
            let (s, t) = d.hump(i);
            let p = EigenProblem::positive_part(w, s, t, Vec::new())?;
            first_eigenvalue(&p, rel_tol)
        })
        .collect()
}

/// Estimates `g_0` and `g_inf` on sample ranges and compares them with
/// the eigenvalues of `a^+`. The limits are grid extremes over three
/// decades, not true limits; the ranges used are part of the report.
pub fn check_hypotheses(
    w: &WeightFunction,
    d: &Decomposition,
    g: &dyn RealFn,
    opts: &HypothesisOptions,
) -> Result<HypothesisReport> {
    if !(opts.s_lo > 0.0 && opts.s_hi > opts.s_lo * 1e3) || opts.samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need 0 < s_lo and s_hi > 1e3 * s_lo, got s_lo = {}, s_hi = {}",
            opts.s_lo, opts.s_hi
        )));
    }
    let g_zero = g.call(0.0)?;
    if g_zero != 0.0 {
        return Err(Error::NonZeroAtOrigin(g_zero));
    }
    for s in geometric(opts.s_lo, opts.s_hi, 4 * opts.samples) {
        let v = g.call(s)?;
        if !(v > 0.0) {
            return Err(Error::NonPositive { s, value: v });
        }
    }
    let ratio = |s: f64| -> Result<f64> { Ok(g.call(s)? / s) };

    let g0_range = [opts.s_lo, opts.s_lo * 1e3];
    let mut g0 = f64::NEG_INFINITY;
    for s in geometric(g0_range[0], g0_range[1], opts.samples) {
        g0 = g0.max(ratio(s)?);
    }
    let ginf_range = [opts.s_hi / 1e3, opts.s_hi];
    let mut ginf = f64::INFINITY;
    for s in geometric(ginf_range[0], ginf_range[1], opts.samples) {
        ginf = ginf.min(ratio(s)?);
    }

    let (l0, l1) = rayon::join(
        || lambda0(w, d, opts.rel_tol),
        || hump_eigenvalues(w, d, opts.rel_tol),
    );
    let (l0, l1) = (l0?, l1?);
    let max1 = l1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min1 = l1.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(HypothesisReport {
        lambda0: l0,
        lambda1: l1,
        g0_estimate: g0,
        g0_range,
        ginf_estimate: ginf,
        ginf_range,
        samples_per_range: opts.samples,
        small_verdict: Verdict::from_bool(g0 < l0),
        large_verdict: Verdict::from_bool(ginf > max1),
        domain_monotonicity: l0 <= min1 * (1.0 + 1e-8),
        caveat: "numeric limit estimate",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(x1: f64, x2: f64) -> EigenProblem {
        EigenProblem::new(|_x: f64| 1.0, x1, x2).unwrap()
    }

    #[test]
    fn angle_closed_forms() {
        let p = unit(0.0, 1.0);
        assert!((prufer_angle(&p, PI * PI).unwrap() - PI).abs() < 1e-9);
        assert!((prufer_angle(&p, 0.0).unwrap() - PI / 4.0).abs() < 1e-10);
    }

    #[test]
    fn constant_weight_eigenvalues() {
        for l in [1.0, 0.5, 1.0 / 3.0] {
            let lam = first_eigenvalue(&unit(0.0, l), DEFAULT_REL_TOL).unwrap();
            let exact = (PI / l).powi(2);
            assert!(((lam - exact) / exact).abs() < 1e-8, "L={l}: {lam} vs {exact}");
        }
    }

    #[test]
    fn angle_monotone_in_lambda() {
        let p = EigenProblem::new(|x: f64| (3.0 * PI * x).sin().max(0.0), 0.0, 1.0).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..20 {
            let th = prufer_angle(&p, 10.0 * k as f64).unwrap();
            assert!(th >= prev - 1e-12);
            prev = th;
        }
    }

    #[test]
    fn scaling() {
        let base = first_eigenvalue(&unit(0.0, 1.0), DEFAULT_REL_TOL).unwrap();
        for c in [2.0, 10.0] {
            let p = EigenProblem::new(move |_x: f64| c, 0.0, 1.0).unwrap();
            let lam = first_eigenvalue(&p, DEFAULT_REL_TOL).unwrap();
            assert!(((lam - base / c) / (base / c)).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(EigenProblem::new(|_x: f64| 0.0, 0.0, 1.0).is_err());
        assert!(EigenProblem::new(|x: f64| x - 0.5, 0.0, 1.0).is_err());
        assert!(EigenProblem::new(|_x: f64| 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn tiny_weight_has_no_bracket() {
        let p = EigenProblem::new(|_x: f64| 1e-300, 0.0, 1.0).unwrap();
        assert!(matches!(first_eigenvalue(&p, 1e-6), Err(Error::EigenBracket { .. })));
    }

    #[test]
    fn linear_g_is_not_guaranteed() {
        let w = WeightFunction::new(|_x: f64| 1.0, 1.0, 1.0).unwrap();
        let d = Decomposition::new(vec![0.0], vec![1.0], 1.0).unwrap();
        let rep = check_hypotheses(&w, &d, &|s: f64| s, &HypothesisOptions::default()).unwrap();
        assert!((rep.g0_estimate - 1.0).abs() < 1e-12);
        assert!((rep.ginf_estimate - 1.0).abs() < 1e-12);
        assert_eq!(rep.small_verdict, Verdict::Pass);
        assert_eq!(rep.large_verdict, Verdict::NotGuaranteed);
        assert!((rep.lambda0 - PI * PI).abs() < 1e-6);
    }

    #[test]
    fn g_must_vanish_and_stay_positive() {
        let w = WeightFunction::new(|_x: f64| 1.0, 1.0, 1.0).unwrap();
        let d = Decomposition::new(vec![0.0], vec![1.0], 1.0).unwrap();
        let o = HypothesisOptions::default();
        assert!(matches!(
            check_hypotheses(&w, &d, &|s: f64| s + 1.0, &o),
            Err(Error::NonZeroAtOrigin(_))
        ));
        assert!(matches!(
            check_hypotheses(&w, &d, &|s: f64| s * (s - 1.0), &o),
            Err(Error::NonPositive { .. })
        ));
    }
}
