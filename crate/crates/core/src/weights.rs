//! Sign-changing weights `a_mu = a^+ - mu a^-` and their hump
//! decomposition into intervals of non-negativity separated by gaps of
//! non-positivity.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, RealFn, SharedFn};

pub const DEFAULT_SIGN_TOL: f64 = 1e-12;
pub const DEFAULT_GRID: usize = 4096;

/// Evaluable weight `a_mu(x)` on `[0, L]`.
#[derive(Clone)]
pub struct WeightFunction {
    base: SharedFn,
    mu: f64,
    length: f64,
    label: String,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("a", &self.label)
            .field("mu", &self.mu)
            .field("length", &self.length)
            .finish()
    }
}

impl WeightFunction {
    pub fn new(base: impl RealFn + 'static, mu: f64, length: f64) -> Result<Self> {
        Self::from_shared(Arc::new(base), "<fn>", mu, length)
    }

    pub fn from_expr(expr: Expr, mu: f64, length: f64) -> Result<Self> {
        let label = expr.to_string();
        Self::from_shared(Arc::new(expr), label, mu, length)
    }

    pub fn from_shared(
        base: SharedFn,
        label: impl Into<String>,
        mu: f64,
        length: f64,
    ) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be >= 0, got {mu}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidArgument(format!("domain length must be > 0, got {length}")));
        }
        Ok(WeightFunction {
            base,
            mu,
            length,
            label: label.into(),
        })
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::from_shared(self.base.clone(), self.label.clone(), mu, self.length)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shared_base(&self) -> SharedFn {
        self.base.clone()
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let slack = 1e-12 * self.length.max(1.0);
        if x >= -slack && x <= self.length + slack {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                x,
                length: self.length,
            })
        }
    }

    /// The unscaled weight `a(x)`.
    pub fn base(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.base.call(x)?)
    }

    pub fn positive_part(&self, x: f64) -> Result<f64> {
        Ok(self.base(x)?.max(0.0))
    }

    pub fn negative_part(&self, x: f64) -> Result<f64> {
        Ok((-self.base(x)?).max(0.0))
    }

    /// `a_mu(x) = max(a, 0) - mu * max(-a, 0)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let a = self.base(x)?;
        Ok(if a >= 0.0 { a } else { self.mu * a })
    }
}

/// Humps `I_i = [sigma_i, tau_i]`, strictly interleaved inside `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    sigma: Vec<f64>,
    tau: Vec<f64>,
    length: f64,
}

impl Decomposition {
    /// Checks the ordering `0 <= s_1 < t_1 < s_2 < ... < t_n <= L`.
    pub fn new(sigma: Vec<f64>, tau: Vec<f64>, length: f64) -> Result<Self> {
        if sigma.is_empty() || sigma.len() != tau.len() {
            return Err(Error::Decomposition(format!(
                "need matching non-empty sigma/tau lists, got {} and {}",
                sigma.len(),
                tau.len()
            )));
        }
        let mut prev = 0.0;
        for (i, (&s, &t)) in sigma.iter().zip(&tau).enumerate() {
            let ordered = if i == 0 { s >= prev } else { s > prev };
            if !ordered || !(t > s) {
                return Err(Error::Decomposition(format!(
                    "points not strictly interleaved at hump {}: sigma = {s}, tau = {t}",
                    i + 1
                )));
            }
            prev = t;
        }
        if prev > length {
            return Err(Error::Decomposition(format!(
                "last hump ends at {prev}, beyond L = {length}"
            )));
        }
        Ok(Decomposition { sigma, tau, length })
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `I_i` for 0-based `i`.
    pub fn hump(&self, i: usize) -> (f64, f64) {
        (self.sigma[i], self.tau[i])
    }

    pub fn humps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.sigma.iter().copied().zip(self.tau.iter().copied())
    }

    /// Non-empty gaps between and around the humps, in order.
    pub fn gaps(&self) -> Vec<Gap> {
        let n = self.n();
        let mut out = Vec::new();
        if self.sigma[0] > 0.0 {
            out.push(Gap {
                start: 0.0,
                end: self.sigma[0],
                after_hump: false,
                before_hump: true,
            });
        }
        for i in 0..n {
            let end = if i + 1 < n { self.sigma[i + 1] } else { self.length };
            if end > self.tau[i] {
                out.push(Gap {
                    start: self.tau[i],
                    end,
                    after_hump: true,
                    before_hump: i + 1 < n,
                });
            }
        }
        out
    }

    /// All interior endpoints, ascending; useful as integrator stops.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .humps()
            .flat_map(|(s, t)| [s, t])
            .filter(|&p| p > 0.0 && p < self.length)
            .collect();
        pts.dedup();
        pts
    }

    /// Maps every endpoint through a strictly increasing `map` onto a new
    /// domain of length `length`.
    pub fn transport(&self, map: impl Fn(f64) -> f64, length: f64) -> Result<Self> {
        Decomposition::new(
            self.sigma.iter().map(|&s| map(s)).collect(),
            self.tau.iter().map(|&t| map(t)).collect(),
            length,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub start: f64,
    pub end: f64,
    /// The gap starts at some `tau_i`.
    pub after_hump: bool,
    /// The gap ends at some `sigma_{i+1}`.
    pub before_hump: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sign {
    Pos,
    Zero,
    Neg,
}

fn bisect_transition(
    w: &WeightFunction,
    mut lo: f64,
    mut hi: f64,
    lo_is_negative: bool,
    sign_tol: f64,
) -> Result<(f64, f64)> {
    // Invariant: (a(lo) < -tol) == lo_is_negative, (a(hi) < -tol) != lo_is_negative.
    // Runs down to adjacent floats.
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (w.base(mid)? < -sign_tol) == lo_is_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Locates the hump decomposition of `a` on `[0, L]`.
///
/// Samples `grid + 1` equally spaced points, then refines every boundary
/// between non-negative and negative stretches by bisection. Stretches
/// where `|a| <= sign_tol` join the adjacent non-negativity hump; a
/// stretch of zeros with no positive sample stays inside the gap.
pub fn decompose(w: &WeightFunction, sign_tol: f64, grid: usize) -> Result<Decomposition> {
    if grid < 2 {
        return Err(Error::InvalidArgument("decomposition grid must be >= 2".into()));
    }
    let l = w.length();
    let xs: Vec<f64> = (0..=grid).map(|k| l * k as f64 / grid as f64).collect();
    let signs: Vec<Sign> = xs
        .iter()
        .map(|&x| {
            w.base(x).map(|a| {
                if a > sign_tol {
                    Sign::Pos
                } else if a < -sign_tol {
                    Sign::Neg
                } else {
                    Sign::Zero
                }
            })
        })
        .collect::<Result<_>>()?;

    // Maximal runs of non-negative samples, bounded by negative samples.
    let mut runs = Vec::new();
    let mut k = 0;
    while k <= grid {
        if signs[k] == Sign::Neg {
            k += 1;
            continue;
        }
        let start = k;
        let mut has_pos = false;
        while k <= grid && signs[k] != Sign::Neg {
            has_pos |= signs[k] == Sign::Pos;
            k += 1;
        }
        if has_pos {
            runs.push((start, k - 1));
        }
    }
    if runs.is_empty() {
        return Err(Error::Decomposition(
            "no positivity hump found (a+ vanishes at the sampling resolution)".into(),
        ));
    }

    let mut sigma = Vec::with_capacity(runs.len());
    let mut tau = Vec::with_capacity(runs.len());
    for &(first, last) in &runs {
        let s = if first == 0 {
            0.0
        } else {
            // negative at first-1, non-negative at first
            bisect_transition(w, xs[first - 1], xs[first], true, sign_tol)?.1
        };
        let t = if last == grid {
            l
        } else {
            bisect_transition(w, xs[last], xs[last + 1], false, sign_tol)?.0
        };
        sigma.push(s);
        tau.push(t);
    }
    let d = Decomposition::new(sigma, tau, l)?;
    let report = validate_decomposition(w, &d, sign_tol);
    if !report.passed {
        return Err(Error::Decomposition(format!(
            "invariant violated after merge: {}",
            report.violation.map(|v| v.to_string()).unwrap_or_default()
        )));
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ViolationKind {
    /// `a < -sign_tol` inside a hump.
    NegativeInHump { hump: usize },
    /// `∫ a+ = 0` over a hump.
    TrivialHump { hump: usize },
    /// `a > sign_tol` inside a gap.
    PositiveInGap,
    /// `a-` vanishes identically next to a hump endpoint.
    NoNegativityNearEndpoint,
    /// Evaluation failed.
    Evaluation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub x: f64,
    pub value: f64,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at x = {} (a = {})", self.kind, self.x, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub passed: bool,
    pub violation: Option<Violation>,
}

const MIN_SAMPLES: usize = 64;

fn samples(start: f64, end: f64, length: f64) -> Vec<f64> {
    let count = ((DEFAULT_GRID as f64 * (end - start) / length).ceil() as usize).max(MIN_SAMPLES);
    (0..=count)
        .map(|k| {
            if k == count {
                end
            } else {
                start + (end - start) * k as f64 / count as f64
            }
        })
        .collect()
}

/// Checks every decomposition invariant by dense sampling and reports the
/// first violating sample point.
pub fn validate_decomposition(
    w: &WeightFunction,
    d: &Decomposition,
    sign_tol: f64,
) -> DecompositionReport {
    match check(w, d, sign_tol) {
        Ok(None) => DecompositionReport {
            passed: true,
            violation: None,
        },
        Ok(Some(v)) => DecompositionReport {
            passed: false,
            violation: Some(v),
        },
        Err(e) => DecompositionReport {
            passed: false,
            violation: Some(Violation {
                x: f64::NAN,
                value: f64::NAN,
                kind: ViolationKind::Evaluation(e.to_string()),
            }),
        },
    }
}

fn check(w: &WeightFunction, d: &Decomposition, tol: f64) -> Result<Option<Violation>> {
    let l = w.length();
    for (i, (s, t)) in d.humps().enumerate() {
        let xs = samples(s, t, l);
        let vals: Vec<f64> = xs.iter().map(|&x| w.base(x)).collect::<Result<_>>()?;
        if let Some(k) = vals.iter().position(|&a| a < -tol) {
            return Ok(Some(Violation {
                x: xs[k],
                value: vals[k],
                kind: ViolationKind::NegativeInHump { hump: i + 1 },
            }));
        }
        let dx = (t - s) / (xs.len() - 1) as f64;
        let integral: f64 = vals
            .windows(2)
            .map(|p| 0.5 * dx * (p[0].max(0.0) + p[1].max(0.0)))
            .sum();
        if !(integral > 0.0) {
            return Ok(Some(Violation {
                x: s,
                value: 0.0,
                kind: ViolationKind::TrivialHump { hump: i + 1 },
            }));
        }
    }
    for gap in d.gaps() {
        let xs = samples(gap.start, gap.end, l);
        let vals: Vec<f64> = xs.iter().map(|&x| w.base(x)).collect::<Result<_>>()?;
        if let Some(k) = vals.iter().position(|&a| a > tol) {
            return Ok(Some(Violation {
                x: xs[k],
                value: vals[k],
                kind: ViolationKind::PositiveInGap,
            }));
        }
        let dx = (gap.end - gap.start) / (xs.len() - 1) as f64;
        let neg: Vec<f64> = vals.iter().map(|a| (-a).max(0.0)).collect();
        let inner = 1..xs.len() - 1;
        if gap.after_hump {
            // ∫_{tau}^{x} a- > 0 for every interior sample x
            let mut acc = 0.0;
            for k in inner.clone() {
                acc += 0.5 * dx * (neg[k - 1] + neg[k]);
                if !(acc > 0.0) {
                    return Ok(Some(Violation {
                        x: xs[k],
                        value: vals[k],
                        kind: ViolationKind::NoNegativityNearEndpoint,
                    }));
                }
            }
        }
        if gap.before_hump {
            let mut acc = 0.0;
            for k in inner.rev() {
                acc += 0.5 * dx * (neg[k + 1] + neg[k]);
                if !(acc > 0.0) {
                    return Ok(Some(Violation {
                        x: xs[k],
                        value: vals[k],
                        kind: ViolationKind::NoNegativityNearEndpoint,
                    }));
                }
            }
        }
    }
    Ok(None)
}
