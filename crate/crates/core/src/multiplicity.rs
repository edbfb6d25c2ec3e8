//! Classification of positive solutions by hump signature, degree
//! bookkeeping, and multiplicity experiments against the `2^n - 1`
//! lower bound.
//!
//! A solution's signature is the set of humps `I_i` on which its maximum
//! exceeds a small threshold `r`. Solutions with distinct signatures lie
//! in disjoint localisation boxes, so full coverage of the non-empty
//! subsets exhibits at least `2^n - 1` distinct solutions.

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::eigen::{check_hypotheses, HypothesisOptions, HypothesisReport};
use crate::error::{Error, Result};
use crate::expr::RealFn;
use crate::shooting::{isolate_roots, Problem, Rejected, Sample, ShootingOptions, SlopeRange, Solution};
use crate::weights::Decomposition;

/// Ties closer than this to `r` are flagged ambiguous.
pub const AMBIGUITY_TOL: f64 = 1e-12;

/// Non-empty or empty subset of `{1, ..., n}`, stored as a bit mask
/// (bit `i - 1` for hump `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Signature(u64);

impl Signature {
    pub fn from_mask(mask: u64) -> Self {
        Signature(mask)
    }

    /// From 1-based hump indices.
    pub fn from_indices(indices: &[usize]) -> Self {
        Signature(indices.iter().fold(0, |m, &i| m | 1 << (i - 1)))
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, hump: usize) -> bool {
        self.0 >> (hump - 1) & 1 == 1
    }

    pub fn indices(self) -> Vec<usize> {
        (0..64).filter(|b| self.0 >> b & 1 == 1).map(|b| b + 1).collect()
    }

    pub fn is_subset_of(self, other: Signature) -> bool {
        self.0 & !other.0 == 0
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub signature: Signature,
    /// Some hump maximum lies within [`AMBIGUITY_TOL`] of `r`.
    pub ambiguous: bool,
}

/// `{ i : max_{I_i} u > r }` over the sampled trajectory.
pub fn signature_of(samples: &[Sample], d: &Decomposition, r: f64) -> Classification {
    let mut mask = 0;
    let mut ambiguous = false;
    for (i, (a, b)) in d.humps().enumerate() {
        let peak = samples
            .iter()
            .filter(|s| s.x >= a && s.x <= b)
            .map(|s| s.u)
            .fold(f64::NEG_INFINITY, f64::max);
        if (peak - r).abs() <= AMBIGUITY_TOL {
            ambiguous = true;
        }
        if peak > r {
            mask |= 1 << i;
        }
    }
    Classification {
        signature: Signature(mask),
        ambiguous,
    }
}

/// `(-1)^{#S}`; the empty set has degree `+1`.
pub fn predicted_degree(s: Signature) -> i64 {
    if s.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Replays the excision bookkeeping for `n` humps in exact integer
/// arithmetic.
///
/// Starting from `deg(Λ^∅) = deg(B(0, r)) = 1` and `deg(Ω^J) = 0` for
/// non-empty `J`, each `deg(Λ^J)` is recovered from
/// `deg(Ω^J) = Σ_{K ⊆ J} deg(Λ^K)` and compared with `(-1)^{#J}`. The
/// alternating subset sum `Σ_{K ⊆ J} (-1)^{#K}` is checked to vanish for
/// every non-empty `J` as well.
pub fn degree_bookkeeping_check(n: usize) -> bool {
    if n == 0 || n > 20 {
        return false;
    }
    let full = 1u64 << n;
    let mut lambda = vec![0i64; full as usize];
    lambda[0] = 1;
    for j in 1..full {
        // proper submasks of j are numerically smaller, hence already known
        let mut sum = 0i64;
        let mut k = (j - 1) & j;
        loop {
            sum += lambda[k as usize];
            if k == 0 {
                break;
            }
            k = (k - 1) & j;
        }
        lambda[j as usize] = -sum;
    }
    (0..full).into_par_iter().all(|j| {
        let s = Signature(j);
        if lambda[j as usize] != predicted_degree(s) {
            return false;
        }
        let mut alternating = 0i64;
        let mut omega = 0i64;
        let mut k = j;
        loop {
            alternating += predicted_degree(Signature(k));
            omega += lambda[k as usize];
            if k == 0 {
                break;
            }
            k = (k - 1) & j;
        }
        let expected_omega = if j == 0 { 1 } else { 0 };
        omega == expected_omega && (j == 0 || alternating == 0)
    })
}

/// Largest `r` on a geometric grid of `r_grid` points in `[1e-10, 1e2]`
/// with `max_{0 < s <= r} g(s)/s <= lambda0 - delta`, the maximum taken
/// over 1024 uniform points of `(0, r]`.
pub fn choose_r(g: &dyn RealFn, lambda0: f64, delta: f64, r_grid: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < lambda0) || r_grid < 2 {
        return Err(Error::InvalidArgument(format!(
            "need 0 < delta < lambda0 and r_grid >= 2 (delta = {delta}, lambda0 = {lambda0})"
        )));
    }
    let bound = lambda0 - delta;
    let (lo, hi) = (1e-10f64, 1e2f64);
    let ratio = (hi / lo).ln() / (r_grid - 1) as f64;
    for k in (0..r_grid).rev() {
        let r = if k + 1 == r_grid { hi } else { lo * (ratio * k as f64).exp() };
        let mut worst = f64::NEG_INFINITY;
        for j in 1..=1024 {
            let s = r * j as f64 / 1024.0;
            worst = worst.max(g.call(s)? / s);
            if worst > bound {
                break;
            }
        }
        if worst <= bound {
            return Ok(r);
        }
    }
    Err(Error::NoAdmissibleR { bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RMode {
    /// `R = 2 * max sup-norm` over the solutions found.
    Empirical,
    Fixed(f64),
}

/// Where the small threshold comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RPolicy {
    Explicit(f64),
    /// [`choose_r`] with `delta = delta_fraction * lambda0`.
    Choose { delta_fraction: f64, r_grid: usize },
}

impl Default for RPolicy {
    fn default() -> Self {
        RPolicy::Choose {
            delta_fraction: 0.1,
            r_grid: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageEntry {
    pub subset: Signature,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityReport {
    pub mu: f64,
    pub humps: usize,
    pub r_used: f64,
    pub big_r_used: f64,
    pub big_r_mode: RMode,
    pub count: usize,
    pub predicted_lower_bound: u64,
    pub solutions: Vec<Solution>,
    pub coverage: Vec<CoverageEntry>,
    pub prediction_met: bool,
    pub ambiguous: usize,
    /// Validated solutions whose signature came out empty.
    pub inconsistent: usize,
    pub rejected: Vec<Rejected>,
    pub hypotheses: Option<HypothesisReport>,
    pub notes: Vec<String>,
}

impl MultiplicityReport {
    pub fn signatures(&self) -> Vec<Signature> {
        self.solutions.iter().filter_map(|s| s.signature).collect()
    }

    pub fn full_coverage(&self) -> bool {
        self.coverage.iter().all(|c| c.count > 0)
    }

    /// Attaches a hypothesis report, noting any condition that failed.
    pub fn with_hypotheses(mut self, h: HypothesisReport) -> Self {
        if !h.all_pass() {
            self.notes.push(format!(
                "hypotheses not verified: g0 {:?} (estimate {} vs lambda0 {}), g_inf {:?} (estimate {} vs max lambda1 {})",
                h.small_verdict,
                h.g0_estimate,
                h.lambda0,
                h.large_verdict,
                h.ginf_estimate,
                h.max_lambda1()
            ));
        }
        self.hypotheses = Some(h);
        self
    }
}

/// All non-empty subsets of `{1..n}`, by size then mask.
pub fn nonempty_subsets(n: usize) -> Vec<Signature> {
    let mut all: Vec<Signature> = (1..1u64 << n).map(Signature).collect();
    all.sort_by_key(|s| (s.len(), s.indices()));
    all
}

/// Isolates every positive solution in the slope range and classifies it.
pub fn solve_all(
    p: &Problem,
    slopes: SlopeRange,
    r: f64,
    mode: RMode,
    opts: &ShootingOptions,
) -> Result<MultiplicityReport> {
    let d = p.decomposition();
    let n = d.n();
    let search = isolate_roots(p, slopes, opts)?;
    let mut solutions = search.accepted;
    let mut ambiguous = 0;
    let mut inconsistent = 0;
    for sol in &mut solutions {
        let c = signature_of(&sol.trajectory.samples, d, r);
        sol.signature = Some(c.signature);
        sol.ambiguous = c.ambiguous;
        ambiguous += c.ambiguous as usize;
        inconsistent += c.signature.is_empty() as usize;
    }
    let coverage: Vec<CoverageEntry> = nonempty_subsets(n)
        .into_iter()
        .map(|subset| CoverageEntry {
            subset,
            count: solutions.iter().filter(|s| s.signature == Some(subset)).count(),
        })
        .collect();
    let max_sup = solutions.iter().map(|s| s.sup_norm).fold(0.0, f64::max);
    let big_r = match mode {
        RMode::Empirical => 2.0 * max_sup,
        RMode::Fixed(v) => v,
    };
    let bound = (1u64 << n) - 1;
    let count = solutions.len();
    let mut notes = vec![match mode {
        RMode::Empirical => "R is empirical: twice the largest observed sup-norm".to_string(),
        RMode::Fixed(_) => "R fixed by configuration".to_string(),
    }];
    if ambiguous > 0 {
        notes.push(format!("{ambiguous} solution(s) within {AMBIGUITY_TOL:e} of r; adjust r"));
    }
    if inconsistent > 0 {
        notes.push(format!("{inconsistent} validated solution(s) below r on every hump"));
    }
    if max_sup >= big_r && count > 0 {
        notes.push(format!("fixed R = {big_r} does not bound every solution"));
    }
    let full = coverage.iter().all(|c| c.count > 0);
    Ok(MultiplicityReport {
        mu: p.weight().mu(),
        humps: n,
        r_used: r,
        big_r_used: big_r,
        big_r_mode: mode,
        count,
        predicted_lower_bound: bound,
        prediction_met: count as u64 >= bound && full,
        solutions,
        coverage,
        ambiguous,
        inconsistent,
        rejected: search.rejected,
        hypotheses: None,
        notes,
    })
}

/// Resolves an [`RPolicy`] into a threshold, computing the hypothesis
/// report on the way when needed.
pub fn resolve_r(
    p: &Problem,
    policy: RPolicy,
    hyp: &HypothesisOptions,
) -> Result<(f64, HypothesisReport)> {
    let h = check_hypotheses(p.weight(), p.decomposition(), p.g(), hyp)?;
    let r = match policy {
        RPolicy::Explicit(r) => r,
        RPolicy::Choose {
            delta_fraction,
            r_grid,
        } => choose_r(p.g(), h.lambda0, delta_fraction * h.lambda0, r_grid)?,
    };
    Ok((r, h))
}

/// Hypothesis check, threshold selection and [`solve_all`] in one call.
pub fn run_experiment(
    p: &Problem,
    slopes: SlopeRange,
    policy: RPolicy,
    hyp: &HypothesisOptions,
    opts: &ShootingOptions,
) -> Result<MultiplicityReport> {
    let (r, h) = resolve_r(p, policy, hyp)?;
    Ok(solve_all(p, slopes, r, RMode::Empirical, opts)?.with_hypotheses(h))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub mu: f64,
    pub count: usize,
    pub full_coverage: bool,
    pub signatures: Vec<Signature>,
    pub slopes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub r_used: f64,
    pub rows: Vec<SweepRow>,
    /// Smallest grid value with full signature coverage. A grid estimate,
    /// not the theoretical threshold.
    pub mu_hat: Option<f64>,
}

/// Runs [`solve_all`] for each `mu` (in parallel) with a shared `r`.
pub fn sweep_mu(
    p: &Problem,
    mu_values: &[f64],
    slopes: SlopeRange,
    r: f64,
    opts: &ShootingOptions,
) -> Result<SweepReport> {
    if mu_values.iter().any(|&m| !(m > 0.0)) || mu_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "mu values must be positive and strictly increasing".into(),
        ));
    }
    let rows: Vec<SweepRow> = mu_values
        .par_iter()
        .map(|&mu| {
            let rep = solve_all(&p.with_mu(mu)?, slopes, r, RMode::Empirical, opts)?;
            Ok(SweepRow {
                mu,
                count: rep.count,
                full_coverage: rep.full_coverage(),
                signatures: rep.signatures(),
                slopes: rep.solutions.iter().map(|s| s.slope).collect(),
            })
        })
        .collect::<Result<_>>()?;
    let mu_hat = rows.iter().find(|r| r.full_coverage).map(|r| r.mu);
    Ok(SweepReport { r_used: r, rows, mu_hat })
}
