//! Dormand–Prince 5(4) integrator with dense output.
//!
//! Fixed-size states (`[f64; N]`) keep the hot loop allocation free. The
//! driver can be told to land exactly on a sorted list of stop points,
//! which is how trajectories are sampled on an output grid and how
//! known kinks of the right-hand side are stepped across cleanly.

use std::ops::ControlFlow;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th minus embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Continuous extension (Hairer, Nørsett & Wanner).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    /// Steps smaller than `min_step_factor * |t1 - t0|` are a failure.
    pub min_step_factor: f64,
    pub max_steps: usize,
}

impl Default for DormandPrince {
    fn default() -> Self {
        DormandPrince {
            rtol: 1e-10,
            atol: 1e-12,
            min_step_factor: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// One accepted step, handed to the observer.
pub struct Step<'a, const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    /// Derivative at `t1`.
    pub dy1: [f64; N],
    /// Index into the stop list when `t1` is a stop point.
    pub stop: Option<usize>,
    cont: &'a [[f64; N]; 5],
}

impl<const N: usize> Step<'_, N> {
    /// Dense-output value at `t` in `[t0, t1]`.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = if h == 0.0 { 1.0 } else { (t - self.t0) / h };
        let s1 = 1.0 - s;
        let c = self.cont;
        std::array::from_fn(|i| {
            c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    /// `true` when the observer stopped the integration early.
    pub halted: bool,
    pub stats: Stats,
}

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

impl DormandPrince {
    pub fn new(rtol: f64, atol: f64) -> Self {
        DormandPrince {
            rtol,
            atol,
            ..Default::default()
        }
    }

    fn scaled_norm<const N: usize>(&self, v: &[f64; N], ya: &[f64; N], yb: &[f64; N]) -> f64 {
        let sum: f64 = (0..N)
            .map(|i| {
                let sc = self.atol + self.rtol * ya[i].abs().max(yb[i].abs());
                (v[i] / sc).powi(2)
            })
            .sum();
        (sum / N as f64).sqrt()
    }

    fn initial_step<const N: usize, F>(
        &self,
        f: &mut F,
        t0: f64,
        y0: &[f64; N],
        f0: &[f64; N],
        span: f64,
        stats: &mut Stats,
    ) -> Result<f64>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    {
        let d0 = self.scaled_norm(y0, y0, y0);
        let d1 = self.scaled_norm(f0, y0, y0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            (0.01 * d0 / d1).min(span)
        };
        let y1 = axpy(y0, &[(h0, f0)]);
        let f1 = f(t0 + h0, &y1)?;
        stats.evaluations += 1;
        let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
        let d2 = self.scaled_norm(&diff, y0, y0) / h0;
        let m = d1.max(d2);
        let h1 = if !m.is_finite() {
            h0 * 1e-3
        } else if m <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / m).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(span))
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
    ///
    /// Every point of `stops` inside `(t0, t1]` is hit exactly; `stops`
    /// must be sorted ascending. The observer sees each accepted step and
    /// may break to halt.
    pub fn integrate<const N: usize, F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        stops: &[f64],
        mut observer: O,
    ) -> Result<Outcome<N>>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
        O: FnMut(&Step<'_, N>) -> ControlFlow<()>,
    {
        if t1.partial_cmp(&t0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidArgument(format!(
                "integration interval [{t0}, {t1}] is empty"
            )));
        }
        let span = t1 - t0;
        let h_min = self.min_step_factor * span;
        let mut stats = Stats::default();

        let mut next_stop = stops.partition_point(|&s| s <= t0);
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y)?;
        stats.evaluations += 1;
        let mut h = self.initial_step(&mut f, t, &y, &k1, span, &mut stats)?;
        let mut reject_streak = false;

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::TooManySteps(self.max_steps));
            }
            // Target is the next stop point, or the end.
            let (target, target_stop) = match stops.get(next_stop) {
                Some(&s) if s < t1 => (s, Some(next_stop)),
                _ => (t1, None),
            };
            let remaining = target - t;
            let lands = h >= remaining * (1.0 - 1e-12);
            let h_try = if lands { remaining } else { h };
            if h_try < h_min && !lands {
                return Err(Error::StepUnderflow { x: t, h: h_try });
            }

            let k2 = f(t + C2 * h_try, &axpy(&y, &[(h_try * A21, &k1)]))?;
            let k3 = f(
                t + C3 * h_try,
                &axpy(&y, &[(h_try * A31, &k1), (h_try * A32, &k2)]),
            )?;
            let k4 = f(
                t + C4 * h_try,
                &axpy(&y, &[(h_try * A41, &k1), (h_try * A42, &k2), (h_try * A43, &k3)]),
            )?;
            let k5 = f(
                t + C5 * h_try,
                &axpy(
                    &y,
                    &[
                        (h_try * A51, &k1),
                        (h_try * A52, &k2),
                        (h_try * A53, &k3),
                        (h_try * A54, &k4),
                    ],
                ),
            )?;
            let t_new = if lands { target } else { t + h_try };
            let y6 = axpy(
                &y,
                &[
                    (h_try * A61, &k1),
                    (h_try * A62, &k2),
                    (h_try * A63, &k3),
                    (h_try * A64, &k4),
                    (h_try * A65, &k5),
                ],
            );
            let k6 = f(t_new, &y6)?;
            let y_new = axpy(
                &y,
                &[
                    (h_try * A71, &k1),
                    (h_try * A73, &k3),
                    (h_try * A74, &k4),
                    (h_try * A75, &k5),
                    (h_try * A76, &k6),
                ],
            );
            let k7 = f(t_new, &y_new)?;
            stats.evaluations += 6;

            let err_vec: [f64; N] = std::array::from_fn(|i| {
                h_try
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i])
            });
            let err = if all_finite(&y_new) && all_finite(&k7) {
                self.scaled_norm(&err_vec, &y, &y_new)
            } else {
                f64::INFINITY
            };

            if !err.is_finite() || err > 1.0 {
                stats.rejected += 1;
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 1.0)
                } else {
                    0.2
                };
                h = h_try * fac;
                reject_streak = true;
                if h < h_min {
                    return Err(Error::StepUnderflow { x: t, h });
                }
                continue;
            }

            stats.accepted += 1;
            let r1 = y;
            let r2: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let r3: [f64; N] = std::array::from_fn(|i| h_try * k1[i] - r2[i]);
            let r4: [f64; N] = std::array::from_fn(|i| r2[i] - h_try * k7[i] - r3[i]);
            let r5: [f64; N] = std::array::from_fn(|i| {
                h_try
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i])
            });
            let cont = [r1, r2, r3, r4, r5];
            let step = Step {
                t0: t,
                t1: t_new,
                y0: y,
                y1: y_new,
                dy1: k7,
                stop: if lands { target_stop } else { None },
                cont: &cont,
            };
            let flow = observer(&step);

            t = t_new;
            y = y_new;
            k1 = k7;
            if lands {
                match target_stop {
                    Some(i) => next_stop = i + 1,
                    None => {
                        return Ok(Outcome {
                            t,
                            y,
                            halted: false,
                            stats,
                        })
                    }
                }
            }
            if flow.is_break() {
                return Ok(Outcome {
                    t,
                    y,
                    halted: true,
                    stats,
                });
            }

            let mut fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
            if reject_streak {
                fac = fac.min(1.0);
            }
            reject_streak = false;
            // Landing on a stop truncates a step; grow from the controller's
            // proposal rather than from the shortened step.
            h = if lands { h.max(h_try * fac) } else { h_try * fac };
        }
    }
}
