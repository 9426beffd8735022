//! Dormand–Prince 5(4) with step-size control and 4th-order dense output.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

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

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrator tolerances and limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on accepted + rejected steps.
    pub max_steps: usize,
    /// Smallest step relative to the integration span before giving up.
    pub min_step_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 2_000_000,
            min_step_fraction: 1e-14,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.rtol) || !ok(self.atol) || !ok(self.min_step_fraction) || self.max_steps == 0 {
            return Err(crate::error::invalid(
                "tolerances",
                "rtol, atol, min_step_fraction and max_steps must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// View of one accepted step for interpolation inside `[t0, t0 + h]`.
pub struct DenseStep<'a> {
    pub t0: f64,
    pub h: f64,
    y0: &'a [C64],
    y1: &'a [C64],
    k: &'a [Vec<C64>; 7],
}

impl DenseStep<'_> {
    /// Interpolated component `i` at time `t`.
    #[inline]
    pub fn component(&self, t: f64, i: usize) -> C64 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let h = self.h;
        let k = self.k;
        let ydiff = self.y1[i] - self.y0[i];
        let bspl = k[0][i] * h - ydiff;
        let r4 = ydiff - k[6][i] * h - bspl;
        let r5 = (k[0][i] * D1
            + k[2][i] * D3
            + k[3][i] * D4
            + k[4][i] * D5
            + k[5][i] * D6
            + k[6][i] * D7)
            * h;
        self.y0[i] + (ydiff + (bspl + (r4 + r5 * th1) * th) * th1) * th
    }

    pub fn full(&self, t: f64, out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.component(t, i);
        }
    }

    pub fn end_state(&self) -> &[C64] {
        self.y1
    }
}

/// Explicit adaptive integrator for `dy/dt = f(t, y)` on complex vectors.
pub struct Dopri5 {
    tol: Tolerances,
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    pub stats: IntegratorStats,
}

impl Dopri5 {
    pub fn new(tol: Tolerances, len: usize) -> Self {
        Self {
            tol,
            k: std::array::from_fn(|_| vec![ZERO; len]),
            y_stage: vec![ZERO; len],
            y_new: vec![ZERO; len],
            stats: IntegratorStats::default(),
        }
    }

    /// `‖v‖ / (atol + rtol ‖y‖)` in the Euclidean norm. For a density
    /// matrix this is the Hilbert–Schmidt norm, so the tolerance bounds the
    /// error of the state as a whole rather than an average per entry.
    fn scaled_norm(&self, v: &[C64], y: &[C64]) -> f64 {
        norm2(v) / (self.tol.atol + self.tol.rtol * norm2(y))
    }

    fn initial_step<F>(&mut self, f: &mut F, t0: f64, y: &[C64], span: f64) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        f(t0, y, &mut self.k[0]);
        self.stats.rhs_evals += 1;
        let d0 = self.scaled_norm(y, y);
        let d1 = self.scaled_norm(&self.k[0], y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            0.01 * d0 / d1
        }
        .min(span);
        for ((s, yi), ki) in self.y_stage.iter_mut().zip(y).zip(&self.k[0]) {
            *s = yi + ki * h0;
        }
        let (head, tail) = self.k.split_at_mut(1);
        f(t0 + h0, &self.y_stage, &mut tail[0]);
        self.stats.rhs_evals += 1;
        for (d, k0) in tail[0].iter_mut().zip(&head[0]) {
            *d = (*d - k0) / h0;
        }
        let d2 = self.scaled_norm(&self.k[1], y);
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrates from `t0` to `t_end`, overwriting `y`. `on_step` sees every
    /// accepted step (for dense sampling) and may stop the run by returning
    /// an error.
    pub fn integrate<F, S>(
        &mut self,
        mut f: F,
        t0: f64,
        y: &mut [C64],
        t_end: f64,
        mut on_step: S,
    ) -> Result<()>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
        S: FnMut(&DenseStep<'_>) -> Result<()>,
    {
        let span = t_end - t0;
        if span <= 0.0 {
            return Err(Error::Integration {
                t: t0,
                reason: "t_end must exceed t0".into(),
            });
        }
        let mut t = t0;
        let mut h = self.initial_step(&mut f, t0, y, span);
        // k[0] holds f(t0, y) after initial_step
        let beta = 0.04;
        let expo = 0.2 - beta * 0.75;
        let mut fac_old: f64 = 1e-4;
        let min_step = self.tol.min_step_fraction * span;
        let mut last = false;

        loop {
            if self.stats.accepted + self.stats.rejected >= self.tol.max_steps {
                return Err(Error::Integration {
                    t,
                    reason: format!("step budget of {} exhausted", self.tol.max_steps),
                });
            }
            if t + 1.01 * h >= t_end {
                h = t_end - t;
                last = true;
            }
            if h < min_step {
                return Err(Error::Integration {
                    t,
                    reason: format!("step size {h:e} underflow"),
                });
            }

            self.stages(&mut f, t, y, h);
            let err = self.error_norm(y, h);

            if err <= 1.0 && err.is_finite() {
                let mut fac = err.powf(expo) / fac_old.powf(beta);
                fac = (fac / 0.9).clamp(0.1, 5.0);
                let h_new = h / fac;
                fac_old = err.max(1e-4);
                self.stats.accepted += 1;

                {
                    let step = DenseStep {
                        t0: t,
                        h,
                        y0: y,
                        y1: &self.y_new,
                        k: &self.k,
                    };
                    on_step(&step)?;
                }
                y.copy_from_slice(&self.y_new);
                // first-same-as-last
                self.k.swap(0, 6);
                t += h;
                if last {
                    return Ok(());
                }
                h = h_new;
            } else {
                let fac = if err.is_finite() {
                    (err.powf(expo) / 0.9).min(10.0)
                } else {
                    10.0
                };
                h /= fac;
                last = false;
                self.stats.rejected += 1;
            }
        }
    }

    fn stages<F>(&mut self, f: &mut F, t: f64, y: &[C64], h: f64)
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let combos: [(f64, &[f64]); 6] = [
            (C2, &[A21]),
            (C3, &[A31, A32]),
            (C4, &[A41, A42, A43]),
            (C5, &[A51, A52, A53, A54]),
            (1.0, &[A61, A62, A63, A64, A65]),
            (1.0, &[A71, 0.0, A73, A74, A75, A76]),
        ];
        for (s, (c, a)) in combos.iter().enumerate() {
            let target = if s == 5 {
                &mut self.y_new
            } else {
                &mut self.y_stage
            };
            target.copy_from_slice(y);
            for (j, &aj) in a.iter().enumerate() {
                if aj == 0.0 {
                    continue;
                }
                let w = aj * h;
                for (tv, kv) in target.iter_mut().zip(&self.k[j]) {
                    *tv += kv * w;
                }
            }
            let input: &[C64] = if s == 5 { &self.y_new } else { &self.y_stage };
            let (_, rest) = self.k.split_at_mut(s + 1);
            f(t + c * h, input, &mut rest[0]);
            self.stats.rhs_evals += 1;
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn error_norm(&self, y: &[C64], h: f64) -> f64 {
        let k = &self.k;
        let mut sum = 0.0;
        for i in 0..y.len() {
            let e = (k[0][i] * E1
                + k[2][i] * E3
                + k[3][i] * E4
                + k[4][i] * E5
                + k[5][i] * E6
                + k[6][i] * E7)
                * h;
            sum += e.norm_sqr();
        }
        let scale = norm2(y).max(norm2(&self.y_new));
        sum.sqrt() / (self.tol.atol + self.tol.rtol * scale)
    }
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
