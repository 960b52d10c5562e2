//! Dense log-barrier interior-point method for
//!
//! ```text
//! minimize    max_i f_i(x)
//! subject to  r_j . x <= h_j,   x > 0 (optional),   sum x = 1
//! ```
//!
//! in epigraph form over `(x, t)`. Each centering step is a damped Newton
//! iteration on the equality-constrained barrier; the KKT system is
//! Jacobi-scaled and solved with a dense LU.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::surrogate::BoundRow;

/// Smooth convex function on an open domain; `value` is `+inf` outside it.
pub(crate) trait ConvexFn {
    fn value(&self, x: &[f64]) -> f64;
    /// Adds `weight * grad f(x)` to `grad` and `weight * hess f(x)` to the
    /// row-major `hess`.
    fn add_derivatives(&self, x: &[f64], weight: f64, grad: &mut [f64], hess: &mut [f64]);
}

pub(crate) struct Problem<'a> {
    pub objectives: Vec<&'a dyn ConvexFn>,
    pub rows: &'a [BoundRow],
    pub positivity: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Options {
    /// Stop once the barrier's duality-gap bound falls below this.
    pub gap_tol: f64,
    /// Newton iterations per centering stage.
    pub max_newton: usize,
    /// Return as soon as a centered `t` drops below this value.
    pub stop_below: Option<f64>,
    /// Lower clamp on the magnitude used to size the initial epigraph pad
    /// and barrier weight.
    pub value_floor: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
}

struct State {
    x: Vec<f64>,
    t: f64,
}

impl Problem<'_> {
    /// Barrier value, `+inf` outside the strict interior.
    fn barrier(&self, s: &State, tau: f64) -> f64 {
        if self.positivity && s.x.iter().any(|v| !(*v > 0.0)) {
            return f64::INFINITY;
        }
        let mut acc = tau * s.t;
        for f in &self.objectives {
            let gap = s.t - f.value(&s.x);
            if !(gap > 0.0) {
                return f64::INFINITY;
            }
            acc -= gap.ln();
        }
        for r in self.rows {
            let sl = r.slack(&s.x);
            if !(sl > 0.0) {
                return f64::INFINITY;
            }
            acc -= sl.ln();
        }
        if self.positivity {
            acc -= s.x.iter().map(|v| v.ln()).sum::<f64>();
        }
        acc
    }

    /// Newton direction for the barrier at `s`; returns `(dx, dt, decrement^2)`.
    fn newton(&self, s: &State, tau: f64) -> Option<(Vec<f64>, f64, f64)> {
        let k = s.x.len();
        let n = k + 1;
        let mut grad = vec![0.0; n];
        let mut h = vec![0.0; n * n];
        grad[k] = tau;
        let mut fg = vec![0.0; k];
        let mut fh = vec![0.0; k * k];
        for f in &self.objectives {
            let gap = s.t - f.value(&s.x);
            let inv = 1.0 / gap;
            fg.iter_mut().for_each(|v| *v = 0.0);
            fh.iter_mut().for_each(|v| *v = 0.0);
            f.add_derivatives(&s.x, 1.0, &mut fg, &mut fh);
            // -ln(t - f): grad = (grad f, -1)/gap
            for i in 0..k {
                grad[i] += fg[i] * inv;
            }
            grad[k] -= inv;
            let inv2 = inv * inv;
            for i in 0..k {
                for j in 0..k {
                    h[i * n + j] += fh[i * k + j] * inv + fg[i] * fg[j] * inv2;
                }
                h[i * n + k] -= fg[i] * inv2;
                h[k * n + i] -= fg[i] * inv2;
            }
            h[k * n + k] += inv2;
        }
        for r in self.rows {
            let inv = 1.0 / r.slack(&s.x);
            let inv2 = inv * inv;
            for i in 0..k {
                grad[i] += r.coeffs[i] * inv;
                for j in 0..k {
                    h[i * n + j] += r.coeffs[i] * r.coeffs[j] * inv2;
                }
            }
        }
        if self.positivity {
            for i in 0..k {
                grad[i] -= 1.0 / s.x[i];
                h[i * n + i] += 1.0 / (s.x[i] * s.x[i]);
            }
        }

        // KKT with the simplex equality, symmetric Jacobi scaling
        let dim = n + 1;
        let scale: Vec<f64> = (0..n)
            .map(|i| {
                let d = h[i * n + i];
                if d > 0.0 && d.is_finite() {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut kkt = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = scale[i] * h[i * n + j] * scale[j];
            }
            rhs[i] = -scale[i] * grad[i];
        }
        for i in 0..k {
            kkt[(i, n)] = scale[i];
            kkt[(n, i)] = scale[i];
        }
        let sol = kkt.lu().solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let dx: Vec<f64> = (0..k).map(|i| scale[i] * sol[i]).collect();
        let dt = scale[k] * sol[k];
        // project out rounding drift from the equality
        let drift = dx.iter().sum::<f64>() / k as f64;
        let dx: Vec<f64> = dx.iter().map(|v| v - drift).collect();
        let dec2 = -(dx.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>() + dt * grad[k]);
        Some((dx, dt, dec2))
    }

    fn center(&self, s: &mut State, tau: f64, max_newton: usize) -> Result<()> {
        let mut value = self.barrier(s, tau);
        for _ in 0..max_newton {
            let (dx, dt, dec2) = self
                .newton(s, tau)
                .ok_or_else(|| Error::Numerical("singular Newton system in barrier solver".into()))?;
            if dec2 / 2.0 <= 1e-10 {
                return Ok(());
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let trial = State {
                    x: s.x.iter().zip(&dx).map(|(x, d)| x + step * d).collect(),
                    t: s.t + step * dt,
                };
                let v = self.barrier(&trial, tau);
                if v <= value - 0.25 * step * dec2 {
                    *s = trial;
                    value = v;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // no further progress at this precision
                return Ok(());
            }
        }
        Ok(())
    }

    /// Runs the barrier stages from a strictly feasible `x0`.
    pub fn solve(&self, x0: &[f64], opts: &Options) -> Result<Outcome> {
        let k = x0.len();
        let start_max = self
            .objectives
            .iter()
            .map(|f| f.value(x0))
            .fold(f64::NEG_INFINITY, f64::max);
        if !start_max.is_finite() {
            return Err(Error::Numerical(
                "barrier start outside the objective domain".into(),
            ));
        }
        let magnitude = start_max.abs().max(opts.value_floor);
        let pad = 1e-3 * magnitude;
        let mut s = State {
            x: x0.to_vec(),
            t: start_max + pad,
        };
        let m = (self.objectives.len() + self.rows.len() + if self.positivity { k } else { 0 }) as f64;
        let mut tau = m / magnitude;
        loop {
            self.center(&mut s, tau, opts.max_newton)?;
            if let Some(limit) = opts.stop_below {
                if s.t < limit {
                    break;
                }
            }
            if m / tau <= opts.gap_tol {
                break;
            }
            tau *= 10.0;
        }
        Ok(Outcome { x: s.x })
    }
}
