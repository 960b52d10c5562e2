//! Entropic mirror-prox for the diagonal-gain LCPA problem.
//!
//! With diagonal gains the min-max problem `min_p max_m beta_m Xi_m(p)` is
//! convex, and it is the saddle problem
//! `min_p max_alpha sum_m alpha_m beta_m Xi_m(p)` over the power simplex
//! (radius `P`) and the task-weight simplex (radius 1). Both blocks use the
//! entropy as distance-generating function, so every proximal step is a
//! multiplicative update followed by a normalization.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::scenario::Scenario;
use crate::trace::{SolverTrace, TraceKind, TraceRecord};

/// Samples per nat of SNR for task `m`: `xi B T / (D_m ln 2)`.
fn per_nat(scenario: &Scenario, task: usize) -> f64 {
    scenario.bits_per_rate_unit() / (scenario.tasks[task].data_size_bits * std::f64::consts::LN_2)
}

fn bracket(powers: &[f64], diag_gains: &[f64], scenario: &Scenario, task: usize) -> f64 {
    let t = &scenario.tasks[task];
    let per_rate = scenario.bits_per_rate_unit() / t.data_size_bits;
    scenario.groups[task]
        .iter()
        .map(|&k| {
            let snr = diag_gains[k] * powers[k] / scenario.noise_power;
            per_rate * snr.ln_1p() / std::f64::consts::LN_2
        })
        .sum::<f64>()
        + t.historical_samples
}

/// Unweighted predicted error of `task` under diagonal gains; `+inf` when the
/// task would have no samples at all.
pub fn xi(powers: &[f64], diag_gains: &[f64], scenario: &Scenario, task: usize) -> f64 {
    let e = &scenario.tasks[task].error_params;
    let v = bracket(powers, diag_gains, scenario, task);
    if v > 0.0 {
        e.scale * v.powf(-e.exponent)
    } else if e.exponent == 0.0 {
        e.scale
    } else {
        f64::INFINITY
    }
}

/// Gradient of [`xi`] with respect to the powers (W). Every entry is `<= 0`
/// and entries of users outside the task's group are zero.
pub fn grad_xi(powers: &[f64], diag_gains: &[f64], scenario: &Scenario, task: usize) -> Vec<f64> {
    let mut out = vec![0.0; powers.len()];
    add_grad_xi(powers, diag_gains, scenario, task, 1.0, &mut out);
    out
}

fn add_grad_xi(
    powers: &[f64],
    diag_gains: &[f64],
    scenario: &Scenario,
    task: usize,
    weight: f64,
    out: &mut [f64],
) {
    let e = &scenario.tasks[task].error_params;
    let c = per_nat(scenario, task);
    let v = bracket(powers, diag_gains, scenario, task);
    let outer = weight * e.scale * e.exponent * c * v.powf(-e.exponent - 1.0);
    for &k in &scenario.groups[task] {
        out[k] -= outer / (scenario.noise_power / diag_gains[k] + powers[k]);
    }
}

/// `max_m beta_m Xi_m(p)`.
pub fn primal_objective(powers: &[f64], diag_gains: &[f64], scenario: &Scenario) -> f64 {
    (0..scenario.num_tasks())
        .map(|m| scenario.tasks[m].error_params.safety * xi(powers, diag_gains, scenario, m))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smoothness constants of the saddle function on the region where the
/// error level is at most `mu0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessConstants {
    pub l1: f64,
    pub l2: f64,
    pub mu0: f64,
    /// `H_m`: Euclidean norm of the group-masked diagonal gains.
    pub h: Vec<f64>,
}

pub fn lipschitz_constants(scenario: &Scenario, diag_gains: &[f64], mu0: f64) -> Result<SmoothnessConstants> {
    if !(mu0 > 0.0 && mu0 <= 1.0) {
        return Err(out_of_range("mu0", "0 < mu0 <= 1"));
    }
    let sigma2 = scenario.noise_power;
    let h: Vec<f64> = scenario
        .groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|&k| diag_gains[k] * diag_gains[k])
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let (mut l1, mut l2) = (0.0f64, 0.0f64);
    for (m, t) in scenario.tasks.iter().enumerate() {
        let e = &t.error_params;
        let c = per_nat(scenario, m);
        let ratio = mu0 / (e.safety * e.scale);
        let lead = e.safety * e.scale * e.exponent * c * ratio.powf(1.0 + 1.0 / e.exponent);
        l2 = l2.max(lead * h[m] / sigma2);
        let tail = (e.exponent + 1.0) * c * h[m] * ratio.powf(1.0 / e.exponent);
        for &g in diag_gains {
            l1 = l1.max(lead * g / (sigma2 * sigma2) * (g + tail));
        }
    }
    if !(l1.is_finite() && l2.is_finite()) {
        return Err(Error::Numerical("smoothness constants overflow".into()));
    }
    Ok(SmoothnessConstants { l1, l2, mu0, h })
}

/// Entropic proximal step on the simplex of radius `sum(base)`:
/// `out_k = r base_k exp(-step g_k) / sum_i base_i exp(-step g_i)`.
/// For an ascent step pass the negated gradient.
pub fn kl_prox(base: &[f64], gradient: &[f64], step: f64) -> Vec<f64> {
    let radius: f64 = base.iter().sum();
    let first = gradient.first().map_or(0.0, |g| step * g);
    if gradient.iter().all(|g| step * g == first) {
        return base.to_vec();
    }
    let logs: Vec<f64> = base
        .iter()
        .zip(gradient)
        .map(|(b, g)| b.ln() - step * g)
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    let floor = radius * f64::MIN_POSITIVE;
    let mut out: Vec<f64> = w.iter().map(|v| (radius * v / total).max(floor)).collect();
    // absorb the rounding error in the largest entry
    let drift = radius - out.iter().sum::<f64>();
    let big = (0..out.len())
        .max_by(|&i, &j| out[i].total_cmp(&out[j]))
        .unwrap_or(0);
    if let Some(v) = out.get_mut(big) {
        *v += drift;
    }
    out
}

/// `sum x ln(x / y)`, the Bregman distance of the entropy.
fn kl(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| if *a > 0.0 { a * (a / b).ln() } else { 0.0 })
        .sum()
}

/// Primal and dual iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleState {
    /// Powers (W), summing to `P`.
    pub p: Vec<f64>,
    /// Task weights, summing to 1.
    pub alpha: Vec<f64>,
}

impl SaddleState {
    pub fn uniform(num_users: usize, num_tasks: usize, total_power: f64) -> Self {
        Self {
            p: vec![total_power / num_users as f64; num_users],
            alpha: vec![1.0 / num_tasks as f64; num_tasks],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Constant step; the divergence guard halves it when needed.
    Fixed,
    /// Backtracking on the extragradient error term, with mild growth after
    /// every accepted step.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MirrorProxOptions {
    /// Step size (the initial one under [`StepRule::Adaptive`]); `None`
    /// means `1e3 / L2` at `mu0`.
    pub eta: Option<f64>,
    pub mu0: f64,
    pub step_rule: StepRule,
    pub max_iters: usize,
    /// Stop when `max(|dp|_inf / P, |dalpha|_inf)` falls below this.
    pub stop_tol: f64,
    /// Stop as soon as the primal objective reaches this value.
    pub target_objective: Option<f64>,
    /// Consecutive objective increases that trigger a restart.
    pub divergence_window: usize,
}

impl Default for MirrorProxOptions {
    fn default() -> Self {
        Self {
            eta: None,
            mu0: 0.1,
            step_rule: StepRule::Adaptive,
            max_iters: 100_000,
            stop_tol: 1e-8,
            target_objective: None,
            divergence_window: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MirrorProxSolution {
    /// Best primal point seen (last iterate or the running average).
    pub powers: Vec<f64>,
    pub objective: f64,
    /// Final iterate.
    pub state: SaddleState,
    pub iterations: usize,
    pub converged: bool,
    pub eta: f64,
    pub trace: SolverTrace,
}

struct Oracle<'a> {
    scenario: &'a Scenario,
    diag: &'a [f64],
}

impl Oracle<'_> {
    /// Descent direction for both blocks: `(grad_p, -grad_alpha)` and the
    /// weighted errors `beta_m Xi_m(p)`.
    fn field(&self, s: &SaddleState) -> (Vec<f64>, Vec<f64>) {
        let mut gp = vec![0.0; s.p.len()];
        let mut ga = vec![0.0; s.alpha.len()];
        for (m, a) in s.alpha.iter().enumerate() {
            let beta = self.scenario.tasks[m].error_params.safety;
            add_grad_xi(&s.p, self.diag, self.scenario, m, a * beta, &mut gp);
            ga[m] = -beta * xi(&s.p, self.diag, self.scenario, m);
        }
        (gp, ga)
    }

    fn step(&self, base: &SaddleState, field: &(Vec<f64>, Vec<f64>), eta: f64) -> SaddleState {
        SaddleState {
            p: kl_prox(&base.p, &field.0, eta),
            alpha: kl_prox(&base.alpha, &field.1, eta),
        }
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn solve(
    scenario: &Scenario,
    diag_gains: &[f64],
    opts: &MirrorProxOptions,
) -> Result<MirrorProxSolution> {
    let start = Instant::now();
    let k = scenario.num_users;
    let m = scenario.num_tasks();
    if diag_gains.len() != k {
        return Err(Error::Invalid("one diagonal gain per user required".into()));
    }
    if let Some(k) = diag_gains.iter().position(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(out_of_range("gain", format!("G_kk > 0 for user {}", k + 1)));
    }
    if scenario.has_rate_bounds() {
        return Err(Error::Incompatible {
            scheme: "mirror_prox".into(),
            reason: "per-user sample bounds are not supported".into(),
        });
    }
    let budget = scenario.total_power;
    let mut eta = match opts.eta {
        Some(eta) if eta > 0.0 && eta.is_finite() => eta,
        Some(_) => return Err(out_of_range("eta", "eta > 0")),
        None => 1e3 / lipschitz_constants(scenario, diag_gains, opts.mu0)?.l2,
    };
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Numerical("default step size is not finite".into()));
    }

    let oracle = Oracle {
        scenario,
        diag: diag_gains,
    };
    let mut trace = SolverTrace::new(TraceKind::MirrorProx);
    let mut w = SaddleState::uniform(k, m, budget);
    let mut current = primal_objective(&w.p, diag_gains, scenario);
    trace.push(TraceRecord {
        iteration: 0,
        objective: current,
        residual: 0.0,
        step: eta,
        elapsed: start.elapsed().as_secs_f64(),
        restarted: false,
    });
    let mut best = (w.p.clone(), current);
    let mut avg = vec![0.0; k];
    let mut avg_weight = 0.0;
    let mut rising = 0;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        let fw = oracle.field(&w);
        let (z, next) = loop {
            let z = oracle.step(&w, &fw, eta);
            let fz = oracle.field(&z);
            let next = oracle.step(&w, &fz, eta);
            if opts.step_rule == StepRule::Fixed {
                break (z, next);
            }
            let dp: Vec<f64> = z.p.iter().zip(&next.p).map(|(a, b)| a - b).collect();
            let da: Vec<f64> = z.alpha.iter().zip(&next.alpha).map(|(a, b)| a - b).collect();
            let gp: Vec<f64> = fz.0.iter().zip(&fw.0).map(|(a, b)| a - b).collect();
            let ga: Vec<f64> = fz.1.iter().zip(&fw.1).map(|(a, b)| a - b).collect();
            let error = eta * (dot(&gp, &dp) + dot(&ga, &da));
            let room =
                kl(&z.p, &w.p) + kl(&next.p, &z.p) + kl(&z.alpha, &w.alpha) + kl(&next.alpha, &z.alpha);
            if error <= room || eta < 1e-300 {
                break (z, next);
            }
            eta *= 0.5;
        };
        let moved = (sup_dist(&next.p, &w.p) / budget).max(sup_dist(&next.alpha, &w.alpha));
        let value = primal_objective(&next.p, diag_gains, scenario);
        avg.iter_mut().zip(&z.p).for_each(|(a, p)| *a += eta * p);
        avg_weight += eta;
        if value < best.1 {
            best = (next.p.clone(), value);
        }

        rising = if value > current { rising + 1 } else { 0 };
        let restart = opts.step_rule == StepRule::Fixed && rising >= opts.divergence_window;
        trace.push(TraceRecord {
            iteration: it,
            objective: value,
            residual: moved,
            step: eta,
            elapsed: start.elapsed().as_secs_f64(),
            restarted: restart,
        });
        if restart {
            eta *= 0.5;
            w = SaddleState::uniform(k, m, budget);
            current = primal_objective(&w.p, diag_gains, scenario);
            rising = 0;
            avg.iter_mut().for_each(|a| *a = 0.0);
            avg_weight = 0.0;
            continue;
        }
        w = next;
        current = value;
        if opts.step_rule == StepRule::Adaptive {
            eta *= 1.1;
        }
        if opts.target_objective.is_some_and(|t| best.1 <= t) {
            converged = true;
            break;
        }
        if moved < opts.stop_tol {
            converged = true;
            break;
        }
    }

    if avg_weight > 0.0 {
        let mut mean: Vec<f64> = avg.iter().map(|a| a / avg_weight).collect();
        let total: f64 = mean.iter().sum();
        mean.iter_mut().for_each(|v| *v *= budget / total);
        let value = primal_objective(&mean, diag_gains, scenario);
        if value < best.1 {
            best = (mean, value);
        }
    }
    Ok(MirrorProxSolution {
        powers: best.0,
        objective: best.1,
        state: w,
        iterations,
        converged,
        eta,
        trace,
    })
}

#[cfg(test)]
mod tests;
