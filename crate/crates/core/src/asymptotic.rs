//! Closed-form LCPA for the many-antenna regime with one user per task.
//!
//! With diagonal gains every user's rate depends on its own power only, so
//! at the optimum all powered users sit at a common predicted error `mu`.
//! For a given `mu` the power each user needs is explicit, and the total is
//! decreasing in `mu`; bisection on `mu` finds the level that spends `P`.

use std::time::Instant;

use crate::error::{out_of_range, Error, Result};
use crate::scenario::{Scenario, TaskSpec};
use crate::trace::{SolverTrace, TraceKind, TraceRecord};

/// Common predicted-error level of the powered users.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ErrorLevel(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Even at error level 1 the users would need more than `P`; the level-1
    /// powers were scaled down to fit the budget.
    BudgetInsufficient,
}

#[derive(Debug, Clone)]
pub struct AsymptoticSolution {
    pub powers: Vec<f64>,
    pub level: ErrorLevel,
    pub status: SolveStatus,
    pub trace: SolverTrace,
}

const MU_FLOOR: f64 = 1e-12;
const MU_TOL: f64 = 1e-8;

/// Power user `k` (serving `task`) needs to reach predicted error `mu`.
pub fn power_profile(mu: ErrorLevel, task: &TaskSpec, gain: f64, scenario: &Scenario) -> Result<f64> {
    if !(mu.0 > 0.0) {
        return Err(Error::Domain(format!(
            "error level must be positive, got {}",
            mu.0
        )));
    }
    let e = &task.error_params;
    if !(e.scale > 0.0 && e.exponent > 0.0) {
        return Err(out_of_range("error_params", "a > 0 and b > 0"));
    }
    if !(gain > 0.0) {
        return Err(out_of_range("gain", "G_kk > 0"));
    }
    Ok(profile_unchecked(mu.0, task, gain, scenario))
}

fn profile_unchecked(mu: f64, task: &TaskSpec, gain: f64, scenario: &Scenario) -> f64 {
    let e = &task.error_params;
    let needed = (mu / (e.safety * e.scale)).powf(-1.0 / e.exponent);
    let arg = task.data_size_bits * std::f64::consts::LN_2 / scenario.bits_per_rate_unit()
        * (needed - task.historical_samples);
    (scenario.noise_power / gain * arg.exp_m1()).max(0.0)
}

/// Checks the one-user-per-task structure and returns each user's task.
fn task_of_user(scenario: &Scenario) -> Result<Vec<usize>> {
    let mut owner = vec![usize::MAX; scenario.num_users];
    for (m, g) in scenario.groups.iter().enumerate() {
        if g.len() != 1 {
            return Err(Error::InfeasibleGrouping(format!(
                "task {} has {} users; the closed form needs exactly one",
                m + 1,
                g.len()
            )));
        }
        if owner[g[0]] != usize::MAX {
            return Err(Error::InfeasibleGrouping(format!(
                "user {} serves more than one task",
                g[0] + 1
            )));
        }
        owner[g[0]] = m;
    }
    Ok(owner)
}

pub fn solve(scenario: &Scenario, diag_gains: &[f64]) -> Result<AsymptoticSolution> {
    let start = Instant::now();
    let owner = task_of_user(scenario)?;
    if diag_gains.len() != scenario.num_users {
        return Err(Error::Invalid("one diagonal gain per user required".into()));
    }
    for (k, &g) in diag_gains.iter().enumerate() {
        let e = &scenario.tasks[owner[k]].error_params;
        if !(e.scale > 0.0 && e.exponent > 0.0) {
            return Err(out_of_range(format!("tasks.{}", owner[k] + 1), "a > 0 and b > 0"));
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(out_of_range("gain", format!("G_kk > 0 for user {}", k + 1)));
        }
    }
    let profile = |mu: f64| -> Vec<f64> {
        (0..scenario.num_users)
            .map(|k| profile_unchecked(mu, &scenario.tasks[owner[k]], diag_gains[k], scenario))
            .collect()
    };
    let budget = scenario.total_power;
    let mut trace = SolverTrace::new(TraceKind::Bisection);

    let at_one = profile(1.0);
    let spent: f64 = at_one.iter().sum();
    if spent > budget {
        let powers = if spent.is_finite() {
            at_one.iter().map(|p| p * budget / spent).collect()
        } else {
            // limit of the proportional scaling: unbounded demands share P
            let n = at_one.iter().filter(|p| p.is_infinite()).count() as f64;
            at_one
                .iter()
                .map(|p| if p.is_infinite() { budget / n } else { 0.0 })
                .collect()
        };
        trace.push(TraceRecord {
            iteration: 0,
            objective: 1.0,
            residual: spent - budget,
            step: 0.0,
            elapsed: start.elapsed().as_secs_f64(),
            restarted: false,
        });
        return Ok(AsymptoticSolution {
            powers,
            level: ErrorLevel(1.0),
            status: SolveStatus::BudgetInsufficient,
            trace,
        });
    }

    // Sum of powers is decreasing in mu: overspending means mu is too low.
    let (mut lo, mut hi) = (MU_FLOOR, 1.0);
    let mut iteration = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let excess = profile(mid).iter().sum::<f64>() - budget;
        if excess > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iteration += 1;
        trace.push(TraceRecord {
            iteration,
            objective: hi,
            residual: excess,
            step: hi - lo,
            elapsed: start.elapsed().as_secs_f64(),
            restarted: false,
        });
        // past the nominal tolerance keep halving until the budget is spent
        // to within rounding
        if hi - lo < MU_TOL && excess.abs() <= 1e-12 * budget {
            break;
        }
    }

    let mut powers = profile(hi);
    let total: f64 = powers.iter().sum();
    if total > 0.0 {
        for p in &mut powers {
            *p *= budget / total;
        }
    } else {
        powers = vec![budget / scenario.num_users as f64; scenario.num_users];
    }
    Ok(AsymptoticSolution {
        powers,
        level: ErrorLevel(hi),
        status: SolveStatus::Optimal,
        trace,
    })
}
