//! Majorization-minimization LCPA for interference-coupled gains.
//!
//! The exact per-task error is not convex in the powers because every
//! user's interference sits inside a logarithm. Around the current iterate
//! the interference term is replaced by its tangent, which yields a convex
//! upper bound that touches the exact error at the iterate. Minimizing the
//! worst weighted surrogate over the power simplex (and the per-user sample
//! bounds, which are linear in the powers) gives the next iterate, so the
//! exact worst-case error never increases.

mod barrier;
mod surrogate;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::GainMatrix;
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::trace::{SolverTrace, TraceKind, TraceRecord};

use barrier::{ConvexFn, Options, Problem};
use surrogate::{Model, SurrogateTask};

pub use surrogate::{
    bound_residual, objective, phi, surrogate_phi, BoundRow, RateBoundRows, SurrogateContext,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MmOptions {
    /// Outer MM iterations.
    pub max_iters: usize,
    /// Stop when the worst-case error changes by less than this.
    pub stop_tol: f64,
    /// Accuracy of each convex subproblem, in objective units.
    pub tol_inner: f64,
    /// Newton iterations per barrier stage.
    pub max_newton: usize,
}

impl Default for MmOptions {
    fn default() -> Self {
        Self {
            max_iters: 10,
            stop_tol: 1e-7,
            tol_inner: 1e-7,
            max_newton: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MmSolution {
    pub powers: Vec<f64>,
    /// `max_m beta_m Phi_m` at `powers`.
    pub objective: f64,
    pub iterations: usize,
    pub trace: SolverTrace,
}

/// Scaled anchor interference `1 + I*_k` per user.
fn anchor_gaps(model: &Model, x: &[f64]) -> Vec<f64> {
    (0..model.k).map(|k| 1.0 + model.interference(k, x)).collect()
}

fn surrogate_max(model: &Model, gaps: &[f64], x: &[f64]) -> f64 {
    (0..model.num_tasks())
        .map(|m| {
            SurrogateTask {
                model,
                task: m,
                anchor_gap: gaps,
            }
            .value(x)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `-x_k` as an epigraph function (phase one pushes every coordinate up).
struct NegCoord(usize);

impl ConvexFn for NegCoord {
    fn value(&self, x: &[f64]) -> f64 {
        -x[self.0]
    }

    fn add_derivatives(&self, _x: &[f64], weight: f64, grad: &mut [f64], _hess: &mut [f64]) {
        grad[self.0] -= weight;
    }
}

/// Maximizes the smallest slack over the rows and the coordinates of the
/// simplex. Returns the point, or the bound that cannot be met.
fn phase_one(rows: &RateBoundRows, k: usize, tol: f64) -> Result<Vec<f64>> {
    let uniform = vec![1.0 / k as f64; k];
    let coords: Vec<NegCoord> = (0..k).map(NegCoord).collect();
    let mut objectives: Vec<&dyn ConvexFn> = rows.rows.iter().map(|r| r as &dyn ConvexFn).collect();
    objectives.extend(coords.iter().map(|c| c as &dyn ConvexFn));
    let problem = Problem {
        objectives,
        rows: &[],
        positivity: false,
    };
    let out = problem.solve(
        &uniform,
        &Options {
            gap_tol: tol,
            max_newton: 100,
            stop_below: Some(-1e-3),
            value_floor: 1.0,
        },
    )?;
    let worst = rows
        .rows
        .iter()
        .map(|r| (r, -r.slack(&out.x)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let margin = out.x.iter().copied().fold(f64::INFINITY, f64::min);
    if let Some((row, violation)) = worst {
        if violation >= -tol || margin <= 0.0 {
            return Err(Error::BoundsInfeasible {
                user: row.user + 1,
                kind: row.kind,
                violation,
            });
        }
    }
    Ok(out.x)
}

/// One convex subproblem in scaled variables. `center` is a strictly
/// feasible reference point used to pull the start off the boundary.
fn inner_scaled(
    model: &Model,
    rows: &RateBoundRows,
    anchor: &[f64],
    center: &[f64],
    opts: &MmOptions,
) -> Result<Vec<f64>> {
    let k = model.k;
    let gaps = anchor_gaps(model, anchor);
    let tasks: Vec<SurrogateTask> = (0..model.num_tasks())
        .map(|m| SurrogateTask {
            model,
            task: m,
            anchor_gap: &gaps,
        })
        .collect();
    let at_anchor = surrogate_max(model, &gaps, anchor);

    let interior = |x: &[f64]| {
        x.iter().all(|v| *v > 0.0)
            && rows.rows.iter().all(|r| r.slack(x) > 0.0)
            && surrogate_max(model, &gaps, x).is_finite()
    };
    let mut theta = 1e-3;
    let mut start = None;
    for _ in 0..60 {
        let x: Vec<f64> = (0..k)
            .map(|i| (1.0 - theta) * anchor[i] + theta * center[i])
            .collect();
        if interior(&x) {
            start = Some(x);
            break;
        }
        theta = if theta < 0.5 { (theta * 4.0).min(1.0) } else { 1.0 };
        if theta >= 1.0 && interior(center) {
            start = Some(center.to_vec());
            break;
        }
    }
    let start =
        start.ok_or_else(|| Error::Numerical("no strictly feasible start for the subproblem".into()))?;

    let problem = Problem {
        objectives: tasks.iter().map(|t| t as &dyn ConvexFn).collect(),
        rows: &rows.rows,
        positivity: true,
    };
    let out = problem.solve(
        &start,
        &Options {
            gap_tol: 1e-2 * opts.tol_inner,
            max_newton: opts.max_newton,
            stop_below: None,
            value_floor: 1e-12,
        },
    )?;
    let mut x = out.x;
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    let feasible_anchor = rows.max_violation(anchor) <= 0.0;
    if feasible_anchor && !(surrogate_max(model, &gaps, &x) <= at_anchor) {
        return Ok(anchor.to_vec());
    }
    Ok(x)
}

/// Minimizes the worst weighted surrogate around `context.anchor`.
pub fn inner_solve(
    context: &SurrogateContext,
    gains: &GainMatrix,
    scenario: &Scenario,
    opts: &MmOptions,
) -> Result<Vec<f64>> {
    let model = Model::new(gains, scenario);
    let k = model.k;
    if k == 1 {
        return Ok(vec![scenario.total_power]);
    }
    let rows = RateBoundRows::from_model(&model, scenario);
    let anchor: Vec<f64> = context.anchor.iter().map(|p| p / scenario.total_power).collect();
    let center = if rows.is_empty() {
        vec![1.0 / k as f64; k]
    } else {
        phase_one(&rows, k, 1e-10)?
    };
    let x = inner_scaled(&model, &rows, &anchor, &center, opts)?;
    Ok(x.iter().map(|v| v * scenario.total_power).collect())
}

/// Runs MM from uniform powers (or from the most interior point of the
/// sample bounds when uniform powers violate them).
pub fn solve(scenario: &Scenario, gains: &GainMatrix, opts: &MmOptions) -> Result<MmSolution> {
    let start = Instant::now();
    let k = scenario.num_users;
    if gains.dim() != k {
        return Err(Error::Invalid(format!(
            "gain matrix is {}x{} for {k} users",
            gains.dim(),
            gains.dim()
        )));
    }
    let budget = scenario.total_power;
    let mut trace = SolverTrace::new(TraceKind::Mm);
    let record = |trace: &mut SolverTrace, it: usize, p: &[f64]| {
        trace.push(TraceRecord {
            iteration: it,
            objective: objective(p, gains, scenario),
            residual: bound_residual(p, gains, scenario),
            step: f64::NAN,
            elapsed: start.elapsed().as_secs_f64(),
            restarted: false,
        })
    };

    if k == 1 {
        let p = vec![budget];
        record(&mut trace, 0, &p);
        let obj = objective(&p, gains, scenario);
        return Ok(MmSolution {
            powers: p,
            objective: obj,
            iterations: 1,
            trace,
        });
    }

    let model = Model::new(gains, scenario);
    let rows = RateBoundRows::from_model(&model, scenario);
    let uniform = vec![1.0 / k as f64; k];
    let center = if rows.is_empty() {
        uniform.clone()
    } else {
        phase_one(&rows, k, 1e-10)?
    };
    let mut x = if rows.max_violation(&uniform) > 0.0 {
        center.clone()
    } else {
        uniform
    };
    let to_watts = |x: &[f64]| x.iter().map(|v| v * budget).collect::<Vec<f64>>();
    record(&mut trace, 0, &to_watts(&x));
    let mut current = model.max_weighted_phi(&x);
    let mut iterations = 0;
    for it in 1..=opts.max_iters {
        let next = inner_scaled(&model, &rows, &x, &center, opts)?;
        let value = model.max_weighted_phi(&next);
        iterations = it;
        record(&mut trace, it, &to_watts(&next));
        let change = (current - value).abs();
        x = next;
        current = value;
        if change < opts.stop_tol {
            break;
        }
    }
    let powers = to_watts(&x);
    Ok(MmSolution {
        objective: objective(&powers, gains, scenario),
        powers,
        iterations,
        trace,
    })
}
