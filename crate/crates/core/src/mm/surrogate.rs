//! Exact objective, its concave-bracket surrogate, and the linear rows that
//! encode per-user sample bounds.
//!
//! Everything internal works in normalized powers `x = p / P` (so the power
//! budget is the unit simplex) with SNR-scaled gains `S_kl = G_kl P / sigma^2`.

use crate::channel::GainMatrix;
use crate::error::BoundKind;
use crate::scenario::Scenario;

use super::barrier::ConvexFn;

/// Per-task error of an allocation under interference-coupled gains;
/// `+inf` when the task would have no samples at all.
pub fn phi(powers: &[f64], gains: &GainMatrix, scenario: &Scenario, task: usize) -> f64 {
    let t = &scenario.tasks[task];
    let per_rate = scenario.bits_per_rate_unit() / t.data_size_bits;
    let bracket: f64 = scenario.groups[task]
        .iter()
        .map(|&k| {
            let sinr = gains.get(k, k) * powers[k] / (gains.interference(k, powers) + scenario.noise_power);
            per_rate * sinr.ln_1p() / std::f64::consts::LN_2
        })
        .sum::<f64>()
        + t.historical_samples;
    power_law(t.error_params.scale, t.error_params.exponent, bracket)
}

/// `max_m beta_m Phi_m(p)`.
pub fn objective(powers: &[f64], gains: &GainMatrix, scenario: &Scenario) -> f64 {
    (0..scenario.num_tasks())
        .map(|m| scenario.tasks[m].error_params.safety * phi(powers, gains, scenario, m))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn power_law(a: f64, b: f64, v: f64) -> f64 {
    if v > 0.0 {
        a * v.powf(-b)
    } else if b == 0.0 {
        a
    } else {
        f64::INFINITY
    }
}

/// Scaled problem data shared by the exact objective and the surrogate.
#[derive(Debug, Clone)]
pub(crate) struct Model {
    pub k: usize,
    /// Row-major `S_kl = G_kl P / sigma^2`.
    pub snr: Vec<f64>,
    /// `xi B T / (D_m ln 2)`: samples per nat of SINR.
    pub per_nat: Vec<f64>,
    pub groups: Vec<Vec<usize>>,
    pub scale: Vec<f64>,
    pub exponent: Vec<f64>,
    pub safety: Vec<f64>,
    pub historical: Vec<f64>,
}

impl Model {
    pub fn new(gains: &GainMatrix, scenario: &Scenario) -> Self {
        let k = gains.dim();
        let f = scenario.total_power / scenario.noise_power;
        let mut snr = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                snr[i * k + j] = gains.get(i, j) * f;
            }
        }
        let t = &scenario.tasks;
        Self {
            k,
            snr,
            per_nat: t
                .iter()
                .map(|t| scenario.bits_per_rate_unit() / (t.data_size_bits * std::f64::consts::LN_2))
                .collect(),
            groups: scenario.groups.clone(),
            scale: t.iter().map(|t| t.error_params.scale).collect(),
            exponent: t.iter().map(|t| t.error_params.exponent).collect(),
            safety: t.iter().map(|t| t.error_params.safety).collect(),
            historical: t.iter().map(|t| t.historical_samples).collect(),
        }
    }

    pub fn s(&self, k: usize, l: usize) -> f64 {
        self.snr[k * self.k + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.snr[k * self.k..(k + 1) * self.k]
    }

    /// `sum_{l != k} S_kl x_l`.
    pub fn interference(&self, k: usize, x: &[f64]) -> f64 {
        self.row(k)
            .iter()
            .zip(x)
            .enumerate()
            .filter(|(l, _)| *l != k)
            .map(|(_, (s, xl))| s * xl)
            .sum()
    }

    pub fn num_tasks(&self) -> usize {
        self.groups.len()
    }

    /// Weighted exact error `beta_m Phi_m(x)`.
    pub fn weighted_phi(&self, x: &[f64], m: usize) -> f64 {
        let bracket: f64 = self.groups[m]
            .iter()
            .map(|&k| {
                let i = self.interference(k, x);
                self.per_nat[m] * (self.s(k, k) * x[k] / (1.0 + i)).ln_1p()
            })
            .sum::<f64>()
            + self.historical[m];
        self.safety[m] * power_law(self.scale[m], self.exponent[m], bracket)
    }

    pub fn max_weighted_phi(&self, x: &[f64]) -> f64 {
        (0..self.num_tasks())
            .map(|m| self.weighted_phi(x, m))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Linearization point of the surrogate.
#[derive(Debug, Clone)]
pub struct SurrogateContext {
    /// Anchor powers in watts.
    pub anchor: Vec<f64>,
    /// `sum_{l != k} G_kl p*_l / sigma^2` per user.
    pub interference: Vec<f64>,
}

impl SurrogateContext {
    pub fn new(anchor: &[f64], gains: &GainMatrix, scenario: &Scenario) -> Self {
        let interference = (0..gains.dim())
            .map(|k| gains.interference(k, anchor) / scenario.noise_power)
            .collect();
        Self {
            anchor: anchor.to_vec(),
            interference,
        }
    }
}

/// Surrogate of the per-task error around the context's anchor (unweighted).
/// Interference enters the sample count through a tangent line of `-ln`,
/// which makes the bracket concave and upper-bounds the exact error.
pub fn surrogate_phi(
    powers: &[f64],
    context: &SurrogateContext,
    gains: &GainMatrix,
    scenario: &Scenario,
    task: usize,
) -> f64 {
    let t = &scenario.tasks[task];
    let n = scenario.noise_power;
    let per_nat = scenario.bits_per_rate_unit() / (t.data_size_bits * std::f64::consts::LN_2);
    let bracket: f64 = scenario.groups[task]
        .iter()
        .map(|&k| {
            let own = gains.get(k, k) * powers[k] / n;
            let i = gains.interference(k, powers) / n;
            let i0 = context.interference[k];
            per_nat * ((own + i).ln_1p() - i0.ln_1p() - (1.0 + i) / (1.0 + i0) + 1.0)
        })
        .sum::<f64>()
        + t.historical_samples;
    power_law(t.error_params.scale, t.error_params.exponent, bracket)
}

/// Weighted surrogate `beta_m Phi~_m` of one task in scaled variables, as
/// a smooth convex function for the barrier solver.
#[derive(Debug, Clone)]
pub(crate) struct SurrogateTask<'a> {
    pub model: &'a Model,
    pub task: usize,
    /// `1 + I*_k` per user, with `I*` the scaled anchor interference.
    pub anchor_gap: &'a [f64],
}

impl SurrogateTask<'_> {
    fn bracket(&self, x: &[f64]) -> f64 {
        let md = self.model;
        let c = md.per_nat[self.task];
        md.groups[self.task]
            .iter()
            .map(|&k| {
                let total: f64 = md.row(k).iter().zip(x).map(|(s, xl)| s * xl).sum();
                let i = total - md.s(k, k) * x[k];
                let d = self.anchor_gap[k];
                c * (total.ln_1p() - d.ln() - (1.0 + i) / d + 1.0)
            })
            .sum::<f64>()
            + md.historical[self.task]
    }
}

impl ConvexFn for SurrogateTask<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let m = self.task;
        let md = self.model;
        md.safety[m] * power_law(md.scale[m], md.exponent[m], self.bracket(x))
    }

    fn add_derivatives(&self, x: &[f64], weight: f64, grad: &mut [f64], hess: &mut [f64]) {
        let md = self.model;
        let (m, k) = (self.task, md.k);
        let c = md.per_nat[m];
        let (a, b, beta) = (md.scale[m], md.exponent[m], md.safety[m]);
        let g = self.bracket(x);
        if b == 0.0 || a == 0.0 {
            return;
        }
        // bracket gradient and (negative semidefinite) Hessian
        let mut dg = vec![0.0; k];
        let mut curv: Vec<(usize, f64)> = Vec::with_capacity(md.groups[m].len());
        for &u in &md.groups[m] {
            let row = md.row(u);
            let total: f64 = row.iter().zip(x).map(|(s, xl)| s * xl).sum();
            let inv = 1.0 / (1.0 + total);
            let d = self.anchor_gap[u];
            for l in 0..k {
                let lin = if l == u { 0.0 } else { row[l] / d };
                dg[l] += c * (row[l] * inv - lin);
            }
            curv.push((u, c * inv * inv));
        }
        let f = beta * a * g.powf(-b);
        let f1 = -b * f / g; // df/dg
        let f2 = b * (b + 1.0) * f / (g * g); // d2f/dg2
        for l in 0..k {
            grad[l] += weight * f1 * dg[l];
        }
        let w2 = weight * f2;
        for i in 0..k {
            let gi = w2 * dg[i];
            if gi != 0.0 {
                for j in 0..k {
                    hess[i * k + j] += gi * dg[j];
                }
            }
        }
        // -f1 * hess(g) = |f1| * sum c s s^T / (1+total)^2
        for (u, cu) in curv {
            let row = md.row(u);
            let w = -weight * f1 * cu;
            for i in 0..k {
                let ri = w * row[i];
                if ri != 0.0 {
                    for j in 0..k {
                        hess[i * k + j] += ri * row[j];
                    }
                }
            }
        }
    }
}

/// One normalized linear inequality `coeffs . x <= rhs` over scaled powers.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub user: usize,
    pub kind: BoundKind,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl BoundRow {
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.rhs - self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

impl ConvexFn for BoundRow {
    fn value(&self, x: &[f64]) -> f64 {
        -self.slack(x)
    }

    fn add_derivatives(&self, _x: &[f64], weight: f64, grad: &mut [f64], _hess: &mut [f64]) {
        for (g, c) in grad.iter_mut().zip(&self.coeffs) {
            *g += weight * c;
        }
    }
}

/// Per-user sample bounds as linear SINR constraints.
///
/// `samples_k >= Z_min` is `S_kk x_k >= c (1 + I_k(x))` with
/// `c = 2^(Z_min D / (xi B T)) - 1`, and symmetrically for `Z_max`. Bounds
/// are in samples of the user's first-listed task. Rows are scaled to unit
/// norm; trivial bounds (`Z_min = 0`, `Z_max = inf`) produce no row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateBoundRows {
    pub rows: Vec<BoundRow>,
}

impl RateBoundRows {
    pub fn new(gains: &GainMatrix, scenario: &Scenario) -> Self {
        let model = Model::new(gains, scenario);
        Self::from_model(&model, scenario)
    }

    pub(crate) fn from_model(model: &Model, scenario: &Scenario) -> Self {
        let k = model.k;
        let mut rows = Vec::new();
        for u in 0..k {
            let bounds = scenario.rate_bounds[u];
            let m = scenario.primary_task(u);
            let bits = scenario.tasks[m].data_size_bits / scenario.bits_per_rate_unit();
            let threshold = |z: f64| (z * bits * std::f64::consts::LN_2).exp_m1();
            let mut push = |kind: BoundKind, c: f64| {
                let sign = if kind == BoundKind::Lower { 1.0 } else { -1.0 };
                let mut coeffs: Vec<f64> = (0..k)
                    .map(|l| {
                        if l == u {
                            -sign * model.s(u, u)
                        } else {
                            sign * c * model.s(u, l)
                        }
                    })
                    .collect();
                let mut rhs = -sign * c;
                let norm = coeffs.iter().map(|v| v * v).sum::<f64>().sqrt().max(rhs.abs());
                if norm > 0.0 {
                    coeffs.iter_mut().for_each(|v| *v /= norm);
                    rhs /= norm;
                }
                rows.push(BoundRow {
                    user: u,
                    kind,
                    coeffs,
                    rhs,
                });
            };
            if bounds.min > 0.0 {
                push(BoundKind::Lower, threshold(bounds.min));
            }
            if bounds.max.is_finite() {
                let c = threshold(bounds.max);
                if c.is_finite() {
                    push(BoundKind::Upper, c);
                }
            }
        }
        Self { rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Largest row violation at scaled powers `x` (0 when all rows hold).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows.iter().map(|r| -r.slack(x)).fold(0.0, f64::max)
    }
}

/// Largest relative violation of the per-user sample bounds, measured in
/// samples: `max((Z_min - z)/Z_min, (z - Z_max)/Z_max, 0)`.
pub fn bound_residual(powers: &[f64], gains: &GainMatrix, scenario: &Scenario) -> f64 {
    let rates = crate::channel::rates(gains, powers, scenario.noise_power);
    let mut worst: f64 = 0.0;
    for (u, b) in scenario.rate_bounds.iter().enumerate() {
        let z = crate::channel::user_samples(scenario, scenario.primary_task(u), rates.0[u]);
        if b.min > 0.0 {
            worst = worst.max((b.min - z) / b.min);
        }
        if b.max.is_finite() && b.max > 0.0 {
            worst = worst.max((z - b.max) / b.max);
        } else if b.max == 0.0 {
            worst = worst.max(z);
        }
    }
    worst
}
