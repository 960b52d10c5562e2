#![allow(dead_code)]

use lcpa::scenario::RateBounds;
use lcpa::Scenario;
use rand::Rng;

/// Random point with every entry at least `floor * radius / n`.
pub fn simplex_point<R: Rng>(rng: &mut R, n: usize, radius: f64, floor: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let tot: f64 = w.iter().sum();
    w.iter().map(|v| radius * v / tot).collect()
}

/// Random two-task scenario with `k` users; task 1 gets the first
/// `split` users. Gains are drawn log-uniformly around the reference link.
pub fn random_diag_instance<R: Rng>(rng: &mut R, k: usize, split: usize) -> (Scenario, Vec<f64>) {
    let mut s = Scenario::four_user_default();
    s.num_users = k;
    s.num_antennas = rng.random_range(4..64);
    s.duration = rng.random_range(2.0..30.0);
    s.groups = vec![(0..split).collect(), (split..k).collect()];
    s.path_loss = vec![1e-10; k];
    s.rate_bounds = vec![RateBounds::UNBOUNDED; k];
    let n = s.num_antennas as f64;
    let diag = (0..k)
        .map(|_| n * 1e-10 * 10f64.powf(rng.random_range(-1.0..1.0)))
        .collect();
    (s, diag)
}

/// Minimum of `objective(p1, P - p1)` over `points + 1` evenly spaced `p1`.
pub fn grid_min_k2(total: f64, points: usize, objective: impl Fn(&[f64]) -> f64) -> f64 {
    (0..=points)
        .map(|i| {
            let p1 = total * i as f64 / points as f64;
            objective(&[p1, total - p1])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimizer of `KL(x, base) + step <x, g>` over the simplex of radius
/// `sum(base)`, by pairwise exchange with golden-section line searches.
pub fn numeric_prox(base: &[f64], g: &[f64], step: f64) -> Vec<f64> {
    let f = |i: usize, v: f64| {
        if v > 0.0 {
            v * (v / base[i]).ln() + step * g[i] * v
        } else {
            0.0
        }
    };
    let mut x = base.to_vec();
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let s = x[i] + x[j];
                let cost = |t: f64| f(i, t) + f(j, s - t);
                let (mut lo, mut hi) = (0.0, s);
                for _ in 0..200 {
                    let a = hi - phi * (hi - lo);
                    let b = lo + phi * (hi - lo);
                    if cost(a) < cost(b) {
                        hi = b;
                    } else {
                        lo = a;
                    }
                }
                let t = 0.5 * (lo + hi);
                moved = moved.max((t - x[i]).abs());
                x[i] = t;
                x[j] = s - t;
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    x
}
