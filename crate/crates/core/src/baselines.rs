//! Communication-centric allocators on diagonal gains: sum-rate water-filling
//! and max-min SNR fairness.

use crate::error::{out_of_range, Result};

fn check(diag_gains: &[f64], noise: f64, total_power: f64) -> Result<()> {
    if diag_gains.is_empty() {
        return Err(out_of_range("diag_gains", "at least one user"));
    }
    if diag_gains.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(out_of_range("diag_gains", "all gains > 0"));
    }
    if !(noise > 0.0) {
        return Err(out_of_range("noise", "sigma^2 > 0"));
    }
    if !(total_power > 0.0 && total_power.is_finite()) {
        return Err(out_of_range("total_power", "P > 0"));
    }
    Ok(())
}

/// Maximizes `sum_k log2(1 + G_k p_k / sigma^2)` over the power simplex.
///
/// Returns `p_k = (w - sigma^2/G_k)^+`. The level `w` is bracketed by
/// bisection, then recomputed exactly on the resulting active set so the
/// powers sum to `P` to rounding.
pub fn water_filling(diag_gains: &[f64], noise: f64, total_power: f64) -> Result<Vec<f64>> {
    check(diag_gains, noise, total_power)?;
    let floors: Vec<f64> = diag_gains.iter().map(|g| noise / g).collect();
    let used = |w: f64| floors.iter().map(|f| (w - f).max(0.0)).sum::<f64>();

    let min_floor = floors.iter().copied().fold(f64::INFINITY, f64::min);
    // every-user-active level is an upper bound; single-best-user a lower one
    let mut lo = min_floor;
    let mut hi = (total_power + floors.iter().sum::<f64>()) / floors.len() as f64;
    hi = hi.max(min_floor + total_power);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if used(mid) > total_power {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    let active: Vec<usize> = (0..floors.len()).filter(|&k| floors[k] < mid).collect();
    let active = if active.is_empty() {
        vec![(0..floors.len())
            .min_by(|&a, &b| floors[a].total_cmp(&floors[b]))
            .unwrap()]
    } else {
        active
    };
    let level = (total_power + active.iter().map(|&k| floors[k]).sum::<f64>()) / active.len() as f64;
    let mut p = vec![0.0; floors.len()];
    for &k in &active {
        p[k] = (level - floors[k]).max(0.0);
    }
    Ok(p)
}

/// Equalizes every user's SNR: `p_k` proportional to `sigma^2 / G_k`.
pub fn max_min_fair(diag_gains: &[f64], noise: f64, total_power: f64) -> Result<Vec<f64>> {
    check(diag_gains, noise, total_power)?;
    let inv: Vec<f64> = diag_gains.iter().map(|g| noise / g).collect();
    let total: f64 = inv.iter().sum();
    Ok(inv.iter().map(|x| total_power * x / total).collect())
}

pub fn sum_rate_diag(diag_gains: &[f64], noise: f64, powers: &[f64]) -> f64 {
    diag_gains
        .iter()
        .zip(powers)
        .map(|(g, p)| (g * p / noise).ln_1p() / std::f64::consts::LN_2)
        .sum()
}
