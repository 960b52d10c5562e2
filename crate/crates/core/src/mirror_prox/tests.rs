use super::*;
use crate::channel::{composite_gains, draw_channels, expected_gains, GainMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair() -> (Scenario, Vec<f64>) {
    let s = Scenario::cnn_svm_pair(10, 5.0);
    (s, vec![9e-10, 4e-10])
}

fn single() -> Scenario {
    let mut s = Scenario::cnn_svm_pair(10, 5.0);
    s.num_users = 1;
    s.groups = vec![vec![0]];
    s.tasks.truncate(1);
    s.path_loss.truncate(1);
    s.rate_bounds.truncate(1);
    s
}

#[test]
fn zero_power_reduces_to_history() {
    let (s, d) = pair();
    let t = &s.tasks[0];
    let want = t.error_params.scale * t.historical_samples.powf(-t.error_params.exponent);
    assert_eq!(xi(&[0.0, 0.0], &d, &s, 0), want);
}

#[test]
fn hand_worked_pair() {
    let (s, d) = pair();
    let p = [0.015, 0.005];
    let n = s.noise_power;
    let v1 = 180_000.0 * 5.0 * (1.0 + 9e-10 * 0.015 / n).log2() / 6276.0 + 300.0;
    let v2 = 180_000.0 * 5.0 * (1.0 + 4e-10 * 0.005 / n).log2() / 324.0 + 200.0;
    let e1 = 7.3 * v1.powf(-0.69);
    let e2 = 5.2 * v2.powf(-0.72);
    assert!((xi(&p, &d, &s, 0) - e1).abs() <= 1e-12 * e1);
    assert!((xi(&p, &d, &s, 1) - e2).abs() <= 1e-12 * e2);
    assert!((primal_objective(&p, &d, &s) - e1.max(1.2 * e2)).abs() <= 1e-12 * e1);
}

#[test]
fn equals_phi_on_diagonal_gains() {
    let s = Scenario::four_user_default();
    let d = composite_gains(&draw_channels(&s, 3)).unwrap().diagonal();
    let g = GainMatrix::from_diagonal(&d);
    let p = [0.002, 0.009, 0.004, 0.005];
    for m in 0..2 {
        assert_eq!(
            xi(&p, &d, &s, m).to_bits(),
            crate::mm::phi(&p, &g, &s, m).to_bits()
        );
    }
}

#[test]
fn gradient_matches_differences_and_is_masked() {
    let s = Scenario::four_user_default();
    let d = composite_gains(&draw_channels(&s, 5)).unwrap().diagonal();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6 * s.total_power;
    for _ in 0..200 {
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..1.0)).collect();
        let tot: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|v| s.total_power * v / tot).collect();
        for m in 0..2 {
            let g = grad_xi(&p, &d, &s, m);
            for j in 0..4 {
                if !s.in_group(m, j) {
                    assert_eq!(g[j], 0.0);
                    continue;
                }
                assert!(g[j] < 0.0);
                let (mut up, mut dn) = (p.clone(), p.clone());
                up[j] += h;
                dn[j] -= h;
                let fd = (xi(&up, &d, &s, m) - xi(&dn, &d, &s, m)) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs(), "{fd} vs {}", g[j]);
            }
        }
    }
}

#[test]
fn single_term_constants() {
    let s = single();
    let g = 7e-10;
    let c = lipschitz_constants(&s, &[g], 0.1).unwrap();
    let (a, b) = (7.3f64, 0.69f64);
    let per = 180_000.0 * 5.0 / (6276.0 * std::f64::consts::LN_2);
    let r = 0.1 / a;
    let n = s.noise_power;
    let l2 = a * b * per * g / n * r.powf(1.0 + 1.0 / b);
    let l1 =
        a * b * per * g * g / (n * n) * r.powf(1.0 + 1.0 / b) * (1.0 + (b + 1.0) * per * r.powf(1.0 / b));
    assert_eq!(c.h, vec![g]);
    assert!((c.l2 - l2).abs() <= 1e-12 * l2);
    assert!((c.l1 - l1).abs() <= 1e-12 * l1);
}

#[test]
fn constants_scale_with_gains() {
    let s = Scenario::four_user_default();
    let d = expected_gains(&s).diagonal();
    let twice: Vec<f64> = d.iter().map(|g| 2.0 * g).collect();
    let a = lipschitz_constants(&s, &d, 0.1).unwrap();
    let b = lipschitz_constants(&s, &twice, 0.1).unwrap();
    for m in 0..2 {
        assert!((b.h[m] - 2.0 * a.h[m]).abs() <= 1e-12 * b.h[m]);
    }
    assert!((b.l2 - 2.0 * a.l2).abs() <= 1e-12 * b.l2);
    assert!(a.l1 >= 0.0 && a.l1.is_finite());
    assert!(lipschitz_constants(&s, &d, 0.0).is_err());
    assert!(lipschitz_constants(&s, &d, 1.5).is_err());
    let lo = lipschitz_constants(&s, &d, 0.1 - 1e-9).unwrap();
    assert!((lo.l2 - a.l2).abs() <= 1e-6 * a.l2);
}

#[test]
fn prox_identities() {
    let base = [0.2, 0.5, 0.3];
    assert_eq!(kl_prox(&base, &[0.0; 3], 4.0), base.to_vec());
    let shifted = kl_prox(&base, &[7.0; 3], 4.0);
    for (a, b) in shifted.iter().zip(&base) {
        assert!((a - b).abs() <= 1e-15);
    }
    let far = kl_prox(&base, &[1e6, 0.0, -1e6], 1.0);
    assert!(far.iter().all(|v| *v > 0.0));
    assert!((far.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
}

/// Pairwise exchange with golden-section line search: the objective is
/// separable, so optimizing along `x_i + x_j = const` for all pairs until
/// nothing moves reaches the constrained minimum.
fn numeric_prox(base: &[f64], g: &[f64], step: f64) -> Vec<f64> {
    let f = |i: usize, v: f64| {
        if v > 0.0 {
            v * (v / base[i]).ln() + step * g[i] * v
        } else {
            0.0
        }
    };
    let mut x = base.to_vec();
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
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
        if moved < 1e-14 {
            break;
        }
    }
    x
}

#[test]
fn prox_matches_numeric_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let r = rng.random_range(0.1..3.0);
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
        let tot: f64 = w.iter().sum();
        let base: Vec<f64> = w.iter().map(|v| r * v / tot).collect();
        let g: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let step = rng.random_range(0.01..2.0);
        let want = numeric_prox(&base, &g, step);
        let got = kl_prox(&base, &g, step);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-6, "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn single_point_simplex_never_moves() {
    let s = single();
    let sol = solve(&s, &[7e-10], &MirrorProxOptions::default()).unwrap();
    assert_eq!(sol.powers, vec![s.total_power]);
    assert_eq!(sol.state.p, vec![s.total_power]);
    assert!(sol.converged);
}

#[test]
fn symmetric_pair_splits_evenly() {
    let mut s = Scenario::cnn_svm_pair(10, 5.0);
    s.tasks[1] = s.tasks[0];
    for rule in [StepRule::Fixed, StepRule::Adaptive] {
        let opts = MirrorProxOptions {
            step_rule: rule,
            ..Default::default()
        };
        let sol = solve(&s, &[6e-10, 6e-10], &opts).unwrap();
        for (p, a) in sol.state.p.iter().zip(&sol.state.alpha) {
            assert!((p - s.total_power / 2.0).abs() <= 1e-12 * s.total_power);
            assert!((a - 0.5).abs() <= 1e-12);
        }
    }
}

#[test]
fn matches_mm_on_diagonal_gains() {
    for seed in 0..4 {
        let s = Scenario::four_user_default();
        let d = composite_gains(&draw_channels(&s, seed)).unwrap().diagonal();
        let mm = crate::mm::solve(&s, &GainMatrix::from_diagonal(&d), &Default::default()).unwrap();
        for rule in [StepRule::Fixed, StepRule::Adaptive] {
            let opts = MirrorProxOptions {
                step_rule: rule,
                ..Default::default()
            };
            let sol = solve(&s, &d, &opts).unwrap();
            assert!(sol.converged);
            assert!((sol.objective - mm.objective).abs() <= 1e-4 * mm.objective);
            assert!((sol.powers.iter().sum::<f64>() - s.total_power).abs() <= 1e-12 * s.total_power);
        }
    }
}

#[test]
fn divergence_guard_restarts_with_smaller_step() {
    let (s, d) = pair();
    let opts = MirrorProxOptions {
        eta: Some(1e6),
        step_rule: StepRule::Fixed,
        divergence_window: 1,
        max_iters: 20_000,
        ..Default::default()
    };
    let sol = solve(&s, &d, &opts).unwrap();
    assert!(sol.trace.restarts() >= 1);
    assert!(sol.eta < 1e6);
}

#[test]
fn rejects_bounds_and_bad_gains() {
    let (mut s, d) = pair();
    assert!(solve(&s, &[1e-10, 0.0], &MirrorProxOptions::default()).is_err());
    s.rate_bounds[0].max = 50.0;
    assert!(matches!(
        solve(&s, &d, &MirrorProxOptions::default()),
        Err(Error::Incompatible { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_stays_on_the_simplex(
        w in proptest::collection::vec(1e-6f64..1.0, 2..10),
        g in proptest::collection::vec(-1e3f64..1e3, 10),
        step in 1e-4f64..10.0,
        r in 1e-3f64..10.0,
    ) {
        let tot: f64 = w.iter().sum();
        let base: Vec<f64> = w.iter().map(|v| r * v / tot).collect();
        let out = kl_prox(&base, &g[..base.len()], step);
        prop_assert!((out.iter().sum::<f64>() - r).abs() <= 1e-12 * r);
        prop_assert!(out.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn gradient_never_positive(seed in any::<u64>(), w in proptest::collection::vec(0.0f64..1.0, 4)) {
        let s = Scenario::four_user_default();
        let d = composite_gains(&draw_channels(&s, seed)).unwrap().diagonal();
        let tot: f64 = w.iter().sum::<f64>() + 1e-9;
        let p: Vec<f64> = w.iter().map(|v| s.total_power * v / tot).collect();
        for m in 0..2 {
            prop_assert!(grad_xi(&p, &d, &s, m).iter().all(|g| *g <= 0.0));
        }
    }
}
