use kawahara_core::diagnostics::{energy, fit_exponential, sandwich_check, lyapunov};
use kawahara_core::model::{
    decay_certificate, gain_matrix_m, gain_matrix_mstar, length_bound, mu_bounds, perturbed_matrix, CertificateError,
};
use kawahara_core::spatial::{build_grid, build_linear_operator, l2_squared};
use kawahara_core::spectral::{mobius_consistency, q_roots, three_real_root_radius, Classification, C64};
use kawahara_core::timeloop::{profiles, simulate, Field, InitialData, Mode, SimOptions, SimState};
use kawahara_core::SystemParams;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `(alpha, beta)` with `|alpha| + |beta| < 1` and `beta != 0`.
fn admissible_gains() -> impl Strategy<Value = (f64, f64)> {
    (-0.999f64..0.999, 0.001f64..0.999, any::<bool>())
        .prop_map(|(a, b, neg)| {
            let alpha = a * (1.0 - b);
            (alpha, if neg { -b } else { b })
        })
        .prop_filter("strict gain sum", |(a, b)| a.abs() + b.abs() < 1.0 - 1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn gain_matrices_are_negative_definite((alpha, beta) in admissible_gains()) {
        prop_assert!(gain_matrix_m(alpha, beta).is_negative_definite());
        prop_assert!(gain_matrix_mstar(alpha, beta).is_negative_definite());
    }
}

proptest! {
    #[test]
    fn determinant_identity(alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let b = beta.abs();
        let want = b * ((b - 1.0).powi(2) - alpha * alpha);
        let got = gain_matrix_m(alpha, beta).det();
        prop_assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0));
    }

    #[test]
    fn unperturbed_matrix_is_m((alpha, beta) in admissible_gains(), l in 0.1f64..10.0) {
        prop_assert_eq!(perturbed_matrix(alpha, beta, l, 0.0, 0.0), gain_matrix_m(alpha, beta));
    }

    #[test]
    fn half_sup_weights_give_negative_definite((alpha, beta) in admissible_gains(), l in 0.1f64..5.4) {
        let bounds = mu_bounds(alpha, beta, l).unwrap();
        let mu2 = bounds.mu2_sup / 2.0;
        let mu1 = bounds.mu1_sup(mu2) / 2.0;
        prop_assume!(mu1.is_finite() && mu1 > 0.0 && mu2 > 0.0);
        prop_assert!(perturbed_matrix(alpha, beta, l, mu1, mu2).is_negative_definite());
    }

    #[test]
    fn lambda_nonincreasing_in_delay(h1 in 0.05f64..5.0, dh in 0.0f64..5.0, mu in 0.001f64..0.05) {
        let p = SystemParams::reference();
        let short = decay_certificate(&SystemParams { h: h1, ..p }, mu, mu, 0.0).unwrap();
        let long = decay_certificate(&SystemParams { h: h1 + dh, ..p }, mu, mu, 0.0).unwrap();
        prop_assert!(long.lambda <= short.lambda);
    }

    #[test]
    fn certificate_refused_beyond_critical_length(excess in 0.0f64..5.0, a in 0.2f64..3.0, b in 0.2f64..3.0) {
        let l = length_bound(a, b).unwrap() + excess;
        let p = SystemParams { a, b, length: l, ..SystemParams::reference() };
        prop_assert_eq!(decay_certificate(&p, 0.01, 0.01, 0.0), Err(CertificateError::LengthTooLarge));
    }

    #[test]
    fn operator_is_linear(s in -3.0f64..3.0, t in -3.0f64..3.0, k1 in 1usize..6, k2 in 1usize..6) {
        let p = SystemParams::reference();
        let grid = build_grid(p.length, 64).unwrap();
        let ops = build_linear_operator(&p, &grid).unwrap();
        let u = grid.sample(|x| (k1 as f64 * x).sin());
        let v = grid.sample(|x| (k2 as f64 * x).cos() * x);
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| s * a + t * b).collect();
        let (au, av, aw) = (ops.apply(&u), ops.apply(&v), ops.apply(&w));
        let scale = au.iter().chain(&av).fold(1.0f64, |m, x| m.max(x.abs()));
        for j in 0..w.len() {
            prop_assert!((aw[j] - (s * au[j] + t * av[j])).abs() <= 1e-12 * scale * (s.abs() + t.abs() + 1.0));
        }
        let (g1, g2, g3) = (ops.g_gen(s), ops.g_gen(t), ops.g_gen(s + t));
        for j in 0..g3.len() {
            prop_assert!((g3[j] - g1[j] - g2[j]).abs() <= 1e-12 * g3[j].abs().max(1.0));
        }
    }

    #[test]
    fn uncontrolled_flow_does_not_create_energy(k in 1usize..5, n in prop::sample::select(vec![64usize, 128, 256])) {
        // With phi = 0 the continuous flux is -u_xx(0)^2 / 2 <= 0.
        let p = SystemParams { alpha: 0.0, beta: 0.0, ..SystemParams::reference() };
        let grid = build_grid(p.length, n).unwrap();
        let ops = build_linear_operator(&p, &grid).unwrap();
        let l = p.length;
        let u = grid.sample(|x| (std::f64::consts::PI * x / l).sin().powi(4) * (k as f64 * x).cos());
        let au = ops.apply(&u);
        let rate: f64 = u.iter().zip(&au).map(|(a, b)| a * b).sum::<f64>() * grid.dx;
        let tol = 50.0 * grid.dx * grid.dx * l2_squared(&u, &grid) * (k * k) as f64;
        prop_assert!(rate <= tol, "rate {rate} tol {tol}");
    }

    #[test]
    fn energy_and_sandwich_on_states(seed in any::<u64>(), mu1 in 0.0f64..0.3, mu2 in 0.0f64..0.5) {
        let p = SystemParams::reference();
        let grid = build_grid(p.length, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ic = profiles::random_smooth(&mut rng, p.length, p.h, 4);
        let state = SimState::new(grid, &ic, p.h, 0.01).unwrap();
        let e = energy(&state, &p);
        prop_assert!(e >= 0.0);
        prop_assert!(sandwich_check(e, lyapunov(&state, &p, mu1, mu2), &p, mu1, mu2));
    }

    #[test]
    fn fit_recovers_exact_exponentials(c in 0.01f64..100.0, gamma in -2.0f64..2.0) {
        let series: Vec<(f64, f64)> = (0..40).map(|k| k as f64 * 0.25).map(|t| (t, c * (-gamma * t).exp())).collect();
        let fit = fit_exponential(&series, (0.0, 10.0)).unwrap();
        prop_assert!((fit.gamma - gamma).abs() < 1e-10);
        prop_assert!((fit.c - c).abs() < 1e-9 * c);
    }

    #[test]
    fn roots_sum_product_and_conjugate_closure(r in -5.0f64..5.0) {
        let s = q_roots(r);
        let sum: C64 = s.roots.iter().sum();
        let prod: C64 = s.roots.iter().product();
        prop_assert!(sum.norm() < 1e-10);
        prop_assert!((prod + r).norm() < 1e-10);
        prop_assert!(s.max_residual() < 1e-10);
        for z in s.roots {
            let partner = s.roots.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(partner == 0.0);
        }
    }

    #[test]
    fn mobius_residual_exceeds_tolerance(r in 0.35f64..3.0, l in 0.1f64..20.0, neg in any::<bool>()) {
        let s = q_roots(if neg { -r } else { r });
        prop_assert!(mobius_consistency(&s, l).unwrap() > 1e-6);
    }
}

/// Sign changes of the Sturm chain of `xi^5 + xi^3 - xi + r`, counted
/// between `-inf` and `+inf`.
fn sturm_real_roots(r: f64) -> usize {
    fn poly_rem(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut a = a.to_vec();
        while a.len() >= b.len() {
            let f = a[0] / b[0];
            for (k, bk) in b.iter().enumerate() {
                a[k] -= f * bk;
            }
            a.remove(0);
        }
        while a.len() > 1 && a[0].abs() < 1e-13 {
            a.remove(0);
        }
        a
    }
    let mut chain = vec![vec![1.0, 0.0, 1.0, 0.0, -1.0, r], vec![5.0, 0.0, 3.0, 0.0, -1.0]];
    loop {
        let n = chain.len();
        let next: Vec<f64> = poly_rem(&chain[n - 2], &chain[n - 1]).iter().map(|v| -v).collect();
        if next.iter().all(|v| v.abs() < 1e-13) {
            break;
        }
        let done = next.len() == 1;
        chain.push(next);
        if done {
            break;
        }
    }
    let changes = |signs: Vec<f64>| signs.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    let at_plus = changes(chain.iter().map(|p| p[0].signum()).collect());
    let at_minus = changes(
        chain
            .iter()
            .map(|p| if (p.len() - 1) % 2 == 0 { p[0].signum() } else { -p[0].signum() })
            .collect(),
    );
    at_minus - at_plus
}

#[test]
fn one_real_root_beyond_threshold() {
    let delta = three_real_root_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 200 {
        let r: f64 = rand::Rng::random_range(&mut rng, -5.0..5.0);
        if r.abs() <= delta {
            continue;
        }
        let s = q_roots(r);
        assert_eq!(s.classification, Classification::OneRealTwoConjugatePairs, "r = {r}");
        assert_eq!(sturm_real_roots(r), 1, "r = {r}");
        checked += 1;
    }
}

#[test]
fn three_real_roots_below_threshold() {
    // Three real roots for 0 < |r| < delta: the one-real-root statement needs |r| >= delta.
    for r in [0.05, -0.2, 0.34] {
        let s = q_roots(r);
        assert_eq!(s.classification, Classification::Other { real_count: 3 });
        assert_eq!(sturm_real_roots(r), 3);
    }
}

#[test]
fn identical_inputs_give_identical_runs() {
    let p = SystemParams::reference();
    let ic = InitialData::new(profiles::sine_power(p.length, 4).scaled(0.3), Field::zero());
    let a = simulate(&p, &ic, 1.5, 80, 5e-3, Mode::Nonlinear, &SimOptions::default()).unwrap();
    let b = simulate(&p, &ic, 1.5, 80, 5e-3, Mode::Nonlinear, &SimOptions::default()).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.final_state.u, b.final_state.u);
}

#[test]
fn linear_energy_nonincreasing_to_tolerance() {
    let p = SystemParams::reference();
    let ic = InitialData::new(profiles::sine_power(p.length, 4), Field::zero());
    for (cells, dt) in [(150usize, 2e-3), (300, 1e-3)] {
        let run = simulate(&p, &ic, 5.0, cells, dt, Mode::Linear, &SimOptions::default()).unwrap();
        let dx = p.length / cells as f64;
        let tol = (dt + dx * dx) * run.rows[0].e;
        let worst = run.rows.windows(2).map(|w| w[1].e - w[0].e).fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= tol, "growth {worst} > {tol}");
    }
}

#[test]
fn observability_ratio_is_scale_free() {
    let p = SystemParams::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = profiles::random_smooth(&mut rng, p.length, p.h, 4);
    let ratio = |ic: &InitialData<f64>| {
        let run = simulate(&p, ic, 2.0, 100, 2e-3, Mode::Linear, &SimOptions::default()).unwrap();
        let observed: f64 = run
            .rows
            .windows(2)
            .map(|w| {
                let f = |r: &kawahara_core::EnergyRecord| r.trace0 * r.trace0 + r.z1 * r.z1;
                0.5 * (f(&w[0]) + f(&w[1])) * (w[1].t - w[0].t)
            })
            .sum();
        run.rows[0].e / observed
    };
    let r1 = ratio(&base);
    for c in [1e-3, 0.5, 7.0] {
        let rc = ratio(&base.scaled(c));
        assert!((rc - r1).abs() <= 1e-10 * r1, "{rc} vs {r1}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn delayed_trace_is_exact_for_integer_lags(lag in 20usize..120, seed in any::<u64>()) {
        let dt = 2e-3;
        let p = SystemParams { h: lag as f64 * dt, ..SystemParams::reference() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ic = profiles::random_smooth(&mut rng, p.length, p.h, 4);
        let run = simulate(&p, &ic, 3.0 * p.h, 60, dt, Mode::Nonlinear, &SimOptions::default()).unwrap();
        for n in lag..run.rows.len() {
            prop_assert_eq!(run.rows[n].z1, run.rows[n - lag].trace0);
        }
    }
}
