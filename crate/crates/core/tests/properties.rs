//! Independent oracles and invariants across the model, operator, theory and
//! small-ball modules.

use proptest::prelude::*;
use smalldev::smallball::{
    exact_small_case_log_prob, saddlepoint_log_prob, tilted_mc_log_prob,
};
use smalldev::theory::{constant_bp, constant_c, predicted_log_smalldev};
use smalldev::{
    density_amplitude, CoefficientWindow, FitWindow, MaSpec, McConfig, SaddleOrder,
    TruncatedOperator, WeightSequence,
};

/// Adaptive Simpson quadrature, used only as an oracle.
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Largest eigenvalue of `M M^T` by power iteration on the raw rows of `M`.
fn power_iteration_top(op: &TruncatedOperator) -> f64 {
    let rows = op.rows();
    let cols = op.cols();
    let mut v = vec![1.0; rows];
    let mut estimate = 0.0;
    for _ in 0..5000 {
        let mut mt_v = vec![0.0; cols];
        for (r, &vr) in v.iter().enumerate() {
            for (acc, x) in mt_v.iter_mut().zip(op.row(r)) {
                *acc += x * vr;
            }
        }
        let next: Vec<f64> = (0..rows)
            .map(|r| op.row(r).iter().zip(&mt_v).map(|(a, b)| a * b).sum())
            .collect();
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v_norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let new_estimate = norm / v_norm;
        v = next.into_iter().map(|x| x / norm).collect();
        if (new_estimate - estimate).abs() <= 1e-15 * new_estimate {
            return new_estimate;
        }
        estimate = new_estimate;
    }
    estimate
}

fn unit_weights() -> WeightSequence {
    WeightSequence::symmetric(1.0).unwrap()
}

#[test]
fn top_eigenvalue_matches_power_iteration() {
    let window = MaSpec::Ar1 { rho: 0.5, scale: 1.0 }.materialize(1e-14).unwrap();
    let op = TruncatedOperator::build(&window, &unit_weights(), 200).unwrap();
    let spectrum = op.spectrum().unwrap();
    let oracle = power_iteration_top(&op);
    assert!((spectrum.lambda(1) / oracle - 1.0).abs() <= 1e-8, "{} vs {oracle}", spectrum.lambda(1));
}

#[test]
fn ar1_constant_matches_simpson_oracle() {
    let window = MaSpec::Ar1 { rho: 0.5, scale: 1.0 }.materialize(1e-15).unwrap();
    let tau = std::f64::consts::TAU;

    let p1 = adaptive_simpson(&|x: f64| 1.0 / (1.25 - x.cos()).sqrt(), 0.0, tau, 1e-14) / tau;
    let (c1, meta) = constant_c(&window, &unit_weights(), 1e-10).unwrap();
    assert!((c1 / (4.0 * p1 * p1) - 1.0).abs() < 1e-10);
    assert!((c1 - 4.606_878_481_876_553).abs() < 1e-12);
    assert!(meta.rel_err <= 1e-10);

    let w2 = WeightSequence::symmetric(2.0).unwrap();
    let p2 = adaptive_simpson(&|x: f64| (1.25 - x.cos()).powf(-0.25), 0.0, tau, 1e-14) / tau;
    let (c2, _) = constant_c(&window, &w2, 1e-10).unwrap();
    assert!((c2 / (16.0 * p2.powi(4)) - 1.0).abs() < 1e-10);
    assert!((c2 - 17.143_596_539_364_368).abs() < 1e-10);
}

#[test]
fn bp_against_high_precision_values() {
    let reference = [
        (0.6, 2_060.590_692_676_835_6),
        (0.75, 3.536_095_247_000_319_4),
        (1.25, 1.193_256_551_524_243_8),
        (2.0, 1.725_431_667_926_433_7),
        (3.0, 2.642_252_699_282_717_4),
        (5.0, 4.583_280_236_607_924),
        (10.0, 9.541_246_509_789_968),
    ];
    for (p, expected) in reference {
        let got = constant_bp(p).unwrap();
        assert!((got / expected - 1.0).abs() < 1e-13, "p = {p}: {got} vs {expected}");
    }
    let steep = constant_bp(0.55).unwrap();
    assert!((steep / 5_808_870_085.368_092 - 1.0).abs() < 1e-11, "{steep}");
    for i in 1..2000 {
        let p = 0.5 + i as f64 * 0.005;
        let b = constant_bp(p).unwrap();
        assert!(b > 0.0 && b.is_finite(), "p = {p}");
    }
}

#[test]
fn counting_function_is_dual_to_decay() {
    let window = MaSpec::Ar1 { rho: 0.5, scale: 1.0 }.materialize(1e-14).unwrap();
    let spectrum = TruncatedOperator::build(&window, &unit_weights(), 600).unwrap().spectrum().unwrap();
    let fit = spectrum.fit_decay_constant(1.0, FitWindow::default_for(600)).unwrap();
    let target = fit.c_hat.sqrt();
    let band = (fit.upper_quartile.sqrt() - fit.lower_quartile.sqrt()).max(0.0);
    for n in [80, 120, 160, 200, 240] {
        let scaled = spectrum.counting_scaled(1.0, n);
        assert!((scaled - target).abs() <= band + 2.0 * target / n as f64, "n = {n}: {scaled} vs {target}");
    }
}

#[test]
fn fitted_constant_converges_with_n() {
    let window = MaSpec::TwoSidedGeometric { rho: 0.4, scale: 1.0 }.materialize(1e-14).unwrap();
    let w = WeightSequence::new(1.0, 1.0, 0.5).unwrap();
    let (c, _) = constant_c(&window, &w, 1e-10).unwrap();
    let mut gaps = Vec::new();
    for n in [100, 400] {
        let s = TruncatedOperator::build(&window, &w, n).unwrap().spectrum().unwrap();
        let fit = s.fit_decay_constant(1.0, FitWindow::default_for(n)).unwrap();
        gaps.push((fit.c_hat / c - 1.0).abs());
    }
    assert!(gaps[1] < 0.05, "{gaps:?}");
}

#[test]
fn overrides_leave_constant_unchanged() {
    let window = MaSpec::Ar1 { rho: 0.3, scale: 1.0 }.materialize(1e-14).unwrap();
    let w = unit_weights();
    let overridden = w.clone().with_overrides([(0, 3.0), (1, 0.0), (-2, 5.0)]).unwrap();
    let (a, _) = constant_c(&window, &w, 1e-10).unwrap();
    let (b, _) = constant_c(&window, &overridden, 1e-10).unwrap();
    assert_eq!(a, b);
}

#[test]
fn truncation_monotonicity_of_probability() {
    let window = MaSpec::Ar1 { rho: 0.5, scale: 1.0 }.materialize(1e-12).unwrap();
    let eps = 1.0;
    let cfg = McConfig::new(40_000, 17);
    let mut previous: Option<(f64, f64)> = None;
    for n in [25, 50, 100] {
        let s = TruncatedOperator::build(&window, &unit_weights(), n).unwrap().spectrum().unwrap();
        let e = tilted_mc_log_prob(&s.eigenvalues, eps, &cfg).unwrap();
        if let Some((lp, se)) = previous {
            assert!(e.log_prob <= lp + 3.0 * se.hypot(e.std_err.unwrap()));
        }
        previous = Some((e.log_prob, e.std_err.unwrap()));
    }
}

fn arb_window() -> impl Strategy<Value = CoefficientWindow> {
    (prop::collection::vec(-2.0f64..2.0, 1..6), -5i64..5).prop_filter_map("nonzero", |(coeffs, offset)| {
        MaSpec::Explicit { coeffs, offset }.materialize(1e-12).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn density_is_shift_invariant_and_reversal_symmetric(window in arb_window(), h in -20i64..20) {
        let grid = 64;
        let base = density_amplitude(&window, grid).unwrap();
        let shifted = density_amplitude(&window.shifted(h), grid).unwrap();
        prop_assert_eq!(&base.amplitudes, &shifted.amplitudes);
        let reversed = density_amplitude(&window.reversed(), grid).unwrap();
        for (a, b) in base.amplitudes.iter().zip(&reversed.amplitudes) {
            prop_assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn parseval_holds_for_finite_windows(window in arb_window()) {
        let g = density_amplitude(&window, 64).unwrap();
        let gamma0 = window.autocovariance(0);
        prop_assert!((g.mean_of(|a| a * a) - gamma0).abs() <= 1e-12 * gamma0);
    }

    #[test]
    fn constant_invariances(window in arb_window(), h in -10i64..10, c in 0.1f64..3.0, p in 0.6f64..3.0) {
        let w = WeightSequence::symmetric(p).unwrap();
        let (base, _) = constant_c(&window, &w, 1e-10).unwrap();
        let (shifted, _) = constant_c(&window.shifted(h), &w, 1e-10).unwrap();
        prop_assert_eq!(base, shifted);
        let (reversed, _) = constant_c(&window.reversed(), &w, 1e-10).unwrap();
        prop_assert!((reversed / base - 1.0).abs() <= 1e-9);
        let (scaled, _) = constant_c(&window.scaled(c), &w, 1e-10).unwrap();
        prop_assert!((scaled / (c * c * base) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn constant_is_monotone_in_side_weights(dp in 0.0f64..2.0, dm in 0.0f64..2.0, bump in 0.01f64..1.0) {
        prop_assume!(dp.max(dm) > 0.0);
        let window = MaSpec::Ar1 { rho: 0.5, scale: 1.0 }.materialize(1e-12).unwrap();
        let (c0, _) = constant_c(&window, &WeightSequence::new(1.5, dp, dm).unwrap(), 1e-10).unwrap();
        let (c1, _) = constant_c(&window, &WeightSequence::new(1.5, dp + bump, dm).unwrap(), 1e-10).unwrap();
        let (c2, _) = constant_c(&window, &WeightSequence::new(1.5, dp, dm + bump).unwrap(), 1e-10).unwrap();
        prop_assert!(c1 >= c0 && c2 >= c0);
    }

    #[test]
    fn prediction_scaling(p in 0.6f64..3.0, c in 0.1f64..10.0, k in 0.2f64..5.0, eps in 0.01f64..1.0) {
        let a = predicted_log_smalldev(p, k * k * c, eps);
        let b = predicted_log_smalldev(p, c, eps / k);
        prop_assert!((a / b - 1.0).abs() <= 1e-12);
        prop_assert!(predicted_log_smalldev(p, 2.0 * c, eps) < predicted_log_smalldev(p, c, eps));
        prop_assert!(predicted_log_smalldev(p, c, 1.5 * eps) > predicted_log_smalldev(p, c, eps));
    }

    #[test]
    fn spectrum_trace_and_scale(window in arb_window(), n in 1usize..40, p in 0.6f64..2.5) {
        let w = WeightSequence::new(p, 1.0, 0.7).unwrap();
        let op = TruncatedOperator::build(&window, &w, n).unwrap();
        let spectrum = op.spectrum().unwrap();
        let fro = op.frobenius_sq();
        prop_assert!((spectrum.total() - fro).abs() <= 1e-10 * fro);
        prop_assert!(spectrum.eigenvalues.windows(2).all(|v| v[0] >= v[1]));
        let doubled = TruncatedOperator::build(&window.scaled(2.0), &w, n).unwrap().spectrum().unwrap();
        for (a, b) in doubled.eigenvalues.iter().zip(&spectrum.eigenvalues) {
            prop_assert_eq!(*a, 4.0 * b);
        }
    }

    #[test]
    fn spectrum_is_monotone_in_truncation(window in arb_window(), n in 2usize..30, extra in 1usize..20) {
        let w = unit_weights();
        let small = TruncatedOperator::build(&window, &w, n).unwrap().spectrum().unwrap();
        let big = TruncatedOperator::build(&window, &w, n + extra).unwrap().spectrum().unwrap();
        let slack = 1e-12 * big.lambda(1);
        for (s, b) in small.eigenvalues.iter().zip(&big.eigenvalues) {
            prop_assert!(*b >= *s - slack);
        }
    }

    #[test]
    fn saddlepoint_scale_invariance(
        lambdas in prop::collection::vec(0.01f64..5.0, 1..30),
        frac in 0.05f64..0.9,
        c in 0.2f64..5.0,
    ) {
        let total: f64 = lambdas.iter().sum();
        let eps = (frac * total).sqrt();
        let scaled: Vec<f64> = lambdas.iter().map(|l| c * c * l).collect();
        for order in [SaddleOrder::Leading, SaddleOrder::Corrected] {
            let a = saddlepoint_log_prob(&lambdas, eps, order).unwrap();
            let b = saddlepoint_log_prob(&scaled, c * eps, order).unwrap();
            prop_assert!((a.log_prob - b.log_prob).abs() <= 1e-9 * (1.0 + a.log_prob.abs()));
            prop_assert!(a.log_prob <= 0.0);
        }
    }

    #[test]
    fn exact_forms_are_scale_invariant(lambda in 0.1f64..10.0, eps in 0.05f64..3.0) {
        let a = exact_small_case_log_prob(&[1.0], eps).unwrap().log_prob;
        let b = exact_small_case_log_prob(&[lambda], eps * lambda.sqrt()).unwrap().log_prob;
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        let a = exact_small_case_log_prob(&[1.0, 1.0], eps).unwrap().log_prob;
        let b = exact_small_case_log_prob(&[lambda, lambda], eps * lambda.sqrt()).unwrap().log_prob;
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}
