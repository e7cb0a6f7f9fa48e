use approx::assert_relative_eq;
use proptest::prelude::*;

use istms::analytic::*;
use istms::params::SystemParams;

/// Adaptive Simpson quadrature, used as an independent oracle.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

fn rd(chi: f64, lambda: f64) -> Readout {
    Readout::new(chi, lambda, 1.0).unwrap()
}

#[test]
fn threshold_rate_identity() {
    for chi in [0.1, 0.05, 0.01] {
        let r = Readout::at_threshold(chi, 1.0).unwrap();
        for n0 in [1.0, 10.0, 250.0] {
            assert_relative_eq!(gamma_istms(&r, n0).unwrap(), 4.0 * n0, max_relative = 1e-12);
        }
    }
}

#[test]
fn standard_rate_branches() {
    assert_relative_eq!(gamma_standard(0.5, 1.0, 10.0).unwrap(), 40.0, max_relative = 1e-15);
    assert_relative_eq!(gamma_standard(0.01, 1.0, 10.0).unwrap(), 2e-3, max_relative = 1e-12);
    assert!(gamma_standard(0.7, 1.0, 1.0).is_err());
    // weak-coupling ratio at equal total photons
    let r = Readout::at_threshold(0.01, 1.0).unwrap();
    assert_relative_eq!(rate_ratio_weak(&r, 25.0).unwrap(), 0.5, max_relative = 1e-15);
}

#[test]
fn beta_mapping() {
    // chi = lambda = 0: n0 = 4 beta²/kappa
    let r = rd(0.0, 0.0);
    assert_relative_eq!(beta_to_n0(&r, 0.5).unwrap(), 1.0, max_relative = 1e-15);
    let r = rd(0.07, 0.31);
    for b in [0.01, 0.3, 2.0] {
        assert_relative_eq!(n0_to_beta(&r, beta_to_n0(&r, b).unwrap()).unwrap(), b, max_relative = 1e-12);
    }
    assert!(beta_to_n0(&rd(0.0, 0.5), 1.0).is_err());
}

#[test]
fn signal_limits() {
    let r = rd(0.05, 0.45);
    let d = DriveConfig::nbar0(10.0);
    assert_eq!(signal_mean(0.0, &r, &d).unwrap(), 0.0);
    // odd in sigma
    let up = signal_mean(3.0, &r, &d).unwrap();
    let down = signal_mean(3.0, &r, &d.with_sigma(-1.0)).unwrap();
    assert_eq!(up, -down);
    assert!(signal_mean(1.0, &r, &d.with_sigma(0.5)).is_err());
    // chi -> 0 is continuous
    let tiny = integrated_signal(50.0, &rd(1e-9, 0.3), 10.0).unwrap() / 1e-9;
    let small = integrated_signal(50.0, &rd(1e-7, 0.3), 10.0).unwrap() / 1e-7;
    assert_relative_eq!(tiny, small, max_relative = 1e-6);
    assert_eq!(integrated_signal(0.0, &r, 10.0).unwrap(), 0.0);
}

#[test]
fn signal_matches_quadrature() {
    for &(chi, lambda) in &[(0.05, 0.45), (0.3, 0.1), (1e-3, 0.25), (1.0, 0.0), (0.01, 0.49)] {
        let r = rd(chi, lambda);
        let d = DriveConfig::nbar0(7.0);
        for tau in [0.05, 0.7, 4.0, 30.0] {
            let f = |t: f64| signal_mean(t, &r, &d).unwrap();
            let quad = 2.0 * r.kappa.sqrt() * simpson(&f, 0.0, tau, 1e-14);
            let exact = integrated_signal(tau, &r, 7.0).unwrap();
            assert_relative_eq!(exact, quad, max_relative = 1e-6);
        }
    }
}

#[test]
fn noise_matches_quadrature() {
    for &(chi, lambda) in &[(0.05, 0.45), (0.3, 0.1), (1e-3, 0.25), (0.5, 0.0)] {
        let r = rd(chi, lambda);
        for tau in [0.05, 0.7, 4.0, 30.0] {
            // κ ∫∫ M_N = κ [w τ + 2 ∫₀^τ (τ − Δ) smooth(Δ) dΔ]
            let k0 = noise_kernel(0.0, 0.0, &r);
            let f = |d: f64| 2.0 * (tau - d) * noise_kernel(d, 0.0, &r).smooth;
            let quad = r.kappa * (k0.delta_weight * tau + simpson(&f, 0.0, tau, 1e-14));
            assert_relative_eq!(integrated_noise(tau, &r).unwrap(), quad, max_relative = 1e-6);
        }
    }
}

#[test]
fn kernel_symmetry() {
    let r = rd(0.2, 0.3);
    let a = noise_kernel(1.3, 0.4, &r);
    let b = noise_kernel(0.4, 1.3, &r);
    assert_eq!(a, b);
    assert_eq!(a.delta_weight, 0.5);
}

#[test]
fn lossless_special_cases_are_identical() {
    let r = rd(0.05, 0.45);
    let d = DriveConfig::nbar0(10.0);
    for tau in [0.3, 10.0, 500.0] {
        let s = snr(tau, &r, &d).unwrap();
        assert_eq!(snr_ext(tau, &r, &d, 0.0).unwrap(), s);
        assert_eq!(snr_int(tau, &r, &d, 0.0).unwrap(), s);
    }
}

#[test]
fn external_loss_long_time_form() {
    // threshold, external loss: 4 n0 (1-η) κτ / (1 + η[(κ/χ)²/2 − κ/χ])
    let chi = 0.05;
    let r = Readout::at_threshold(chi, 1.0).unwrap();
    let n0 = 10.0;
    for eta in [0.001, 0.01, 0.1] {
        let s = snr_ext(1.0, &r, &DriveConfig::nbar0(n0), eta).unwrap();
        let k = 1.0 / chi;
        let expect = 4.0 * n0 * (1.0 - eta) / (1.0 + eta * (k * k / 2.0 - k));
        assert_relative_eq!(s.rate_longtime, expect, max_relative = 1e-12);
    }
}

#[test]
fn fidelity_and_tau_star() {
    assert_eq!(fidelity_from_snr(0.0), 0.5);
    let s = snr_for_fidelity(F_TARGET).unwrap();
    assert_relative_eq!(fidelity_from_snr(s), F_TARGET, max_relative = 1e-15);
    assert!(snr_for_fidelity(0.5).is_err());
    let r = Readout::at_threshold(0.05, 1.0).unwrap();
    let mut last = f64::INFINITY;
    for n0 in [5.0, 10.0, 50.0, 200.0] {
        let t = tau_star(&r, &DriveConfig::nbar0(n0), F_TARGET, SnrModel::Lossless).unwrap();
        assert!(t < last);
        let f = fidelity_from_snr(snr(t, &r, &DriveConfig::nbar0(n0)).unwrap().snr);
        assert!((f - F_TARGET).abs() < 1e-9);
        last = t;
    }
    // unreachable target
    let weak = Readout::new(1e-4, 0.0, 1.0).unwrap();
    let e = tau_star(&weak, &DriveConfig::nbar0(1.0), F_TARGET, SnrModel::Lossless).unwrap_err();
    assert!(e.is_convergence());
}

#[test]
fn params_readout_bridge() {
    let p = SystemParams::comparison_point(0.45);
    let r = Readout::from_params(&p).unwrap();
    assert_relative_eq!(r.chi, 0.05 / 1.002025, max_relative = 1e-14);
    assert_eq!(intracavity_variance(0.0, 1.0).unwrap(), 0.5);
    assert!(intracavity_variance(0.5, 1.0).is_err());
}

proptest! {
    #[test]
    fn noise_below_vacuum(chi in 0.0f64..2.0, lfrac in 0.0f64..0.999, tau in 50.0f64..5000.0) {
        let r = rd(chi, 0.5 * lfrac);
        let n = integrated_noise(tau, &r).unwrap();
        prop_assert!(n <= 0.5 * r.kappa * tau * (1.0 + 1e-12));
        prop_assert!(n > 0.0);
    }

    #[test]
    fn snr_grows_with_photons(chi in 0.005f64..0.5, lfrac in 0.0f64..0.99, tau in 0.1f64..100.0, n0 in 0.1f64..100.0) {
        let r = rd(chi, 0.5 * lfrac);
        let a = snr(tau, &r, &DriveConfig::nbar0(n0)).unwrap().snr;
        let b = snr(tau, &r, &DriveConfig::nbar0(4.0 * n0)).unwrap().snr;
        prop_assert!((b - 2.0 * a).abs() <= 1e-9 * b);
    }

    #[test]
    fn losses_only_hurt(chi in 0.01f64..0.5, tau in 1.0f64..200.0, loss in 0.001f64..0.5) {
        let r = Readout::at_threshold(chi, 1.0).unwrap();
        let d = DriveConfig::nbar0(10.0);
        let s0 = snr(tau, &r, &d).unwrap().snr;
        prop_assert!(snr_ext(tau, &r, &d, loss).unwrap().snr <= s0 * (1.0 + 1e-12));
    }

    #[test]
    fn erfc_inverse_round_trip(y in 1e-12f64..1.999) {
        let x = istms::special::erfc_inv(y);
        prop_assert!((istms::special::erfc(x) - y).abs() <= 1e-13 * y.max(1e-3));
    }
}
