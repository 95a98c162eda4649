//! Davies transition rates against the golden-rule rate `λ² R̂(±ε)`, with
//! `R̂` taken from a sampled bath correlation and compared to its closed form.

use nalgebra::DMatrix;
use num_complex::Complex64;

use qds_core::davies::{build_davies, spectral_from_correlation, CorrelationGrid};
use qds_core::operators::standard::{sigma_1, sigma_3};
use qds_core::operators::Operator;

/// Transform of `A e^{−|t|/τ} e^{iΩt}`.
fn shifted_lorentzian(a: f64, tau: f64, big_omega: f64, w: f64) -> f64 {
    let x = (w - big_omega) * tau;
    2.0 * a * tau / (1.0 + x * x)
}

#[test]
fn sampled_correlation_reproduces_transform() {
    let (a, tau, big_omega) = (0.8, 1.5, 0.6);
    let corr = move |t: f64| {
        DMatrix::from_element(1, 1, Complex64::from_polar(a * (-t.abs() / tau).exp(), big_omega * t))
    };
    let (r, warnings) =
        spectral_from_correlation(1, corr, CorrelationGrid { t_max: 60.0, n: 6000 }, &[-2.0, 0.0, 2.0]).unwrap();
    assert!(warnings.is_empty());
    for w in [-2.0, -0.7, 0.0, 0.6, 1.3, 3.0] {
        let got = r.evaluate(w).unwrap()[(0, 0)];
        assert!((got.re - shifted_lorentzian(a, tau, big_omega, w)).abs() < 1e-7, "ω = {w}");
        assert!(got.im.abs() < 1e-9);
    }
}

#[test]
fn qubit_rates_follow_golden_rule() {
    let (a, tau, big_omega) = (0.8, 1.5, 0.6);
    let (eps, lambda) = (1.1, 0.3);
    let corr = move |t: f64| {
        DMatrix::from_element(1, 1, Complex64::from_polar(a * (-t.abs() / tau).exp(), big_omega * t))
    };
    let (r, _) = spectral_from_correlation(1, corr, CorrelationGrid { t_max: 60.0, n: 6000 }, &[]).unwrap();
    let h = sigma_3().scale_real(eps / 2.0);
    let g = build_davies(&h, &[sigma_1()], &r, lambda).unwrap();
    // index 1 is the upper level; decay lowers the energy by ε
    let decay = g.apply(&Operator::unit(2, 1, 1)).get(0, 0).re;
    let excite = g.apply(&Operator::unit(2, 0, 0)).get(1, 1).re;
    let l2 = lambda * lambda;
    assert!((decay - l2 * shifted_lorentzian(a, tau, big_omega, eps)).abs() < 1e-8);
    assert!((excite - l2 * shifted_lorentzian(a, tau, big_omega, -eps)).abs() < 1e-8);
    // coherences decay at the mean of the two rates when S has no diagonal part
    let coh = g.apply(&Operator::unit(2, 0, 1)).get(0, 1);
    assert!((coh.re + 0.5 * (decay + excite)).abs() < 1e-8);
}
