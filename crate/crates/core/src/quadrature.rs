//! Adaptive Gauss–Kronrod (7/15) quadrature and composite Simpson on samples.

use crate::error::{Error, Result};

const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XK[i];
        let s = f(c - x) + f(c + x);
        kron += WK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrate `f` over `[a, b]` until the estimated absolute error is below
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Integral> {
    const MAX_INTERVALS: usize = 4000;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter("integration bounds must be finite".into()));
    }
    let mut intervals = vec![{
        let (v, e) = gk15(&mut f, a, b);
        (a, b, v, e)
    }];
    let mut evaluations = 15;
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2).sum();
        let error: f64 = intervals.iter().map(|iv| iv.3).sum();
        if !value.is_finite() {
            return Err(Error::Numerical("integrand produced a non-finite value".into()));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral { value, error, evaluations });
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "quadrature did not converge: error estimate {error:e} after {evaluations} evaluations"
            )));
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("nonempty");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Integrate over `[a, ∞)` through the substitution `x = a + u/(1 − u)`.
pub fn integrate_to_infinity(mut f: impl FnMut(f64) -> f64, a: f64, abs_tol: f64, rel_tol: f64) -> Result<Integral> {
    integrate(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - u;
            let v = f(a + u / s) / (s * s);
            if v.is_finite() { v } else { 0.0 }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Composite Simpson on equispaced samples; falls back to the 3/8 rule on
/// the last three intervals when the interval count is odd.
pub fn simpson_samples(y: &[f64], h: f64) -> f64 {
    let n = y.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (y[0] + y[1]),
        _ => {
            let even = if n % 2 == 0 { n } else { n - 3 };
            let mut s = 0.0;
            let mut k = 0;
            while k + 2 <= even {
                s += h / 3.0 * (y[k] + 4.0 * y[k + 1] + y[k + 2]);
                k += 2;
            }
            if even != n {
                s += 3.0 * h / 8.0 * (y[even] + 3.0 * y[even + 1] + 3.0 * y[even + 2] + y[even + 3]);
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, -1.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((r.value - (64.0 / 6.0 - 1.0 / 6.0 - 3.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let r = integrate(|x| (50.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-12, 0.0).unwrap();
        assert!(r.value.abs() < 1e-11);
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 0.0).unwrap();
        assert!((r.value - 2.0 * (1.0f64 / 1e-2).atan() / 1e-2).abs() < 1e-8);
    }

    #[test]
    fn semi_infinite() {
        let r = integrate_to_infinity(|x| (-x).exp(), 0.0, 1e-13, 0.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = integrate_to_infinity(|x| 1.0 / (1.0 + x * x), 0.0, 1e-12, 0.0).unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn divergent_integral_reports_failure() {
        assert!(integrate_to_infinity(|x| 1.0 / x, 0.0, 1e-8, 0.0).is_err());
    }

    #[test]
    fn simpson_rules() {
        let h = 0.1;
        for n in 2..9 {
            let y: Vec<f64> = (0..=n).map(|k| (k as f64 * h).powi(3)).collect();
            let exact = (n as f64 * h).powi(4) / 4.0;
            assert!((simpson_samples(&y, h) - exact).abs() < 1e-14);
        }
    }
}
