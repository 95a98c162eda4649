//! Spin–boson dephasing: size of the boson cloud `‖g‖²` with `g(ω) = λ f(ω)/ω`,
//! the overlap `⟨φ[−g], φ[g]⟩ = e^{−2‖g‖²}` of the two dressed ground states, and
//! the incompatibility between a finite cloud and Markovian dephasing.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::integrate;

type Amplitude = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Coupling `λ σ_3 ⊗ ∫ (f(ω) a(ω) + h.c.) dω` with `|f(ω)|² ~ ω^s` near zero.
#[derive(Clone)]
pub struct SpinBosonCoupling {
    pub lambda: f64,
    f: Amplitude,
    /// Declared infrared exponent `s`.
    pub s: f64,
    /// Frequency scale; also sets the quadrature substitution.
    pub omega_c: f64,
}

impl fmt::Debug for SpinBosonCoupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpinBosonCoupling")
            .field("lambda", &self.lambda)
            .field("s", &self.s)
            .field("omega_c", &self.omega_c)
            .finish_non_exhaustive()
    }
}

impl SpinBosonCoupling {
    pub fn new(lambda: f64, s: f64, omega_c: f64, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Result<Self> {
        if !lambda.is_finite() || !s.is_finite() || s < 0.0 {
            return Err(Error::InvalidParameter("lambda must be finite and s >= 0".into()));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega_c must be > 0, got {omega_c}")));
        }
        Ok(Self { lambda, f: Arc::new(f), s, omega_c })
    }

    /// `|f(ω)|² = ω^s e^{−2ω/ω_c}`, the standard exponentially cut-off family.
    pub fn power_law(lambda: f64, s: f64, omega_c: f64) -> Result<Self> {
        Self::new(lambda, s, omega_c, move |w| Complex64::from((w.powf(s) * (-2.0 * w / omega_c).exp()).sqrt()))
    }

    pub fn amplitude(&self, omega: f64) -> Complex64 {
        (self.f)(omega)
    }

    /// Markovian dephasing rate the coupling would demand: `R̂(0) = λ²|f(0)|²`.
    pub fn zero_frequency_rate(&self) -> f64 {
        self.lambda * self.lambda * self.amplitude(0.0).norm_sqr()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CloudNorm {
    Finite(f64),
    Divergent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OverlapReport {
    pub norm_g_sq: CloudNorm,
    pub overlap: f64,
    /// Quadrature error estimate for `‖g‖²`; zero when no quadrature was needed.
    pub quad_error: f64,
}

/// `‖g‖² = λ² ∫₀^∞ |f(ω)|²/ω² dω`, reported divergent without quadrature when `s ≤ 1`.
pub fn spin_boson_overlap(c: &SpinBosonCoupling, quad_tol: f64) -> Result<OverlapReport> {
    if c.lambda == 0.0 {
        return Ok(OverlapReport { norm_g_sq: CloudNorm::Finite(0.0), overlap: 1.0, quad_error: 0.0 });
    }
    if c.s <= 1.0 {
        return Ok(OverlapReport { norm_g_sq: CloudNorm::Divergent, overlap: 0.0, quad_error: 0.0 });
    }
    // ω = ω_c u/(1 − u) maps [0, 1) onto [0, ∞)
    let wc = c.omega_c;
    let integrand = |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - u;
        let w = wc * u / s;
        let v = c.amplitude(w).norm_sqr() / (w * w) * wc / (s * s);
        if v.is_finite() { v } else { 0.0 }
    };
    let r = integrate(integrand, 0.0, 1.0, quad_tol, 0.0)?;
    let lam2 = c.lambda * c.lambda;
    let norm = lam2 * r.value;
    Ok(OverlapReport { norm_g_sq: CloudNorm::Finite(norm), overlap: (-2.0 * norm).exp(), quad_error: lam2 * r.error })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityVerdict {
    /// No coupling: nothing to dephase, nothing to diverge.
    Uncoupled,
    /// `R̂(0) > 0` forces `‖g‖ = ∞`: Markovian dephasing is not admissible.
    MarkovianDephasingInadmissible,
    /// Finite cloud, but `R̂(0) = 0`: no exponential dephasing.
    NoMarkovianDephasing,
    /// `R̂(0) = 0` and still a divergent cloud (ohmic or subohmic).
    DivergentCloud,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub zero_frequency_rate: f64,
    pub norm_g_sq: CloudNorm,
    pub verdict: FeasibilityVerdict,
    /// The declared exponent contradicts `f(0) ≠ 0` (which means `s = 0`).
    pub exponent_inconsistent: bool,
}

pub fn dephasing_feasibility(c: &SpinBosonCoupling) -> Result<FeasibilityReport> {
    let r0 = c.zero_frequency_rate();
    if c.lambda == 0.0 {
        return Ok(FeasibilityReport {
            zero_frequency_rate: 0.0,
            norm_g_sq: CloudNorm::Finite(0.0),
            verdict: FeasibilityVerdict::Uncoupled,
            exponent_inconsistent: false,
        });
    }
    if r0 > 0.0 {
        // |f|²/ω² ~ |f(0)|²/ω² is not integrable at the origin
        return Ok(FeasibilityReport {
            zero_frequency_rate: r0,
            norm_g_sq: CloudNorm::Divergent,
            verdict: FeasibilityVerdict::MarkovianDephasingInadmissible,
            exponent_inconsistent: c.s > 0.0,
        });
    }
    let norm = spin_boson_overlap(c, 1e-10)?.norm_g_sq;
    let verdict = match norm {
        CloudNorm::Finite(_) => FeasibilityVerdict::NoMarkovianDephasing,
        CloudNorm::Divergent => FeasibilityVerdict::DivergentCloud,
    };
    Ok(FeasibilityReport { zero_frequency_rate: r0, norm_g_sq: norm, verdict, exponent_inconsistent: c.s == 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn superohmic_closed_form() {
        let (lambda, wc) = (0.3, 2.5);
        let c = SpinBosonCoupling::power_law(lambda, 2.0, wc).unwrap();
        let r = spin_boson_overlap(&c, 1e-12).unwrap();
        let CloudNorm::Finite(n) = r.norm_g_sq else { panic!("expected finite") };
        assert!((n - lambda * lambda * wc / 2.0).abs() < 1e-10);
        assert!((r.overlap - (-lambda * lambda * wc).exp()).abs() < 1e-10);
    }

    #[test]
    fn ohmic_diverges_and_uncoupled_overlaps() {
        let c = SpinBosonCoupling::power_law(0.3, 1.0, 1.0).unwrap();
        assert_eq!(spin_boson_overlap(&c, 1e-8).unwrap().norm_g_sq, CloudNorm::Divergent);
        let c = SpinBosonCoupling::power_law(0.0, 0.5, 1.0).unwrap();
        assert_eq!(spin_boson_overlap(&c, 1e-8).unwrap().overlap, 1.0);
    }

    #[test]
    fn feasibility_verdicts() {
        let flat = SpinBosonCoupling::power_law(0.2, 0.0, 1.0).unwrap();
        let rep = dephasing_feasibility(&flat).unwrap();
        assert_eq!(rep.verdict, FeasibilityVerdict::MarkovianDephasingInadmissible);
        assert!(rep.zero_frequency_rate > 0.0);
        let sup = SpinBosonCoupling::power_law(0.2, 3.0, 1.0).unwrap();
        assert_eq!(dephasing_feasibility(&sup).unwrap().verdict, FeasibilityVerdict::NoMarkovianDephasing);
        let ohm = SpinBosonCoupling::power_law(0.2, 1.0, 1.0).unwrap();
        assert_eq!(dephasing_feasibility(&ohm).unwrap().verdict, FeasibilityVerdict::DivergentCloud);
        let none = SpinBosonCoupling::power_law(0.0, 1.0, 1.0).unwrap();
        assert_eq!(dephasing_feasibility(&none).unwrap().verdict, FeasibilityVerdict::Uncoupled);
    }
}
