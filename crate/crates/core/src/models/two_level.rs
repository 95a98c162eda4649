//! Qubit with damping, pumping and pure dephasing (the Bloch equation).
//!
//! Level `|1⟩` is basis index 0 and `|2⟩` is index 1, so `σ_3 = diag(−1, 1)` and
//! `σ⁺ = |2⟩⟨1|`. The dephasing term is `−(δ/2)[σ_3, [σ_3, ρ]]`, i.e. a jump
//! `√δ σ_3`, which damps coherences at rate `2δ`.

use num_complex::Complex64;

use super::{require_finite, require_rate};
use crate::error::Result;
use crate::gkls::GklsGenerator;
use crate::linalg::I;
use crate::operators::standard::{sigma_3, sigma_minus, sigma_plus};
use crate::operators::{DensityMatrix, Operator};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelParams {
    pub omega: f64,
    pub gamma_down: f64,
    pub gamma_up: f64,
    pub delta: f64,
}

impl TwoLevelParams {
    pub fn new(omega: f64, gamma_down: f64, gamma_up: f64, delta: f64) -> Result<Self> {
        let p = Self { omega, gamma_down, gamma_up, delta };
        p.validate()?;
        Ok(p)
    }

    /// Rates obeying `γ↑/γ↓ = e^{−ω/T}`.
    pub fn thermal(omega: f64, gamma_down: f64, temperature: f64, delta: f64) -> Result<Self> {
        Self::new(omega, gamma_down, gamma_down * (-omega / temperature).exp(), delta)
    }

    pub fn validate(&self) -> Result<()> {
        require_finite("omega", self.omega)?;
        require_rate("gamma_down", self.gamma_down)?;
        require_rate("gamma_up", self.gamma_up)?;
        require_rate("delta", self.delta)
    }

    /// Stationary population of `|1⟩` when `γ↓ + γ↑ > 0`.
    pub fn stationary_p1(&self) -> Option<f64> {
        let total = self.gamma_down + self.gamma_up;
        (total > 0.0).then(|| self.gamma_down / total)
    }

    /// Decay rate of the coherence `α`.
    pub fn coherence_rate(&self) -> f64 {
        0.5 * (self.gamma_down + self.gamma_up) + 2.0 * self.delta
    }
}

pub fn two_level_generator(p: &TwoLevelParams) -> Result<GklsGenerator> {
    p.validate()?;
    let h = sigma_3().scale_real(0.5 * p.omega);
    let mut jumps = Vec::new();
    if p.gamma_down > 0.0 {
        jumps.push(sigma_minus().scale_real(p.gamma_down.sqrt()));
    }
    if p.gamma_up > 0.0 {
        jumps.push(sigma_plus().scale_real(p.gamma_up.sqrt()));
    }
    if p.delta > 0.0 {
        jumps.push(sigma_3().scale_real(p.delta.sqrt()));
    }
    GklsGenerator::new(h, jumps)
}

/// Closed-form `ρ_t = p₁P₁ + (1 − p₁)P₂ + ασ⁺ + ᾱσ⁻`.
pub fn two_level_analytic(p: &TwoLevelParams, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    p.validate()?;
    let p1_0 = rho0.op().get(0, 0).re;
    let alpha0 = rho0.op().get(1, 0);
    let total = p.gamma_down + p.gamma_up;
    let p1 = match p.stationary_p1() {
        Some(p_inf) => {
            let e = (-total * t).exp();
            p1_0 * e + p_inf * (1.0 - e)
        }
        None => p1_0,
    };
    let alpha = alpha0 * (-I * p.omega * t - Complex64::from(p.coherence_rate() * t)).exp();
    let m = Operator::from_fn(2, |i, j| match (i, j) {
        (0, 0) => Complex64::from(p1),
        (1, 1) => Complex64::from(1.0 - p1),
        (1, 0) => alpha,
        _ => alpha.conj(),
    });
    Ok(DensityMatrix::new_unchecked(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::standard::plus_state;
    use crate::propagation::evolve_exact;

    #[test]
    fn stationary_population() {
        let p = TwoLevelParams::new(1.3, 0.2, 0.1, 0.0).unwrap();
        let g = two_level_generator(&p).unwrap();
        let rho = g.stationary_state().unwrap();
        assert!((rho.op().get(0, 0).re - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn analytic_matches_exponential() {
        let p = TwoLevelParams::new(0.8, 0.3, 0.05, 0.4).unwrap();
        let g = two_level_generator(&p).unwrap().superoperator();
        let rho0 = plus_state();
        for t in [0.0, 0.5, 3.0, 10.0] {
            let a = two_level_analytic(&p, &rho0, t).unwrap();
            let b = evolve_exact(&g, t, &rho0).unwrap();
            assert!(a.op().max_abs_diff(b.op()) < 1e-12, "t={t}");
        }
    }

    #[test]
    fn pure_damping_from_excited_state() {
        let p = TwoLevelParams::new(2.0, 0.7, 0.0, 0.0).unwrap();
        let rho = two_level_analytic(&p, &DensityMatrix::basis(2, 1), 1.5).unwrap();
        assert!((rho.op().get(0, 0).re - (1.0 - (-0.7f64 * 1.5).exp())).abs() < 1e-15);
    }

    #[test]
    fn closed_qubit_and_invalid_rates() {
        let g = two_level_generator(&TwoLevelParams { omega: 1.0, gamma_down: 0.0, gamma_up: 0.0, delta: 0.0 }).unwrap();
        assert!(g.jumps().is_empty());
        assert!(TwoLevelParams::new(1.0, -0.1, 0.0, 0.0).is_err());
    }
}
