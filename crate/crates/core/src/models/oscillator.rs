//! Damped and pumped harmonic oscillator on a truncated Fock space, with the
//! exact generating function of the untruncated model as oracle.
//!
//! `F_t(z) = Tr(ρ_t e^{za − z̄a⁺}) = e^{−A(t)} F_0(z_t)` where, with `κ = γ↓ − γ↑`,
//!
//! ```text
//! z_t  = z exp(−iωt − κt/2)
//! A(t) = |z|² (γ↓ + γ↑) / (2κ) · (1 − e^{−κt})
//! ```

use num_complex::Complex64;

use super::{require_finite, require_rate};
use crate::error::{Error, Result};
use crate::gkls::GklsGenerator;
use crate::linalg::{c, CVec, I};
use crate::operators::standard::{annihilation, creation, number};
use crate::operators::{DensityMatrix, Operator};

/// Results are unreliable once the top two Fock levels hold more than this.
pub const LEAKAGE_LIMIT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorParams {
    pub omega: f64,
    pub gamma_down: f64,
    pub gamma_up: f64,
    pub n_trunc: usize,
}

impl OscillatorParams {
    pub fn new(omega: f64, gamma_down: f64, gamma_up: f64, n_trunc: usize) -> Result<Self> {
        let p = Self { omega, gamma_down, gamma_up, n_trunc };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_finite("omega", self.omega)?;
        require_rate("gamma_down", self.gamma_down)?;
        require_rate("gamma_up", self.gamma_up)?;
        if self.gamma_down <= self.gamma_up {
            return Err(Error::InvalidParameter("gamma_down must exceed gamma_up".into()));
        }
        if self.n_trunc < 2 {
            return Err(Error::InvalidParameter(format!("n_trunc must be >= 2, got {}", self.n_trunc)));
        }
        Ok(())
    }

    /// `κ = γ↓ − γ↑`
    pub fn kappa(&self) -> f64 {
        self.gamma_down - self.gamma_up
    }

    /// Stationary mean occupation `γ↑/κ`.
    pub fn stationary_mean(&self) -> f64 {
        self.gamma_up / self.kappa()
    }

    /// `ω/T = ln(γ↓/γ↑)`; infinite at zero temperature.
    pub fn omega_over_t(&self) -> f64 {
        (self.gamma_down / self.gamma_up).ln()
    }
}

pub fn oscillator_generator(p: &OscillatorParams) -> Result<GklsGenerator> {
    p.validate()?;
    let n = p.n_trunc;
    let mut jumps = vec![annihilation(n).scale_real(p.gamma_down.sqrt())];
    if p.gamma_up > 0.0 {
        jumps.push(creation(n).scale_real(p.gamma_up.sqrt()));
    }
    GklsGenerator::new(number(n).scale_real(p.omega), jumps)
}

/// Population of the top two Fock levels.
pub fn truncation_leakage(rho: &DensityMatrix) -> f64 {
    let n = rho.dim();
    (n.saturating_sub(2)..n).map(|k| rho.op().get(k, k).re).sum()
}

/// Initial states with a known generating function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OscillatorInitial {
    Coherent(Complex64),
    Thermal(f64),
}

impl OscillatorInitial {
    /// `F_0(z) = Tr(ρ_0 e^{za − z̄a⁺})`.
    pub fn generating_function(&self, z: Complex64) -> Complex64 {
        let z2 = z.norm_sqr();
        match *self {
            Self::Coherent(beta) => (Complex64::from(-0.5 * z2) + z * beta - (z * beta).conj()).exp(),
            Self::Thermal(nbar) => c((-z2 * (nbar + 0.5)).exp()),
        }
    }

    pub fn mean_number(&self) -> f64 {
        match *self {
            Self::Coherent(beta) => beta.norm_sqr(),
            Self::Thermal(nbar) => nbar,
        }
    }

    /// The state on `n` Fock levels, renormalized after truncation.
    pub fn truncated(&self, n: usize) -> Result<DensityMatrix> {
        match *self {
            Self::Coherent(beta) => coherent_state(n, beta),
            Self::Thermal(nbar) => thermal_state(n, nbar),
        }
    }
}

pub fn generating_function_oracle(p: &OscillatorParams, init: &OscillatorInitial, z: Complex64, t: f64) -> Complex64 {
    let kappa = p.kappa();
    let zt = z * (-I * p.omega * t - c(0.5 * kappa * t)).exp();
    let a = z.norm_sqr() * (p.gamma_down + p.gamma_up) / (2.0 * kappa) * (1.0 - (-kappa * t).exp());
    init.generating_function(zt) * (-a).exp()
}

/// `⟨n⟩_t = n̄ + (⟨n⟩_0 − n̄) e^{−κt}` with `n̄ = γ↑/κ`.
pub fn mean_number_oracle(p: &OscillatorParams, init: &OscillatorInitial, t: f64) -> f64 {
    let nbar = p.stationary_mean();
    nbar + (init.mean_number() - nbar) * (-p.kappa() * t).exp()
}

/// Truncated coherent state `|β⟩`.
pub fn coherent_state(n: usize, beta: Complex64) -> Result<DensityMatrix> {
    let mut v = CVec::zeros(n);
    let mut amp = c((-0.5 * beta.norm_sqr()).exp());
    for k in 0..n {
        v[k] = amp;
        amp *= beta / c(((k + 1) as f64).sqrt());
    }
    let norm = v.norm();
    DensityMatrix::pure(&(v / c(norm)))
}

/// Truncated thermal state with mean occupation `nbar`.
pub fn thermal_state(n: usize, nbar: f64) -> Result<DensityMatrix> {
    require_rate("nbar", nbar)?;
    let q = nbar / (1.0 + nbar);
    let weights: Vec<f64> = (0..n).map(|k| q.powi(k as i32)).collect();
    let total: f64 = weights.iter().sum();
    Ok(DensityMatrix::new_unchecked(Operator::from_real_diagonal(
        &weights.iter().map(|w| w / total).collect::<Vec<_>>(),
    )))
}

/// `e^{za − z̄a⁺}` on `n` levels.
pub fn weyl_operator(n: usize, z: Complex64) -> Operator {
    (&annihilation(n).scale(z) - &creation(n).scale(z.conj())).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::evolve_exact;

    #[test]
    fn normalization_and_limits() {
        let p = OscillatorParams::new(1.0, 1.0, 0.3, 10).unwrap();
        let init = OscillatorInitial::Coherent(Complex64::new(0.5, -0.2));
        assert!((generating_function_oracle(&p, &init, c(0.0), 2.0) - c(1.0)).norm() < 1e-15);
        // long times: the thermal generating function with n̄ = γ↑/κ
        let z = Complex64::new(0.3, 0.4);
        let inf = generating_function_oracle(&p, &init, z, 200.0);
        let thermal = OscillatorInitial::Thermal(p.stationary_mean()).generating_function(z);
        assert!((inf - thermal).norm() < 1e-14);
    }

    #[test]
    fn vacuum_is_stationary_without_pumping() {
        let p = OscillatorParams::new(1.0, 0.5, 0.0, 6).unwrap();
        let z = Complex64::new(0.7, 0.1);
        let vac = OscillatorInitial::Thermal(0.0);
        for t in [0.0, 0.4, 3.0] {
            let f = generating_function_oracle(&p, &vac, z, t);
            assert!((f - vac.generating_function(z)).norm() < 1e-15);
        }
    }

    #[test]
    fn single_excitation_decays_at_gamma_down() {
        let p = OscillatorParams::new(2.0, 0.8, 0.0, 5).unwrap();
        let g = oscillator_generator(&p).unwrap().superoperator();
        let rho = evolve_exact(&g, 1.2, &DensityMatrix::basis(5, 1)).unwrap();
        assert!((rho.op().get(1, 1).re - (-0.8f64 * 1.2).exp()).abs() < 1e-12);
    }

    #[test]
    fn truncated_states() {
        let rho = coherent_state(30, Complex64::new(1.0, 0.5)).unwrap();
        assert!((rho.expect(&number(30)) - 1.25).abs() < 1e-10);
        let th = thermal_state(60, 0.4).unwrap();
        assert!((th.expect(&number(60)) - 0.4).abs() < 1e-10);
        let f = weyl_operator(30, Complex64::new(0.2, 0.3)).expectation(&rho);
        let exact = OscillatorInitial::Coherent(Complex64::new(1.0, 0.5)).generating_function(Complex64::new(0.2, 0.3));
        assert!((f - exact).norm() < 1e-10);
    }

    #[test]
    fn parameter_validation() {
        assert!(OscillatorParams::new(1.0, 0.3, 0.3, 10).is_err());
        assert!(OscillatorParams::new(1.0, 0.3, 0.1, 1).is_err());
    }
}
