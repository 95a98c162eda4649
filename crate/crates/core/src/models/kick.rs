//! Collisional decoherence of a particle on a ring of `L` sites.
//!
//! Each collision shifts the momentum by `k = 2πm/L` through the unitary
//! kick `ρ ↦ e^{−ikX} ρ e^{ikX}`, occurring at rate `n(k)`. With no
//! Hamiltonian the position-basis solution is
//! `ρ_t(x, x') = ρ_0(x, x') exp(−t Σ_k n(k) (1 − e^{−ik(x−x')}))`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::require_rate;
use crate::error::{Error, Result};
use crate::gkls::GklsGenerator;
use crate::linalg::{c, I};
use crate::operators::{DensityMatrix, Operator};

#[derive(Clone, Debug, PartialEq)]
pub struct KickModelParams {
    pub lattice_size: usize,
    /// `m ↦ n(2πm/L)`.
    pub kick_rates: BTreeMap<i64, f64>,
    /// Mass for a nearest-neighbour kinetic term `(2 − T − T†)/2M`; none means no kinetic term.
    pub mass: Option<f64>,
    /// Diagonal potential `V(x)`.
    pub potential: Option<Vec<f64>>,
}

impl KickModelParams {
    pub fn new(lattice_size: usize, kick_rates: BTreeMap<i64, f64>) -> Result<Self> {
        let p = Self { lattice_size, kick_rates, mass: None, potential: None };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lattice_size == 0 {
            return Err(Error::InvalidParameter("lattice_size must be >= 1".into()));
        }
        for (m, r) in &self.kick_rates {
            require_rate(&format!("kick rate for m = {m}"), *r)?;
        }
        if let Some(mass) = self.mass {
            if !(mass > 0.0 && mass.is_finite()) {
                return Err(Error::InvalidParameter(format!("mass must be > 0, got {mass}")));
            }
        }
        if let Some(v) = &self.potential {
            if v.len() != self.lattice_size || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("potential must have one finite value per site".into()));
            }
        }
        Ok(())
    }

    pub fn momentum(&self, m: i64) -> f64 {
        2.0 * PI * m as f64 / self.lattice_size as f64
    }

    pub fn total_rate(&self) -> f64 {
        self.kick_rates.values().sum()
    }

    pub fn hamiltonian(&self) -> Operator {
        let l = self.lattice_size;
        let mut h = Operator::zeros(l);
        if let Some(mass) = self.mass {
            let kin = Operator::from_fn(l, |i, j| {
                let hop = (i + 1) % l == j || (j + 1) % l == i;
                match () {
                    _ if i == j => c(if l == 1 { 0.0 } else { 2.0 }),
                    _ if hop => c(if l == 2 { -2.0 } else { -1.0 }),
                    _ => c(0.0),
                }
            });
            h = &h + &kin.scale_real(0.5 / mass);
        }
        if let Some(v) = &self.potential {
            h = &h + &Operator::from_real_diagonal(v);
        }
        h
    }
}

/// Generator with jumps `√n(k) e^{−ikX}`, `X = diag(0, 1, …, L−1)`.
pub fn kick_decoherence_generator(p: &KickModelParams) -> Result<GklsGenerator> {
    p.validate()?;
    let l = p.lattice_size;
    let jumps = p
        .kick_rates
        .iter()
        .filter(|(_, r)| **r > 0.0)
        .map(|(&m, &r)| {
            let k = p.momentum(m);
            let diag: Vec<Complex64> = (0..l).map(|x| (-I * k * x as f64).exp() * r.sqrt()).collect();
            Operator::from_diagonal(&diag)
        })
        .collect();
    GklsGenerator::new(p.hamiltonian(), jumps)
}

/// Position-basis solution for the kick model without Hamiltonian.
pub fn kick_closed_form(p: &KickModelParams, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    p.validate()?;
    if rho0.dim() != p.lattice_size {
        return Err(Error::DimensionMismatch { expected: p.lattice_size, found: rho0.dim() });
    }
    let exponent = |dx: f64| -> Complex64 {
        p.kick_rates
            .iter()
            .map(|(&m, &r)| (c(1.0) - (-I * p.momentum(m) * dx).exp()) * r)
            .sum::<Complex64>()
    };
    let m = Operator::from_fn(p.lattice_size, |x, y| {
        rho0.op().get(x, y) * (-exponent(x as f64 - y as f64) * t).exp()
    });
    Ok(DensityMatrix::new_unchecked(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::evolve_exact;
    use crate::random::{random_density_matrix, seeded};

    fn params() -> KickModelParams {
        KickModelParams::new(6, BTreeMap::from([(1, 0.4), (-2, 0.1), (3, 0.25)])).unwrap()
    }

    #[test]
    fn closed_form_matches_exponential() {
        let p = params();
        let g = kick_decoherence_generator(&p).unwrap();
        let rho0 = random_density_matrix(&mut seeded(3), 6);
        for t in [0.1, 1.0, 5.0] {
            let a = evolve_exact(&g.superoperator(), t, &rho0).unwrap();
            let b = kick_closed_form(&p, &rho0, t).unwrap();
            assert!(a.op().max_abs_diff(b.op()) < 1e-12);
        }
    }

    #[test]
    fn unitary_kicks_are_bistochastic() {
        assert!(kick_decoherence_generator(&params()).unwrap().is_bistochastic(1e-12));
    }

    #[test]
    fn kinetic_term_is_hermitian_and_gapless_at_zero_momentum() {
        let mut p = params();
        p.mass = Some(2.0);
        p.potential = Some(vec![0.0; 6]);
        let h = p.hamiltonian();
        assert!(h.is_hermitian(1e-15));
        let (vals, _) = h.eigh();
        assert!(vals[0].abs() < 1e-14);
    }
}
