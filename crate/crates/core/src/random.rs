//! Random test instances: operators, states, GKLS generators and CPTP channels.
//!
//! All draws go through a caller-supplied RNG so that every instance is
//! reproducible from a seed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::gkls::GklsGenerator;
use crate::linalg::{c, CMat, CVec};
use crate::operators::{DensityMatrix, KrausSet, Operator};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Ginibre matrix with standard normal entries.
pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_operator(rng: &mut impl Rng, d: usize) -> Operator {
    Operator::from_matrix_unchecked(random_matrix(rng, d, d))
}

pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> Operator {
    let g = random_matrix(rng, d, d);
    Operator::from_matrix_unchecked((&g + g.adjoint()) * c(0.5))
}

pub fn random_state_vector(rng: &mut impl Rng, d: usize) -> CVec {
    let v = CVec::from_fn(d, |_, _| gaussian(rng));
    let n = v.norm();
    v / c(n)
}

/// Full-rank density matrix `G G† / Tr(G G†)` from a Ginibre matrix.
pub fn random_density_matrix(rng: &mut impl Rng, d: usize) -> DensityMatrix {
    let g = random_matrix(rng, d, d);
    let m = &g * g.adjoint();
    let tr = m.trace();
    let rho = Operator::from_matrix_unchecked(m / tr);
    // make it exactly hermitian
    let sym = (&rho + &rho.adjoint()).scale_real(0.5);
    DensityMatrix::new_unchecked(sym)
}

/// Random GKLS generator with `n_jumps` jump operators of size about `rate`.
pub fn random_gkls(rng: &mut impl Rng, d: usize, n_jumps: usize, rate: f64) -> GklsGenerator {
    let h = random_hermitian(rng, d);
    let scale = (rate / d as f64).sqrt();
    let jumps = (0..n_jumps).map(|_| random_operator(rng, d).scale_real(scale)).collect();
    GklsGenerator::new(h, jumps).expect("random generator is valid")
}

/// Random CPTP channel with `n_kraus` Kraus operators, from a random isometry.
pub fn random_kraus_channel(rng: &mut impl Rng, d: usize, n_kraus: usize) -> KrausSet {
    let g = random_matrix(rng, d * n_kraus, d);
    let q = g.qr().q();
    let ops = (0..n_kraus)
        .map(|k| Operator::from_matrix_unchecked(DMatrix::from(q.rows(k * d, d))))
        .collect();
    KrausSet::new(ops).expect("nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kraus_channel_is_trace_preserving() {
        let mut r = seeded(1);
        for d in 1..6 {
            let k = random_kraus_channel(&mut r, d, 3);
            assert!(k.trace_preservation_defect() < 1e-12);
        }
    }

    #[test]
    fn density_matrix_is_valid() {
        let mut r = seeded(2);
        let rho = random_density_matrix(&mut r, 5);
        assert!(DensityMatrix::new(rho.into_operator()).is_ok());
    }
}
