//! Weak-coupling (Davies) generators.
//!
//! Couplings `S_k` are split into Bohr-frequency components
//! `e^{itH} S_k e^{−itH} = Σ_ω S_k(ω) e^{−iωt}`, and the dissipator
//!
//! ```text
//! λ² Σ_{ω,k,l} R̂_kl(ω) (S_k(ω) ρ S_l(ω)† − ½{S_l(ω)† S_k(ω), ρ})
//! ```
//!
//! is put in diagonal form by diagonalizing each `R̂(ω)`. No Lamb shift is
//! computed; a caller-supplied Hamiltonian correction can be added.

mod spectral;

pub use spectral::{spectral_from_correlation, CorrelationGrid, PsdWarning, SpectralFunction, KMS_TOL, SPECTRAL_PSD_TOL};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gkls::GklsGenerator;
use crate::linalg::{self, c, CMat};
use crate::operators::{DensityMatrix, Operator, Superoperator};

/// Default Bohr-frequency merging tolerance, relative to `‖H‖`.
pub const FREQ_TOL_REL: f64 = 1e-9;

/// One Bohr frequency and the matching component of each coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct BohrComponent {
    pub omega: f64,
    /// `S_k(ω)` for every coupling `k`, zero where the coupling has no such component.
    pub operators: Vec<Operator>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BohrDecomposition {
    /// Distinct eigenvalues of `H`, ascending.
    pub energies: Vec<f64>,
    /// Orthogonal projectors onto the eigenspaces, aligned with `energies`.
    pub projectors: Vec<Operator>,
    /// Components sorted by frequency; frequencies where every component vanishes are dropped.
    pub components: Vec<BohrComponent>,
    pub freq_tol: f64,
}

impl BohrDecomposition {
    pub fn frequencies(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.omega).collect()
    }

    pub fn couplings(&self) -> usize {
        self.components.first().map_or(0, |c| c.operators.len())
    }

    pub fn component(&self, k: usize, omega: f64) -> Option<&Operator> {
        self.components
            .iter()
            .find(|c| (c.omega - omega).abs() <= self.freq_tol.max(1e-15 * omega.abs()))
            .map(|c| &c.operators[k])
    }

    /// `Σ_ω S_k(ω) e^{−iωt}`.
    pub fn reconstruct(&self, k: usize, t: f64) -> Operator {
        let d = self.projectors[0].dim();
        let mut m = CMat::zeros(d, d);
        for comp in &self.components {
            m += comp.operators[k].matrix() * num_complex::Complex64::from_polar(1.0, -comp.omega * t);
        }
        Operator::from_matrix_unchecked(m)
    }
}

/// Group sorted values whose consecutive gaps are at most `tol`.
fn cluster(sorted: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if x - sorted[*g.last().expect("nonempty")] <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Bohr-frequency decomposition with the default tolerance `1e−9·‖H‖`.
pub fn bohr_decompose(h: &Operator, couplings: &[Operator]) -> Result<BohrDecomposition> {
    bohr_decompose_with_tol(h, couplings, FREQ_TOL_REL * h.operator_norm())
}

pub fn bohr_decompose_with_tol(h: &Operator, couplings: &[Operator], freq_tol: f64) -> Result<BohrDecomposition> {
    h.require_hermitian("Hamiltonian")?;
    let d = h.dim();
    if let Some(s) = couplings.iter().find(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: s.dim() });
    }
    let (vals, vecs) = h.eigh();
    let mut energies = Vec::new();
    let mut projectors = Vec::new();
    for group in cluster(&vals, freq_tol) {
        energies.push(group.iter().map(|&i| vals[i]).sum::<f64>() / group.len() as f64);
        let mut p = CMat::zeros(d, d);
        for &i in &group {
            let v = vecs.column(i);
            p += &v * v.adjoint();
        }
        projectors.push(Operator::from_matrix_unchecked(p));
    }

    // all level pairs (a, b) with ω = ε_b − ε_a, grouped by frequency
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for a in 0..energies.len() {
        for b in 0..energies.len() {
            pairs.push((energies[b] - energies[a], a, b));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let freqs: Vec<f64> = pairs.iter().map(|p| p.0).collect();

    let mut components = Vec::new();
    for group in cluster(&freqs, freq_tol) {
        let omega = if group.iter().any(|&i| pairs[i].1 == pairs[i].2) {
            0.0
        } else {
            group.iter().map(|&i| freqs[i]).sum::<f64>() / group.len() as f64
        };
        let operators: Vec<Operator> = couplings
            .iter()
            .map(|s| {
                let mut m = CMat::zeros(d, d);
                for &i in &group {
                    let (_, a, b) = pairs[i];
                    m += projectors[a].matrix() * s.matrix() * projectors[b].matrix();
                }
                Operator::from_matrix_unchecked(m)
            })
            .collect();
        let nonzero = operators
            .iter()
            .zip(couplings)
            .any(|(op, s)| op.hs_norm() > 1e-13 * s.hs_norm().max(f64::MIN_POSITIVE));
        if nonzero {
            components.push(BohrComponent { omega, operators });
        }
    }
    Ok(BohrDecomposition { energies, projectors, components, freq_tol })
}

/// One dissipative channel of a Davies generator.
#[derive(Clone, Debug, PartialEq)]
pub struct DaviesJump {
    pub omega: f64,
    /// Eigenvalue of `λ² R̂(ω)` carried by this jump.
    pub rate: f64,
    pub operator: Operator,
}

impl DaviesJump {
    /// Channels at `ω = 0` cause pure decoherence: they leave energy populations alone.
    pub fn is_pure_decoherence(&self) -> bool {
        self.omega == 0.0
    }
}

#[derive(Clone, Debug)]
pub struct DaviesModel {
    pub generator: GklsGenerator,
    pub decomposition: BohrDecomposition,
    pub jumps: Vec<DaviesJump>,
    pub beta: Option<f64>,
}

/// Options for [`build_davies_with`].
#[derive(Clone, Debug, Default)]
pub struct DaviesOptions {
    /// Added to `H` in the generator; never computed here.
    pub hamiltonian_correction: Option<Operator>,
    /// Overrides the Bohr-frequency merging tolerance.
    pub freq_tol: Option<f64>,
}

/// Davies generator for `H`, couplings `S_k`, spectral matrix `R̂` and coupling constant `λ`.
pub fn build_davies(h: &Operator, couplings: &[Operator], r: &SpectralFunction, lambda: f64) -> Result<GklsGenerator> {
    Ok(build_davies_with(h, couplings, r, lambda, &DaviesOptions::default())?.generator)
}

pub fn build_davies_with(
    h: &Operator,
    couplings: &[Operator],
    r: &SpectralFunction,
    lambda: f64,
    options: &DaviesOptions,
) -> Result<DaviesModel> {
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter("coupling constant must be finite".into()));
    }
    if couplings.len() != r.channels() {
        return Err(Error::DimensionMismatch { expected: r.channels(), found: couplings.len() });
    }
    let decomposition = match options.freq_tol {
        Some(tol) => bohr_decompose_with_tol(h, couplings, tol)?,
        None => bohr_decompose(h, couplings)?,
    };
    let lam2 = lambda * lambda;
    let mut jumps = Vec::new();
    for comp in &decomposition.components {
        let rhat = r.evaluate(comp.omega)?;
        let (vals, vecs) = linalg::eigh(&rhat);
        for (m, &val) in vals.iter().enumerate() {
            let rate = lam2 * val.max(0.0);
            if rate == 0.0 {
                continue;
            }
            let d = h.dim();
            let mut op = CMat::zeros(d, d);
            for (k, s) in comp.operators.iter().enumerate() {
                op += s.matrix() * vecs[(k, m)];
            }
            if op.iter().all(|z| z.norm() == 0.0) {
                continue;
            }
            jumps.push(DaviesJump {
                omega: comp.omega,
                rate,
                operator: Operator::from_matrix_unchecked(op * c(rate.sqrt())),
            });
        }
    }
    let hamiltonian = match &options.hamiltonian_correction {
        Some(corr) => {
            corr.require_hermitian("Hamiltonian correction")?;
            h + corr
        }
        None => h.clone(),
    };
    let generator = GklsGenerator::new(hamiltonian, jumps.iter().map(|j| j.operator.clone()).collect())?;
    Ok(DaviesModel { generator, decomposition, jumps, beta: r.beta() })
}

/// Whether only multiples of the identity commute with every `S_k(ω)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ErgodicityReport {
    pub ergodic: bool,
    pub commutant_dim: usize,
}

pub fn ergodicity_check(decomposition: &BohrDecomposition) -> ErgodicityReport {
    let d = decomposition.projectors.first().map_or(1, Operator::dim);
    let ops: Vec<&Operator> = decomposition.components.iter().flat_map(|c| c.operators.iter()).collect();
    let commutant_dim = commutant_dimension(d, &ops);
    ErgodicityReport { ergodic: commutant_dim == 1, commutant_dim }
}

/// Dimension of `{X : [A, X] = 0 for all A in ops}`.
pub fn commutant_dimension(d: usize, ops: &[&Operator]) -> usize {
    if ops.is_empty() {
        return d * d;
    }
    let n = d * d;
    let one = CMat::identity(d, d);
    let mut stacked = CMat::zeros(n * ops.len(), n);
    for (i, a) in ops.iter().enumerate() {
        // vec(AX − XA) = (1⊗A − Aᵀ⊗1) vec X
        let block = one.kronecker(a.matrix()) - a.matrix().transpose().kronecker(&one);
        stacked.view_mut((i * n, 0), (n, n)).copy_from(&block);
    }
    linalg::null_space(&stacked, 1e-10).len()
}

/// Population/coherence structure of a generator in the eigenbasis of `H`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSplitReport {
    /// Largest matrix element between population and coherence sectors.
    pub max_coupling: f64,
    pub decoupled: bool,
    /// Eigenvalues of `H`, ascending.
    pub energies: Vec<f64>,
    /// `rates[(a, b)]` is the transition rate `b → a` for `a ≠ b`; columns sum to zero.
    pub pauli_rates: DMatrix<f64>,
    /// Stationary distribution of the Pauli equation, if unique.
    pub stationary_populations: Option<Vec<f64>>,
    /// Largest relative violation of `rates[(a,b)] e^{−βε_b} = rates[(b,a)] e^{−βε_a}`, when `beta` is given.
    pub detailed_balance_defect: Option<f64>,
}

/// Check that populations and coherences decouple in the energy basis and
/// extract the Pauli rate matrix. Requires nondegenerate `H`.
pub fn decoherence_block_split(g: &GklsGenerator, h: &Operator, beta: Option<f64>) -> Result<BlockSplitReport> {
    h.require_hermitian("Hamiltonian")?;
    if h.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: h.dim() });
    }
    let d = h.dim();
    let (energies, u) = h.eigh();
    let gap_tol = FREQ_TOL_REL * h.operator_norm().max(f64::MIN_POSITIVE);
    if energies.windows(2).any(|w| w[1] - w[0] <= gap_tol) {
        return Err(Error::Precondition("block split needs a nondegenerate Hamiltonian".into()));
    }
    // vec(U†ρU) = (Uᵀ⊗U†) vec ρ
    let to_eig = u.transpose().kronecker(&u.adjoint());
    let from_eig = u.conjugate().kronecker(&u);
    let l = to_eig * g.superoperator().matrix() * from_eig;

    let is_pop = |idx: usize| idx % d == idx / d;
    let n = d * d;
    let mut max_coupling = 0.0f64;
    for r in 0..n {
        for s in 0..n {
            if is_pop(r) != is_pop(s) {
                max_coupling = max_coupling.max(l[(r, s)].norm());
            }
        }
    }
    let scale = linalg::max_abs(&l).max(1.0);
    let decoupled = max_coupling <= 1e-12 * scale;
    let pauli_rates = DMatrix::from_fn(d, d, |a, b| l[(a + d * a, b + d * b)].re);

    let kernel = linalg::null_space(&pauli_rates.map(c), 1e-9);
    let stationary_populations = (kernel.len() == 1).then(|| {
        let v: Vec<f64> = kernel[0].iter().map(|z| z.re).collect();
        let total: f64 = v.iter().sum();
        v.iter().map(|x| x / total).collect()
    });

    let detailed_balance_defect = beta.map(|beta| {
        let e0 = energies[0];
        let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..a {
                let lhs = pauli_rates[(a, b)] * w[b];
                let rhs = pauli_rates[(b, a)] * w[a];
                let s = lhs.abs().max(rhs.abs());
                if s > 0.0 {
                    worst = worst.max((lhs - rhs).abs() / s);
                }
            }
        }
        worst
    });
    Ok(BlockSplitReport { max_coupling, decoupled, energies, pauli_rates, stationary_populations, detailed_balance_defect })
}

/// `‖[D, −i[H, ·]]‖` where `D` is the dissipative part of `g`.
pub fn dissipator_commutation_defect(g: &GklsGenerator) -> f64 {
    let full = g.superoperator();
    let ham = GklsGenerator::closed(g.hamiltonian().clone()).expect("hermitian").superoperator();
    let diss = &full - &ham;
    let comm = &diss.compose(&ham) - &ham.compose(&diss);
    comm.norm()
}

/// Trace norm of `L(ρ_eq)` for the Gibbs state at inverse temperature `beta`.
pub fn gibbs_residual(g: &GklsGenerator, beta: f64) -> Result<f64> {
    let gibbs = DensityMatrix::gibbs(g.hamiltonian(), beta)?;
    Ok(g.apply(gibbs.op()).trace_norm())
}

/// Superoperator of a generator written in the eigenbasis of `h`.
pub fn in_energy_basis(l: &Superoperator, h: &Operator) -> Superoperator {
    let (_, u) = h.eigh();
    let to_eig = u.transpose().kronecker(&u.adjoint());
    let from_eig = u.conjugate().kronecker(&u);
    Superoperator::from_parts(l.hilbert_dim(), to_eig * l.matrix() * from_eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::standard::*;

    fn qubit_h(eps: f64) -> Operator {
        sigma_3().scale_real(eps / 2.0)
    }

    #[test]
    fn qubit_sigma1_components() {
        let eps = 1.5;
        let dec = bohr_decompose(&qubit_h(eps), &[sigma_1()]).unwrap();
        let f = dec.frequencies();
        assert_eq!(f.len(), 2);
        assert!((f[0] + eps).abs() < 1e-14 && (f[1] - eps).abs() < 1e-14);
        assert!(dec.component(0, eps).unwrap().max_abs_diff(&sigma_minus()) < 1e-14);
        assert!(dec.component(0, -eps).unwrap().max_abs_diff(&sigma_plus()) < 1e-14);
        assert!(dec.component(0, 0.0).is_none());
    }

    #[test]
    fn three_level_frequencies() {
        let h = Operator::from_real_diagonal(&[0.0, 1.0, 3.0]);
        let s = Operator::from_fn(3, |_, _| c(1.0));
        let dec = bohr_decompose(&h, &[s.clone()]).unwrap();
        let f = dec.frequencies();
        let expected = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        assert_eq!(f.len(), expected.len());
        for (a, b) in f.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        for t in [0.0, 0.37, 2.1] {
            let u = h.scale(crate::linalg::I * t).exp();
            let direct = &(&u * &s) * &u.adjoint();
            assert!(dec.reconstruct(0, t).max_abs_diff(&direct) < 1e-10);
        }
    }

    #[test]
    fn degenerate_hamiltonian_single_frequency() {
        let s = sigma_1().scale_real(0.4);
        let dec = bohr_decompose(&Operator::zeros(2), &[s.clone()]).unwrap();
        assert_eq!(dec.frequencies(), vec![0.0]);
        assert!(dec.component(0, 0.0).unwrap().max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn zero_spectrum_gives_closed_system() {
        let g = build_davies(&qubit_h(1.0), &[sigma_1()], &SpectralFunction::flat(0.0).unwrap(), 0.3).unwrap();
        assert!(g.jumps().is_empty());
    }

    #[test]
    fn ergodicity_cases() {
        let dec = bohr_decompose(&qubit_h(1.0), &[sigma_1()]).unwrap();
        assert_eq!(ergodicity_check(&dec), ErgodicityReport { ergodic: true, commutant_dim: 1 });
        let dec = bohr_decompose(&qubit_h(1.0), &[]).unwrap();
        assert_eq!(ergodicity_check(&dec).commutant_dim, 4);
        // two decoupled qubits' worth of levels: {0,1} and {2,3} never mix
        let h = Operator::from_real_diagonal(&[0.0, 1.0, 2.5, 4.0]);
        let s = Operator::from_real(4, &[
            0., 1., 0., 0., //
            1., 0., 0., 0., //
            0., 0., 0., 1., //
            0., 0., 1., 0.,
        ])
        .unwrap();
        let rep = ergodicity_check(&bohr_decompose(&h, &[s]).unwrap());
        assert!(!rep.ergodic && rep.commutant_dim >= 2);
    }

    #[test]
    fn block_split_requires_nondegenerate_h() {
        let g = GklsGenerator::new(Operator::zeros(2), vec![sigma_minus()]).unwrap();
        assert!(decoherence_block_split(&g, &Operator::zeros(2), None).is_err());
    }

    #[test]
    fn dimension_mismatch_with_spectral_channels() {
        let r = SpectralFunction::flat(1.0).unwrap();
        assert!(build_davies(&qubit_h(1.0), &[sigma_1(), sigma_3()], &r, 1.0).is_err());
    }

    #[test]
    fn pure_decoherence_tag() {
        let r = SpectralFunction::flat(1.0).unwrap();
        let m = build_davies_with(&qubit_h(1.0), &[sigma_3()], &r, 1.0, &DaviesOptions::default()).unwrap();
        assert_eq!(m.jumps.len(), 1);
        assert!(m.jumps[0].is_pure_decoherence());
    }
}
