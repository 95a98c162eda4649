//! Finite-dimensional operator algebra.
//!
//! Operators are dense `d x d` complex matrices. Superoperators act on
//! column-stacked vectorizations: entry `(i, j)` of a `d x d` operator sits at
//! index `i + d*j` of its vector, so `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.
//! The Choi matrix uses the same layout: `C[i + d*k, j + d*l] = ⟨i|Λ(|k⟩⟨l|)|j⟩`.

mod choi;
mod json;
mod superop;

pub use choi::{is_completely_positive, kraus_from_choi, kraus_from_choi_with_cutoff, ChoiMatrix, CpReport, KrausSet, KRAUS_CUTOFF};
pub use json::MatrixJson;
pub use superop::{devectorize, vectorize, Superoperator};

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

/// Relative hermiticity tolerance.
pub const TOL_HERM: f64 = 1e-10;
/// Trace tolerance for density matrices.
pub const TOL_TRACE: f64 = 1e-10;
/// Positivity tolerance, relative to the spectral norm.
pub const TOL_PSD: f64 = 1e-10;

/// Dimension of a finite Hilbert space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HilbertDim(usize);

impl HilbertDim {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("Hilbert space dimension must be >= 1".into()));
        }
        Ok(Self(d))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// Dimension of the operator space, `d²`.
    #[inline]
    pub fn squared(self) -> usize {
        self.0 * self.0
    }
}

/// A square complex matrix acting on a finite Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(CMat);

impl Operator {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidParameter("empty operator".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("operator has non-finite entries".into()));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix the caller already knows to be square and finite.
    pub(crate) fn from_matrix_unchecked(m: CMat) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn from_fn(d: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(CMat::from_fn(d, d, f))
    }

    pub fn from_real(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, found: entries.len() });
        }
        Self::new(CMat::from_row_iterator(d, d, entries.iter().map(|&x| c(x))))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        Self(CMat::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self(CMat::from_diagonal(&DVector::from_iterator(diag.len(), diag.iter().map(|&x| c(x)))))
    }

    pub fn identity(d: usize) -> Self {
        Self(CMat::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(CMat::zeros(d, d))
    }

    /// Matrix unit `|i⟩⟨j|`.
    pub fn unit(d: usize, i: usize, j: usize) -> Self {
        let mut m = CMat::zeros(d, d);
        m[(i, j)] = c(1.0);
        Self(m)
    }

    /// Rank-one operator `|psi⟩⟨phi|`.
    pub fn ket_bra(psi: &CVec, phi: &CVec) -> Self {
        Self(psi * phi.adjoint())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self(&self.0 * z)
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(c(x))
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &Operator) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// `{self, other}`
    pub fn anticommutator(&self, other: &Operator) -> Self {
        Self(&self.0 * &other.0 + &other.0 * &self.0)
    }

    /// Largest entry of `A - A†`, relative to the largest entry of `A` (absolute when `A` is tiny).
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = linalg::max_abs_diff(&self.0, &self.0.adjoint());
        diff / linalg::max_abs(&self.0).max(1.0)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn require_hermitian(&self, what: &str) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > TOL_HERM {
            return Err(Error::NotHermitian { what: what.to_string(), defect });
        }
        Ok(())
    }

    /// Sum of singular values.
    ///
    /// This is the trace-class norm `tr[(σσ*)^{1/2}]`, not the Hilbert-Schmidt norm.
    pub fn trace_norm(&self) -> f64 {
        linalg::singular_values(&self.0).iter().sum()
    }

    pub fn hs_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn operator_norm(&self) -> f64 {
        linalg::spectral_norm(&self.0)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        linalg::max_abs_diff(&self.0, &other.0)
    }

    /// Ascending eigenvalues and eigenvectors of the hermitian part.
    pub fn eigh(&self) -> (Vec<f64>, CMat) {
        linalg::eigh(&self.0)
    }

    /// `Tr(self · rho)`
    pub fn expectation(&self, rho: &DensityMatrix) -> Complex64 {
        (&self.0 * rho.matrix()).trace()
    }

    pub fn exp(&self) -> Self {
        Self(self.0.clone().exp())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

/// Tolerances used when validating density matrices.
#[derive(Clone, Copy, Debug)]
pub struct StateTolerance {
    pub herm: f64,
    pub trace: f64,
    pub psd: f64,
}

impl Default for StateTolerance {
    fn default() -> Self {
        Self { herm: TOL_HERM, trace: TOL_TRACE, psd: TOL_PSD }
    }
}

/// Positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerance(op, StateTolerance::default())
    }

    pub fn with_tolerance(op: Operator, tol: StateTolerance) -> Result<Self> {
        let defect = op.hermiticity_defect();
        if defect > tol.herm {
            return Err(Error::InvalidState(format!("hermiticity defect {defect:.3e}")));
        }
        let tr = op.trace();
        if (tr - c(1.0)).norm() > tol.trace {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let (vals, _) = op.eigh();
        let scale = vals.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        if vals[0] < -tol.psd * scale {
            return Err(Error::InvalidState(format!("negative eigenvalue {:.3e}", vals[0])));
        }
        Ok(Self(op))
    }

    /// Skips validation. Used for propagated states whose validity is a
    /// post-condition checked separately.
    pub fn new_unchecked(op: Operator) -> Self {
        Self(op)
    }

    /// `|psi⟩⟨psi| / ⟨psi|psi⟩`
    pub fn pure(psi: &CVec) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidState("state vector has zero or non-finite norm".into()));
        }
        let v = psi / c(n);
        Ok(Self(Operator::ket_bra(&v, &v)))
    }

    /// Basis projector `|k⟩⟨k|`.
    pub fn basis(d: usize, k: usize) -> Self {
        Self(Operator::unit(d, k, k))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(Operator::identity(d).scale_real(1.0 / d as f64))
    }

    /// Gibbs state `exp(-βH)/Z`.
    pub fn gibbs(h: &Operator, beta: f64) -> Result<Self> {
        h.require_hermitian("Hamiltonian")?;
        let (vals, _) = h.eigh();
        let e_min = vals[0];
        // shift by the ground energy so large β does not overflow
        let unnorm = linalg::hermitian_fn(h.matrix(), |e| (-beta * (e - e_min)).exp());
        let z = unnorm.trace().re;
        Ok(Self(Operator(unnorm / c(z))))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn op(&self) -> &Operator {
        &self.0
    }

    #[inline]
    pub fn matrix(&self) -> &CMat {
        self.0.matrix()
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigh().0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        (&self.0 - &other.0).trace_norm()
    }

    /// Expectation value of a hermitian observable.
    pub fn expect(&self, obs: &Operator) -> f64 {
        obs.expectation(self).re
    }
}

/// Standard matrices in the level convention `|1⟩ = e_0`, `|2⟩ = e_1`.
pub mod standard {
    use super::*;

    /// `σ⁺ = |2⟩⟨1|`
    pub fn sigma_plus() -> Operator {
        Operator::unit(2, 1, 0)
    }

    /// `σ⁻ = |1⟩⟨2|`
    pub fn sigma_minus() -> Operator {
        Operator::unit(2, 0, 1)
    }

    /// `σ₃ = P₂ − P₁`
    pub fn sigma_3() -> Operator {
        Operator::from_real_diagonal(&[-1.0, 1.0])
    }

    pub fn sigma_1() -> Operator {
        Operator::from_real(2, &[0.0, 1.0, 1.0, 0.0]).expect("static")
    }

    pub fn sigma_2() -> Operator {
        Operator::from_fn(2, |i, j| match (i, j) {
            (0, 1) => Complex64::new(0.0, -1.0),
            (1, 0) => Complex64::new(0.0, 1.0),
            _ => c(0.0),
        })
    }

    /// Truncated annihilation operator on `n` Fock levels.
    pub fn annihilation(n: usize) -> Operator {
        Operator::from_fn(n, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { c(0.0) })
    }

    pub fn creation(n: usize) -> Operator {
        annihilation(n).adjoint()
    }

    pub fn number(n: usize) -> Operator {
        Operator::from_real_diagonal(&(0..n).map(|k| k as f64).collect::<Vec<_>>())
    }

    /// `|+⟩ = (|1⟩ + |2⟩)/√2` as a density matrix.
    pub fn plus_state() -> DensityMatrix {
        DensityMatrix::pure(&CVec::from_column_slice(&[c(1.0), c(1.0)])).expect("static")
    }
}

#[cfg(test)]
mod tests {
    use super::standard::*;
    use super::*;

    #[test]
    fn trace_norm_examples() {
        assert!((sigma_3().trace_norm() - 2.0).abs() < 1e-14);
        let rho = DensityMatrix::maximally_mixed(3);
        assert!((rho.op().trace_norm() - 1.0).abs() < 1e-14);
        let d = plus_state().trace_distance(&DensityMatrix::basis(2, 0));
        assert!((0.0..=2.0).contains(&d));
        assert_eq!(Operator::zeros(3).trace_norm(), 0.0);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(Operator::identity(2)).is_err());
        let neg = Operator::from_real_diagonal(&[1.5, -0.5]);
        assert!(matches!(DensityMatrix::new(neg), Err(Error::InvalidState(_))));
        let nonherm = Operator::from_real(2, &[0.5, 0.3, 0.0, 0.5]).unwrap();
        assert!(DensityMatrix::new(nonherm).is_err());
        assert!(DensityMatrix::new(plus_state().into_operator()).is_ok());
    }

    #[test]
    fn gibbs_qubit_populations() {
        // ω/T = ln 2 gives populations 2/3 (ground) and 1/3 (excited)
        let h = sigma_3().scale_real(0.5);
        let rho = DensityMatrix::gibbs(&h, 2f64.ln()).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 2.0 / 3.0).abs() < 1e-14);
        assert!((rho.matrix()[(1, 1)].re - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn ladder_conventions() {
        let sp = sigma_plus();
        let sm = sigma_minus();
        assert_eq!(sp.adjoint(), sm);
        assert!((&sp.commutator(&sm) - &sigma_3()).max_abs_diff(&Operator::zeros(2)) < 1e-15);
        let a = annihilation(5);
        let comm = a.commutator(&creation(5));
        // [a, a⁺] = 1 except at the truncation edge
        for k in 0..4 {
            assert!((comm.get(k, k) - c(1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(HilbertDim::new(0).is_err());
        assert_eq!(HilbertDim::new(3).unwrap().squared(), 9);
    }
}
