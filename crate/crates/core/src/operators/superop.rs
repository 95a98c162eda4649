use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::{HilbertDim, Operator};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

/// Column-stacks an operator into a vector of length `d²`.
pub fn vectorize(a: &Operator) -> CVec {
    // nalgebra stores column-major, which is exactly column stacking
    CVec::from_column_slice(a.matrix().as_slice())
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &CVec) -> Result<Operator> {
    let n = v.len();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || d == 0 {
        return Err(Error::InvalidParameter(format!("vector length {n} is not a nonzero square")));
    }
    Ok(Operator::from_matrix_unchecked(CMat::from_column_slice(d, d, v.as_slice())))
}

/// Linear map on operators, stored as a `d² x d²` matrix on column-stacked vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: HilbertDim,
    mat: CMat,
}

impl Superoperator {
    pub fn new(dim: HilbertDim, mat: CMat) -> Result<Self> {
        let n = dim.squared();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: mat.nrows().max(mat.ncols()) });
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("superoperator has non-finite entries".into()));
        }
        Ok(Self { dim, mat })
    }

    /// Builds from a `d² x d²` matrix, inferring `d`.
    pub fn from_matrix(mat: CMat) -> Result<Self> {
        let n = mat.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n {
            return Err(Error::InvalidParameter(format!("{n} is not a square dimension")));
        }
        Self::new(HilbertDim::new(d)?, mat)
    }

    pub(crate) fn from_parts(dim: HilbertDim, mat: CMat) -> Self {
        Self { dim, mat }
    }

    pub fn identity(d: usize) -> Self {
        Self { dim: HilbertDim(d), mat: CMat::identity(d * d, d * d) }
    }

    pub fn zeros(d: usize) -> Self {
        Self { dim: HilbertDim(d), mat: CMat::zeros(d * d, d * d) }
    }

    /// The map `ρ ↦ A ρ B`, i.e. `Bᵀ ⊗ A`.
    pub fn from_left_right(a: &Operator, b: &Operator) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
        }
        let mat = b.matrix().transpose().kronecker(a.matrix());
        Ok(Self { dim: HilbertDim(a.dim()), mat })
    }

    /// The transposition map `ρ ↦ ρᵀ`: positive but not completely positive.
    pub fn transposition(d: usize) -> Self {
        let mut mat = CMat::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                mat[(j + d * i, i + d * j)] = c(1.0);
            }
        }
        Self { dim: HilbertDim(d), mat }
    }

    /// The completely depolarizing channel `ρ ↦ Tr(ρ) 1/d`.
    pub fn depolarizing(d: usize) -> Self {
        let one = super::vectorize(&Operator::identity(d));
        let mat = &one * one.adjoint() * c(1.0 / d as f64);
        Self { dim: HilbertDim(d), mat }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim.get()
    }

    #[inline]
    pub fn hilbert_dim(&self) -> HilbertDim {
        self.dim
    }

    #[inline]
    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn apply(&self, rho: &Operator) -> Operator {
        debug_assert_eq!(rho.dim(), self.dim());
        let v = &self.mat * super::vectorize(rho);
        Operator::from_matrix_unchecked(CMat::from_column_slice(self.dim(), self.dim(), v.as_slice()))
    }

    pub fn try_apply(&self, rho: &Operator) -> Result<Operator> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rho.dim() });
        }
        Ok(self.apply(rho))
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator { dim: self.dim, mat: &self.mat * &other.mat }
    }

    pub fn scale(&self, z: Complex64) -> Superoperator {
        Superoperator { dim: self.dim, mat: &self.mat * z }
    }

    /// Hilbert-Schmidt adjoint: `Tr(A† S(B)) = Tr(S*(A)† B)`.
    pub fn adjoint(&self) -> Superoperator {
        Superoperator { dim: self.dim, mat: self.mat.adjoint() }
    }

    /// `exp(t S)` by scaling and squaring with a Padé approximant.
    pub fn exp(&self, t: f64) -> Superoperator {
        Superoperator { dim: self.dim, mat: (&self.mat * c(t)).exp() }
    }

    /// Operator 2-norm of the matrix representation.
    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.mat)
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        linalg::max_abs_diff(&self.mat, &other.mat)
    }

    /// `max |Tr Λ(X) − Tr X|` over matrix units, i.e. the deviation of `Λ*(1)` from `1`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let one = super::vectorize(&Operator::identity(self.dim()));
        let row = one.adjoint() * &self.mat;
        row.iter().zip(one.iter()).map(|(a, b)| (a - b.conj()).norm()).fold(0.0, f64::max)
    }

    /// `max |Λ(1) − 1|` entrywise.
    pub fn unitality_defect(&self) -> f64 {
        let one = Operator::identity(self.dim());
        self.apply(&one).max_abs_diff(&one)
    }
}

impl Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        Superoperator { dim: self.dim, mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        Superoperator { dim: self.dim, mat: &self.mat - &rhs.mat }
    }
}

impl Mul for &Superoperator {
    type Output = Superoperator;
    fn mul(self, rhs: &Superoperator) -> Superoperator {
        self.compose(rhs)
    }
}
