use super::{HilbertDim, Operator, Superoperator};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

/// Default relative cutoff below which Choi eigenvalues produce no Kraus operator.
pub const KRAUS_CUTOFF: f64 = 1e-12;

/// Choi matrix `C[i + d*k, j + d*l] = ⟨i|Λ(|k⟩⟨l|)|j⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    dim: HilbertDim,
    mat: CMat,
}

/// Index reshuffle between the superoperator and Choi layouts. It is an involution.
fn realign(d: usize, m: &CMat) -> CMat {
    CMat::from_fn(d * d, d * d, |r, s| {
        let (i, k) = (r % d, r / d);
        let (j, l) = (s % d, s / d);
        m[(i + d * j, k + d * l)]
    })
}

impl ChoiMatrix {
    pub fn of(s: &Superoperator) -> Self {
        Self { dim: s.hilbert_dim(), mat: realign(s.dim(), s.matrix()) }
    }

    pub fn new(dim: HilbertDim, mat: CMat) -> Result<Self> {
        let n = dim.squared();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: mat.nrows() });
        }
        Ok(Self { dim, mat })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim.get()
    }

    #[inline]
    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn to_superoperator(&self) -> Superoperator {
        Superoperator::from_parts(self.dim, realign(self.dim(), &self.mat))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.mat)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::max_abs_diff(&self.mat, &self.mat.adjoint()) / linalg::max_abs(&self.mat).max(1.0)
    }
}

/// Outcome of a complete-positivity test.
#[derive(Clone, Debug, PartialEq)]
pub struct CpReport {
    pub completely_positive: bool,
    pub min_eigenvalue: f64,
    /// Spectral norm of the Choi matrix.
    pub choi_norm: f64,
    pub hermiticity_defect: f64,
}

/// `true` iff `λ_min(C) ≥ −tol·‖C‖` and `C` is hermitian within `tol`.
pub fn is_completely_positive(s: &Superoperator, tol: f64) -> CpReport {
    let choi = ChoiMatrix::of(s);
    let vals = choi.eigenvalues();
    let min_eigenvalue = vals[0];
    let choi_norm = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let hermiticity_defect = choi.hermiticity_defect();
    CpReport {
        completely_positive: hermiticity_defect <= tol.max(super::TOL_HERM) && min_eigenvalue >= -tol * choi_norm,
        min_eigenvalue,
        choi_norm,
        hermiticity_defect,
    }
}

/// A set of Kraus operators `{W_α}` representing `ρ ↦ Σ W_α ρ W_α†`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    dim: HilbertDim,
    ops: Vec<Operator>,
}

impl KrausSet {
    pub fn new(ops: Vec<Operator>) -> Result<Self> {
        let d = ops
            .first()
            .map(Operator::dim)
            .ok_or_else(|| Error::InvalidParameter("empty Kraus set".into()))?;
        if let Some(bad) = ops.iter().find(|w| w.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
        }
        Ok(Self { dim: HilbertDim::new(d)?, ops })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim.get()
    }

    pub fn operators(&self) -> &[Operator] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn apply(&self, rho: &Operator) -> Operator {
        let mut out = CMat::zeros(self.dim(), self.dim());
        for w in &self.ops {
            out += w.matrix() * rho.matrix() * w.matrix().adjoint();
        }
        Operator::from_matrix_unchecked(out)
    }

    pub fn to_superoperator(&self) -> Superoperator {
        let n = self.dim.squared();
        let mut mat = CMat::zeros(n, n);
        for w in &self.ops {
            mat += w.matrix().conjugate().kronecker(w.matrix());
        }
        Superoperator::from_parts(self.dim, mat)
    }

    /// `Σ W_α† W_α`
    pub fn completeness(&self) -> Operator {
        let mut out = CMat::zeros(self.dim(), self.dim());
        for w in &self.ops {
            out += w.matrix().adjoint() * w.matrix();
        }
        Operator::from_matrix_unchecked(out)
    }

    /// Largest entry of `Σ W_α† W_α − 1`.
    pub fn trace_preservation_defect(&self) -> f64 {
        self.completeness().max_abs_diff(&Operator::identity(self.dim()))
    }
}

/// Kraus operators from the spectral decomposition of a Choi matrix.
///
/// Each eigenpair `(λ, v)` with `λ > KRAUS_CUTOFF·λ_max` yields `W = √λ · unvec(v)`.
/// Fails if `λ_min < −tol·‖C‖`.
pub fn kraus_from_choi(choi: &ChoiMatrix, tol: f64) -> Result<KrausSet> {
    kraus_from_choi_with_cutoff(choi, tol, KRAUS_CUTOFF)
}

pub fn kraus_from_choi_with_cutoff(choi: &ChoiMatrix, tol: f64, cutoff: f64) -> Result<KrausSet> {
    let d = choi.dim();
    let (vals, vecs) = linalg::eigh(choi.matrix());
    let lambda_max = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if vals[0] < -tol * lambda_max || choi.hermiticity_defect() > tol.max(super::TOL_HERM) {
        return Err(Error::NotCompletelyPositive { min_eigenvalue: vals[0] });
    }
    let mut ops = Vec::new();
    for (k, &lam) in vals.iter().enumerate().rev() {
        if lam <= cutoff * lambda_max || lam <= 0.0 {
            continue;
        }
        let v: CVec = vecs.column(k) * c(lam.sqrt());
        ops.push(Operator::from_matrix_unchecked(CMat::from_column_slice(d, d, v.as_slice())));
    }
    if ops.is_empty() {
        // the zero map
        ops.push(Operator::zeros(d));
    }
    Ok(KrausSet { dim: choi.dim, ops })
}

#[cfg(test)]
mod tests {
    use super::super::standard::*;
    use super::*;
    use crate::random::{random_density_matrix, random_kraus_channel, seeded};

    #[test]
    fn identity_map_choi_spectrum() {
        let choi = ChoiMatrix::of(&Superoperator::identity(2));
        let vals = choi.eigenvalues();
        let expected = [0.0, 0.0, 0.0, 2.0];
        for (v, e) in vals.iter().zip(expected) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn transposition_is_not_cp() {
        let report = is_completely_positive(&Superoperator::transposition(2), 1e-10);
        assert!(!report.completely_positive);
        assert!((report.min_eigenvalue + 1.0).abs() < 1e-14);
        assert!(kraus_from_choi(&ChoiMatrix::of(&Superoperator::transposition(2)), 1e-10).is_err());
    }

    #[test]
    fn unitary_conjugation_is_rank_one() {
        let h = sigma_1().scale_real(0.7);
        let w = h.scale(crate::linalg::I).exp();
        let s = Superoperator::from_left_right(&w, &w.adjoint()).unwrap();
        let report = is_completely_positive(&s, 1e-10);
        assert!(report.completely_positive);
        let vals = ChoiMatrix::of(&s).eigenvalues();
        assert_eq!(vals.iter().filter(|v| v.abs() > 1e-10).count(), 1);
    }

    #[test]
    fn identity_map_has_single_kraus_operator() {
        let k = kraus_from_choi(&ChoiMatrix::of(&Superoperator::identity(3)), 1e-10).unwrap();
        assert_eq!(k.len(), 1);
        // W = e^{iφ} 1
        let w = &k.operators()[0];
        let phase = w.get(0, 0);
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!(w.max_abs_diff(&Operator::identity(3).scale(phase)) < 1e-12);
    }

    #[test]
    fn dephasing_kraus_reconstruction() {
        let p = 0.3;
        let s3 = sigma_3();
        let map = &Superoperator::identity(2).scale(c(1.0 - p))
            + &Superoperator::from_left_right(&s3, &s3).unwrap().scale(c(p));
        let k = kraus_from_choi(&ChoiMatrix::of(&map), 1e-10).unwrap();
        assert_eq!(k.len(), 2);
        let mut r = seeded(5);
        for _ in 0..5 {
            let rho = random_density_matrix(&mut r, 2);
            assert!(k.apply(rho.op()).max_abs_diff(&map.apply(rho.op())) < 1e-10);
        }
        assert!(k.trace_preservation_defect() < 1e-10);
    }

    #[test]
    fn choi_round_trip() {
        let mut r = seeded(9);
        let ch = random_kraus_channel(&mut r, 3, 4);
        let s = ch.to_superoperator();
        let back = ChoiMatrix::of(&s).to_superoperator();
        assert_eq!(back, s);
        assert!(kraus_from_choi(&ChoiMatrix::of(&s), 1e-10).unwrap().len() <= 9);
    }
}
