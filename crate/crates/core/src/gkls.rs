//! Standard-form GKLS generators and white-noise (double-commutator) generators.
//!
//! ```text
//! Lρ = −i[H, ρ] + Σ_j V_j ρ V_j† − ½{Σ_j V_j†V_j, ρ}
//! ```
//!
//! Rates are folded into the jump operators. Builders for named models take
//! rates explicitly and scale the jumps by their square roots.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, I};
use crate::operators::{vectorize, DensityMatrix, HilbertDim, Operator, Superoperator};

/// Hamiltonian plus jump operators of a Markovian master equation.
#[derive(Clone, Debug, PartialEq)]
pub struct GklsGenerator {
    hamiltonian: Operator,
    jumps: Vec<Operator>,
}

impl GklsGenerator {
    pub fn new(hamiltonian: Operator, jumps: Vec<Operator>) -> Result<Self> {
        hamiltonian.require_hermitian("Hamiltonian")?;
        let d = hamiltonian.dim();
        if let Some(v) = jumps.iter().find(|v| v.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: v.dim() });
        }
        Ok(Self { hamiltonian, jumps })
    }

    /// Closed system: no jumps.
    pub fn closed(hamiltonian: Operator) -> Result<Self> {
        Self::new(hamiltonian, Vec::new())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Operator] {
        &self.jumps
    }

    /// `Σ_j V_j†V_j`
    pub fn jump_sum(&self) -> Operator {
        let mut k = CMat::zeros(self.dim(), self.dim());
        for v in &self.jumps {
            k += v.matrix().adjoint() * v.matrix();
        }
        Operator::from_matrix_unchecked(k)
    }

    /// Matrix of `L` on column-stacked operators.
    pub fn superoperator(&self) -> Superoperator {
        let d = self.dim();
        let id = CMat::identity(d, d);
        let h = self.hamiltonian.matrix();
        let k = self.jump_sum();
        let k = k.matrix();
        let mut mat = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-I);
        for v in &self.jumps {
            mat += v.matrix().conjugate().kronecker(v.matrix());
        }
        mat -= (id.kronecker(k) + k.transpose().kronecker(&id)) * c(0.5);
        Superoperator::from_parts(HilbertDim::new(d).expect("nonempty"), mat)
    }

    /// Same generator assembled from the commutator-pair form
    /// `−i[H,ρ] + ½Σ_j ([V_j, ρV_j†] + [V_jρ, V_j†])`, one left/right product at a time.
    pub fn superoperator_commutator_form(&self) -> Superoperator {
        let d = self.dim();
        let one = Operator::identity(d);
        let lr = |a: &Operator, b: &Operator| Superoperator::from_left_right(a, b).expect("same dim");
        let h = &self.hamiltonian;
        let mut total = &lr(h, &one).scale(-I) + &lr(&one, h).scale(I);
        for v in &self.jumps {
            let vd = v.adjoint();
            let vdv = &vd * v;
            // [V, ρV†] = VρV† − ρV†V ;  [Vρ, V†] = VρV† − V†Vρ
            let first = &lr(v, &vd) - &lr(&one, &vdv);
            let second = &lr(v, &vd) - &lr(&vdv, &one);
            total = &total + &(&first + &second).scale(c(0.5));
        }
        total
    }

    /// `Lρ` evaluated directly on matrices.
    pub fn apply(&self, rho: &Operator) -> Operator {
        let h = self.hamiltonian.matrix();
        let r = rho.matrix();
        let mut out = (h * r - r * h) * (-I);
        let mut k = CMat::zeros(self.dim(), self.dim());
        for v in &self.jumps {
            let vm = v.matrix();
            out += vm * r * vm.adjoint();
            k += vm.adjoint() * vm;
        }
        out -= (&k * r + r * &k) * c(0.5);
        Operator::from_matrix_unchecked(out)
    }

    /// Heisenberg-picture generator `L*A = i[H,A] + Σ V†AV − ½{V†V, A}`.
    pub fn adjoint_superoperator(&self) -> Superoperator {
        let d = self.dim();
        let id = CMat::identity(d, d);
        let h = self.hamiltonian.matrix();
        let k = self.jump_sum();
        let k = k.matrix();
        let mut mat = (id.kronecker(h) - h.transpose().kronecker(&id)) * I;
        for v in &self.jumps {
            // A ↦ V† A V  is  Vᵀ ⊗ V†
            mat += v.matrix().transpose().kronecker(&v.matrix().adjoint());
        }
        mat -= (id.kronecker(k) + k.transpose().kronecker(&id)) * c(0.5);
        Superoperator::from_parts(HilbertDim::new(d).expect("nonempty"), mat)
    }

    pub fn apply_adjoint(&self, a: &Operator) -> Operator {
        self.adjoint_superoperator().apply(a)
    }

    /// `true` iff `L(1) = 0` and `L*(1) = 0` within `tol`.
    pub fn is_bistochastic(&self, tol: f64) -> bool {
        let one = Operator::identity(self.dim());
        let zero = Operator::zeros(self.dim());
        self.apply(&one).max_abs_diff(&zero) <= tol
            && self.apply_adjoint(&one).max_abs_diff(&zero) <= tol
    }

    /// Unique state with `Lρ = 0`.
    ///
    /// Fails when the kernel of `L` is not one-dimensional.
    pub fn stationary_state(&self) -> Result<DensityMatrix> {
        stationary_state(&self.superoperator())
    }
}

/// Matrix of the GKLS generator.
pub fn generator_superoperator(g: &GklsGenerator) -> Superoperator {
    g.superoperator()
}

/// Matrix of the Heisenberg-picture generator.
pub fn adjoint_generator(g: &GklsGenerator) -> Superoperator {
    g.adjoint_superoperator()
}

pub fn is_bistochastic(g: &GklsGenerator, tol: f64) -> bool {
    g.is_bistochastic(tol)
}

/// Above this many superoperator rows the kernel is found by a linear solve
/// instead of a full SVD.
const SVD_STATIONARY_MAX: usize = 256;

/// Kernel-based stationary state of a generator matrix.
pub fn stationary_state(l: &Superoperator) -> Result<DensityMatrix> {
    if l.matrix().nrows() > SVD_STATIONARY_MAX {
        return stationary_state_bordered(l);
    }
    let kernel = linalg::null_space(l.matrix(), 1e-9);
    if kernel.len() != 1 {
        return Err(Error::Precondition(format!(
            "stationary state is not unique: kernel dimension {}",
            kernel.len()
        )));
    }
    let x = crate::operators::devectorize(&kernel[0])?;
    let tr = x.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::Numerical("kernel vector is traceless".into()));
    }
    let x = x.scale(c(1.0) / tr);
    let herm = (&x + &x.adjoint()).scale_real(0.5);
    Ok(DensityMatrix::new_unchecked(herm))
}

/// Solves `Lx = 0, Tr x = 1` with the first row of `L` replaced by the trace
/// functional. That row is redundant because `Tr ∘ L = 0`, so the bordered
/// matrix is invertible exactly when the kernel is one-dimensional.
fn stationary_state_bordered(l: &Superoperator) -> Result<DensityMatrix> {
    let m = l.matrix();
    let n = m.nrows();
    let d = l.dim();
    let mut a = m.clone();
    a.row_mut(0).fill(c(0.0));
    for i in 0..d {
        a[(0, i * d + i)] = c(1.0);
    }
    let mut rhs = linalg::CVec::zeros(n);
    rhs[0] = c(1.0);
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Precondition("stationary state is not unique: singular bordered system".into()))?;
    let scale = linalg::max_abs(m) * x.iter().fold(0.0f64, |s, z| s.max(z.norm()));
    let residual = (m * &x).iter().fold(0.0f64, |s, z| s.max(z.norm()));
    if !x.iter().all(|z| z.is_finite()) || x.norm() > 1e8 || residual > 1e-9 * scale.max(1.0) {
        return Err(Error::Precondition(format!(
            "stationary state is not unique: bordered solve residual {residual:.1e}"
        )));
    }
    let x = crate::operators::devectorize(&x)?;
    let herm = (&x + &x.adjoint()).scale_real(0.5);
    Ok(DensityMatrix::new_unchecked(herm))
}

type HamiltonianFn = Arc<dyn Fn(f64) -> Operator + Send + Sync>;

/// `Lρ = −i[H(t), ρ] − ½ Σ_j [V_j, [V_j, ρ]]` with hermitian `V_j`.
///
/// Only the Hamiltonian may depend on time.
#[derive(Clone)]
pub struct WhiteNoiseGenerator {
    hamiltonian: HamiltonianFn,
    jumps: Vec<Operator>,
    dim: usize,
}

impl fmt::Debug for WhiteNoiseGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WhiteNoiseGenerator")
            .field("dim", &self.dim)
            .field("jumps", &self.jumps)
            .finish_non_exhaustive()
    }
}

impl WhiteNoiseGenerator {
    pub fn new(
        hamiltonian: impl Fn(f64) -> Operator + Send + Sync + 'static,
        jumps: Vec<Operator>,
    ) -> Result<Self> {
        let h0 = hamiltonian(0.0);
        let dim = h0.dim();
        for v in &jumps {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.dim() });
            }
            v.require_hermitian("white-noise jump operator")?;
        }
        Ok(Self { hamiltonian: Arc::new(hamiltonian), jumps, dim })
    }

    pub fn constant(hamiltonian: Operator, jumps: Vec<Operator>) -> Result<Self> {
        Self::new(move |_| hamiltonian.clone(), jumps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jumps(&self) -> &[Operator] {
        &self.jumps
    }

    pub fn hamiltonian_at(&self, t: f64) -> Operator {
        (self.hamiltonian)(t)
    }

    /// The same dynamics as a standard-form generator at time `t`.
    pub fn generator_at(&self, t: f64) -> Result<GklsGenerator> {
        GklsGenerator::new(self.hamiltonian_at(t), self.jumps.clone())
    }
}

/// Double-commutator generator matrix at time `t`, assembled from `ad_V = 1⊗V − Vᵀ⊗1`.
pub fn white_noise_generator(w: &WhiteNoiseGenerator, t: f64) -> Result<Superoperator> {
    let h = w.hamiltonian_at(t);
    h.require_hermitian("Hamiltonian")?;
    if h.dim() != w.dim {
        return Err(Error::DimensionMismatch { expected: w.dim, found: h.dim() });
    }
    let d = w.dim;
    let id = CMat::identity(d, d);
    let ad = |a: &CMat| id.kronecker(a) - a.transpose().kronecker(&id);
    let mut mat = ad(h.matrix()) * (-I);
    for v in &w.jumps {
        let a = ad(v.matrix());
        mat -= &a * &a * c(0.5);
    }
    Superoperator::new(HilbertDim::new(d)?, mat)
}

/// `Tr(A · L(ρ))`-style helper: `vec(1)† L` as a row, used to spot trace leaks.
pub fn trace_leak(l: &Superoperator) -> f64 {
    let one = vectorize(&Operator::identity(l.dim()));
    (one.adjoint() * l.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
