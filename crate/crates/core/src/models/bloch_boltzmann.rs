//! Discrete-velocity Bloch–Boltzmann equation: one internal density matrix per
//! velocity node, coupled by a kernel of PSD matrices.
//!
//! ```text
//! dρ_i/dt = −i Σ_a h_a(v_i)[S_a, ρ_i] + Σ_{ab} Σ_j K_ab(v_i, v_j) S_a ρ_j S_b† Δv
//!           − ½ Σ_{ab} γ_ab(v_i) {S_a† S_b, ρ_i}
//! γ_ab(v_i) = Σ_j K_ba(v_j, v_i) Δv
//! ```
//!
//! The loss rates are fixed by the kernel so that `Σ_i Tr ρ_i Δv` is conserved.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, I};
use crate::operators::{Operator, TOL_PSD};

#[derive(Clone, Debug, PartialEq)]
pub struct BlochBoltzmannDiscrete {
    velocities: Vec<f64>,
    dv: f64,
    /// `drift[i][a] = h_a(v_i)`
    drift: Vec<Vec<f64>>,
    basis: Vec<Operator>,
    /// `kernel[i][j]` is the matrix `K_ab(v_i, v_j)`.
    kernel: Vec<Vec<CMat>>,
    /// `gamma[i]` is the matrix `γ_ab(v_i)`.
    gamma: Vec<CMat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlochBoltzmannState {
    pub blocks: Vec<Operator>,
}

impl BlochBoltzmannState {
    /// `Σ_i Tr ρ_i Δv`
    pub fn total_trace(&self, dv: f64) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum::<f64>() * dv
    }

    pub fn block_traces(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.trace().re).collect()
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks.iter().map(|b| b.eigh().0[0]).fold(f64::INFINITY, f64::min)
    }
}

impl BlochBoltzmannDiscrete {
    pub fn new(
        velocities: Vec<f64>,
        dv: f64,
        drift: Vec<Vec<f64>>,
        basis: Vec<Operator>,
        kernel: Vec<Vec<CMat>>,
    ) -> Result<Self> {
        let nv = velocities.len();
        let na = basis.len();
        if nv == 0 || na == 0 {
            return Err(Error::InvalidParameter("need at least one velocity and one basis operator".into()));
        }
        if !(dv > 0.0 && dv.is_finite()) {
            return Err(Error::InvalidParameter(format!("dv must be > 0, got {dv}")));
        }
        let n = basis[0].dim();
        if let Some(s) = basis.iter().find(|s| s.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: s.dim() });
        }
        if drift.len() != nv || drift.iter().any(|h| h.len() != na) {
            return Err(Error::InvalidParameter("drift must be indexed [velocity][basis]".into()));
        }
        if kernel.len() != nv || kernel.iter().any(|row| row.len() != nv) {
            return Err(Error::InvalidParameter("kernel must be indexed [velocity][velocity]".into()));
        }
        for (i, h) in drift.iter().enumerate() {
            let mut m = CMat::zeros(n, n);
            for (a, s) in basis.iter().enumerate() {
                m += s.matrix() * c(h[a]);
            }
            Operator::from_matrix_unchecked(m).require_hermitian(&format!("drift Hamiltonian at velocity {i}"))?;
        }
        for (i, row) in kernel.iter().enumerate() {
            for (j, k) in row.iter().enumerate() {
                if k.nrows() != na || k.ncols() != na {
                    return Err(Error::DimensionMismatch { expected: na, found: k.nrows() });
                }
                let what = format!("kernel block ({i}, {j})");
                let herm = linalg::max_abs_diff(k, &k.adjoint());
                if herm > TOL_PSD * linalg::max_abs(k).max(1.0) {
                    return Err(Error::NotHermitian { what, defect: herm });
                }
                let min = linalg::eigvalsh(k)[0];
                if min < -TOL_PSD * linalg::max_abs(k).max(1.0) {
                    return Err(Error::NotPositive { what, min_eigenvalue: min });
                }
            }
        }
        let gamma = (0..nv)
            .map(|i| {
                let mut g = CMat::zeros(na, na);
                for row in &kernel {
                    g += row[i].transpose() * c(dv);
                }
                g
            })
            .collect();
        Ok(Self { velocities, dv, drift, basis, kernel, gamma })
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    pub fn levels(&self) -> usize {
        self.basis[0].dim()
    }

    /// `γ(v_i)` as derived from the kernel.
    pub fn loss_rates(&self, i: usize) -> &CMat {
        &self.gamma[i]
    }

    /// Validates a state: right shapes, PSD blocks, unit total trace.
    pub fn check_state(&self, state: &BlochBoltzmannState, tol: f64) -> Result<()> {
        if state.blocks.len() != self.velocities.len() {
            return Err(Error::DimensionMismatch { expected: self.velocities.len(), found: state.blocks.len() });
        }
        if let Some(b) = state.blocks.iter().find(|b| b.dim() != self.levels()) {
            return Err(Error::DimensionMismatch { expected: self.levels(), found: b.dim() });
        }
        let min = state.min_eigenvalue();
        if min < -tol {
            return Err(Error::NotPositive { what: "velocity block".into(), min_eigenvalue: min });
        }
        let total = state.total_trace(self.dv);
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("total trace {total} differs from 1")));
        }
        Ok(())
    }

    fn derivative(&self, blocks: &[CMat]) -> Vec<CMat> {
        let n = self.levels();
        let s: Vec<&CMat> = self.basis.iter().map(Operator::matrix).collect();
        (0..blocks.len())
            .into_par_iter()
            .map(|i| {
                let rho = &blocks[i];
                let mut h = CMat::zeros(n, n);
                for (a, sa) in s.iter().enumerate() {
                    h += *sa * c(self.drift[i][a]);
                }
                let mut out = (&h * rho - rho * &h) * (-I);
                let mut gain = CMat::zeros(n, n);
                for (j, rho_j) in blocks.iter().enumerate() {
                    let k = &self.kernel[i][j];
                    for (a, sa) in s.iter().enumerate() {
                        let left = *sa * rho_j;
                        for (b, sb) in s.iter().enumerate() {
                            if k[(a, b)] != c(0.0) {
                                gain += &left * sb.adjoint() * k[(a, b)];
                            }
                        }
                    }
                }
                out += gain * c(self.dv);
                let mut loss = CMat::zeros(n, n);
                for (a, sa) in s.iter().enumerate() {
                    for (b, sb) in s.iter().enumerate() {
                        let g = self.gamma[i][(a, b)];
                        if g != c(0.0) {
                            loss += sa.adjoint() * *sb * g;
                        }
                    }
                }
                out -= (&loss * rho + rho * &loss) * c(0.5);
                out
            })
            .collect()
    }

    /// One RK4 step of length `dt`.
    pub fn step(&self, state: &BlochBoltzmannState, dt: f64) -> Result<BlochBoltzmannState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if state.blocks.len() != self.velocities.len() {
            return Err(Error::DimensionMismatch { expected: self.velocities.len(), found: state.blocks.len() });
        }
        let y: Vec<CMat> = state.blocks.iter().map(|b| b.matrix().clone()).collect();
        let axpy = |y: &[CMat], k: &[CMat], h: f64| -> Vec<CMat> {
            y.iter().zip(k).map(|(a, b)| a + b * c(h)).collect()
        };
        let k1 = self.derivative(&y);
        let k2 = self.derivative(&axpy(&y, &k1, 0.5 * dt));
        let k3 = self.derivative(&axpy(&y, &k2, 0.5 * dt));
        let k4 = self.derivative(&axpy(&y, &k3, dt));
        let blocks = (0..y.len())
            .map(|i| {
                let m = &y[i] + (&k1[i] + (&k2[i] + &k3[i]) * c(2.0) + &k4[i]) * c(dt / 6.0);
                let m = (&m + m.adjoint()) * c(0.5);
                Operator::from_matrix_unchecked(m)
            })
            .collect();
        Ok(BlochBoltzmannState { blocks })
    }

    /// The full linear generator on the stacked vector `(vec ρ_1, …, vec ρ_N)`.
    pub fn generator_matrix(&self) -> CMat {
        let nv = self.velocities.len();
        let n2 = self.levels() * self.levels();
        let mut out = CMat::zeros(nv * n2, nv * n2);
        for j in 0..nv {
            for col in 0..n2 {
                let mut blocks = vec![CMat::zeros(self.levels(), self.levels()); nv];
                blocks[j][col] = c(1.0);
                let d = self.derivative(&blocks);
                for (i, m) in d.iter().enumerate() {
                    for r in 0..n2 {
                        out[(i * n2 + r, j * n2 + col)] = m[r];
                    }
                }
            }
        }
        out
    }

    /// Stationary state from the null space of the full generator, if unique.
    pub fn stationary_state(&self) -> Result<BlochBoltzmannState> {
        let kernel = linalg::null_space(&self.generator_matrix(), 1e-9);
        if kernel.len() != 1 {
            return Err(Error::Precondition(format!("stationary state not unique: kernel dimension {}", kernel.len())));
        }
        let n = self.levels();
        let blocks: Vec<CMat> = (0..self.velocities.len())
            .map(|i| CMat::from_column_slice(n, n, &kernel[0].as_slice()[i * n * n..(i + 1) * n * n]))
            .collect();
        let total: num_complex::Complex64 = blocks.iter().map(|b| b.trace()).sum::<num_complex::Complex64>() * self.dv;
        Ok(BlochBoltzmannState {
            blocks: blocks
                .into_iter()
                .map(|b| {
                    let b = b / total;
                    Operator::from_matrix_unchecked((&b + b.adjoint()) * c(0.5))
                })
                .collect(),
        })
    }

    /// If every kernel block satisfies `Σ_ab K_ab S_b† S_a ∝ 1`, the block
    /// traces obey a classical master equation `dp/dt = W p` with
    /// `W_ij = Δv·w_ij` for `i ≠ j` and columns summing to zero; returns `W`.
    pub fn classical_rate_matrix(&self, tol: f64) -> Option<DMatrix<f64>> {
        let nv = self.velocities.len();
        let n = self.levels();
        let mut w = DMatrix::zeros(nv, nv);
        for i in 0..nv {
            for j in 0..nv {
                let k = &self.kernel[i][j];
                let mut m = CMat::zeros(n, n);
                for (a, sa) in self.basis.iter().enumerate() {
                    for (b, sb) in self.basis.iter().enumerate() {
                        m += sb.matrix().adjoint() * sa.matrix() * k[(a, b)];
                    }
                }
                let scalar = m.trace() / c(n as f64);
                let off = linalg::max_abs_diff(&m, &(CMat::identity(n, n) * scalar));
                if off > tol * linalg::max_abs(&m).max(1.0) || scalar.im.abs() > tol {
                    return None;
                }
                w[(i, j)] = scalar.re * self.dv;
            }
        }
        for j in 0..nv {
            let out: f64 = (0..nv).map(|i| w[(i, j)]).sum();
            w[(j, j)] -= out;
        }
        Some(w)
    }
}
