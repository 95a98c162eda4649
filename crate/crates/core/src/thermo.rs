//! Entropy, relative entropy and thermodynamic bookkeeping for driven open systems.
//!
//! The ledger integrates, alongside `ρ_t`,
//!
//! ```text
//! W(t) = ∫ Tr(ρ_s dH/ds) ds        Q(t) = ∫ Tr((L(s)ρ_s) H(s)) ds
//! ```
//!
//! so the first law `E(t) − E(0) = W + Q` holds up to integrator error.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gkls::GklsGenerator;
use crate::linalg::{c, CMat, CVec};
use crate::operators::{devectorize, is_completely_positive, vectorize, DensityMatrix, Operator, Superoperator};
use crate::propagation::{evolve_exact, rk4_integrate, Sampling, Schedule};

/// Eigenvalues in `(−ZERO_CLIP, ZERO_CLIP]` count as exact zeros in logarithms.
pub const ZERO_CLIP: f64 = 1e-12;
/// Numerical floor for monotonicity checks.
pub const MONOTONE_TOL: f64 = 1e-9;

fn clipped_spectrum(op: &Operator, what: &str) -> Result<Vec<f64>> {
    let vals = op.eigh().0;
    if vals[0] <= -ZERO_CLIP {
        return Err(Error::NotPositive { what: what.into(), min_eigenvalue: vals[0] });
    }
    Ok(vals.into_iter().map(|v| if v <= ZERO_CLIP { 0.0 } else { v }).collect())
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 { 0.0 } else { x * x.ln() }
}

/// `S(ρ) = −Tr ρ ln ρ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(0.0 - clipped_spectrum(rho.op(), "state")?.into_iter().map(xlnx).sum::<f64>())
}

/// `S(ρ|σ) = Tr ρ(ln ρ − ln σ)`, `+∞` when the support of ρ is not inside that of σ.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    let neg = -von_neumann_entropy(rho)?;
    let (mu, w) = sigma.op().eigh();
    if mu[0] <= -ZERO_CLIP {
        return Err(Error::NotPositive { what: "reference state".into(), min_eigenvalue: mu[0] });
    }
    let mut cross = 0.0;
    for (j, &m) in mu.iter().enumerate() {
        let v = w.column(j);
        let weight = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        if m <= ZERO_CLIP {
            if weight > ZERO_CLIP {
                return Ok(f64::INFINITY);
            }
        } else {
            cross += weight * m.ln();
        }
    }
    Ok(neg - cross)
}

fn output_state(map: &Superoperator, rho: &DensityMatrix) -> DensityMatrix {
    let out = map.apply(rho.op());
    DensityMatrix::new_unchecked((&out + &out.adjoint()).scale_real(0.5))
}

/// `S(ρ|σ) − S(Λρ|Λσ)` for a CPTP map `Λ`; nonnegative up to rounding.
pub fn contractivity_check(map: &Superoperator, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let cp = is_completely_positive(map, 1e-10);
    if !cp.completely_positive {
        return Err(Error::NotCompletelyPositive { min_eigenvalue: cp.min_eigenvalue });
    }
    let tp = map.trace_preservation_defect();
    if tp > 1e-10 {
        return Err(Error::Precondition(format!("map is not trace preserving (defect {tp:e})")));
    }
    let before = relative_entropy(rho, sigma)?;
    if before.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let after = relative_entropy(&output_state(map, rho), &output_state(map, sigma))?;
    Ok(before - after)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HTheoremReport {
    pub entropies: Vec<f64>,
    /// Most negative `S(t_{i+1}) − S(t_i)`, or zero.
    pub worst_decrease: f64,
    pub nondecreasing: bool,
}

/// Entropy along the exact evolution of a bistochastic generator.
pub fn h_theorem_check(g: &GklsGenerator, rho0: &DensityMatrix, grid: &[f64]) -> Result<HTheoremReport> {
    if !g.is_bistochastic(1e-10) {
        return Err(Error::Precondition("H-theorem check needs a bistochastic generator".into()));
    }
    crate::propagation::validate_grid(grid)?;
    let l = g.superoperator();
    let entropies = grid
        .iter()
        .map(|&t| von_neumann_entropy(&evolve_exact(&l, t, rho0)?))
        .collect::<Result<Vec<_>>>()?;
    let worst_decrease = entropies.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::min);
    Ok(HTheoremReport { entropies, worst_decrease, nondecreasing: worst_decrease >= -MONOTONE_TOL })
}

/// Energy, work, heat and entropy on a common time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoLedger {
    pub t: Vec<f64>,
    pub energy: Vec<f64>,
    pub work: Vec<f64>,
    pub heat: Vec<f64>,
    pub entropy: Vec<f64>,
    /// `dS/dt − β dQ/dt`; present when a temperature was supplied.
    pub sigma: Option<Vec<f64>>,
    /// `|E(t) − E(0) − W(t) − Q(t)|`
    pub closure_defect: Vec<f64>,
}

impl ThermoLedger {
    pub fn max_closure_defect(&self) -> f64 {
        self.closure_defect.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with header `t,E,W,Q,S,sigma,closure_defect`; `sigma` is empty without a temperature.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E,W,Q,S,sigma,closure_defect\n");
        for i in 0..self.t.len() {
            let sigma = self.sigma.as_ref().map_or(String::new(), |s| format!("{:.16e}", s[i] + 0.0));
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                self.t[i] + 0.0, self.energy[i] + 0.0, self.work[i] + 0.0, self.heat[i] + 0.0, self.entropy[i] + 0.0, sigma, self.closure_defect[i]
            );
        }
        out
    }
}

/// Derivative of samples at every node by three-point Lagrange interpolation
/// (centred inside, one-sided at the ends); second order.
pub fn three_point_derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    if n == 2 {
        let d = (y[1] - y[0]) / (t[1] - t[0]);
        return vec![d, d];
    }
    (0..n)
        .map(|i| {
            let j = i.clamp(1, n - 2);
            let (x0, x1, x2) = (t[j - 1], t[j], t[j + 1]);
            let (y0, y1, y2) = (y[j - 1], y[j], y[j + 1]);
            let x = t[i];
            y0 * (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
                + y1 * (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
                + y2 * (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
        })
        .collect()
}

/// Five-point central difference of `H(t)`.
fn hamiltonian_rate(schedule: &Schedule, t: f64) -> Result<CMat> {
    const H: f64 = 1e-3;
    let h = |s: f64| -> Result<CMat> { Ok(schedule.generator_at(s)?.hamiltonian().matrix().clone()) };
    Ok((h(t - 2.0 * H)? - h(t - H)? * c(8.0) + h(t + H)? * c(8.0) - h(t + 2.0 * H)?) * c(1.0 / (12.0 * H)))
}

fn trace_product(a: &CMat, b: &CMat) -> f64 {
    // Tr(AB) for hermitian A, B is real
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

/// First-law bookkeeping along the schedule, integrating with RK4 steps no longer than `step`.
///
/// With piecewise-constant sampling the Hamiltonian jumps at grid points; each jump
/// contributes `Tr(ρ ΔH)` to the work. If `beta` is given, the entropy production
/// rate `σ = dS/dt − β dQ/dt` is filled in by finite differences on the grid.
pub fn first_law_ledger(schedule: &Schedule, rho0: &DensityMatrix, step: f64, beta: Option<f64>) -> Result<ThermoLedger> {
    let grid = schedule.grid().to_vec();
    let d = rho0.dim();
    let n = d * d;
    let g0 = schedule.effective_generator(grid[0])?;
    if g0.dim() != d {
        return Err(Error::DimensionMismatch { expected: g0.dim(), found: d });
    }
    let energy_at = |rho: &CMat, t: f64| -> Result<f64> {
        Ok(trace_product(rho, schedule.effective_generator(t)?.hamiltonian().matrix()))
    };

    let mut y = CVec::zeros(n + 2);
    y.rows_mut(0, n).copy_from(&vectorize(rho0.op()));
    let mut ledger = ThermoLedger {
        t: grid.clone(),
        energy: Vec::with_capacity(grid.len()),
        work: Vec::with_capacity(grid.len()),
        heat: Vec::with_capacity(grid.len()),
        entropy: Vec::with_capacity(grid.len()),
        sigma: None,
        closure_defect: Vec::with_capacity(grid.len()),
    };
    let record = |y: &CVec, t: f64, ledger: &mut ThermoLedger| -> Result<()> {
        let rho = devectorize(&y.rows(0, n).into_owned())?;
        let rho = DensityMatrix::new_unchecked((&rho + &rho.adjoint()).scale_real(0.5));
        let e = energy_at(rho.matrix(), t)?;
        ledger.energy.push(e);
        ledger.work.push(y[n].re);
        ledger.heat.push(y[n + 1].re);
        ledger.entropy.push(von_neumann_entropy(&rho)?);
        ledger.closure_defect.push((e - ledger.energy[0] - y[n].re - y[n + 1].re).abs());
        Ok(())
    };
    record(&y, grid[0], &mut ledger)?;

    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let rhs = |t: f64, y: &CVec| -> Result<CVec> {
            let g = match schedule.sampling() {
                Sampling::PiecewiseConstant => schedule.generator_at(t0)?,
                Sampling::Continuous => schedule.generator_at(t)?,
            };
            let rho_vec = y.rows(0, n).into_owned();
            let drho = g.superoperator().matrix() * &rho_vec;
            let rho = CMat::from_column_slice(d, d, rho_vec.as_slice());
            let drho_m = CMat::from_column_slice(d, d, drho.as_slice());
            let mut out = CVec::zeros(n + 2);
            out.rows_mut(0, n).copy_from(&drho);
            if schedule.sampling() == Sampling::Continuous {
                out[n] = c(trace_product(&rho, &hamiltonian_rate(schedule, t)?));
            }
            out[n + 1] = c(trace_product(&drho_m, g.hamiltonian().matrix()));
            Ok(out)
        };
        y = rk4_integrate(rhs, t0, t1, y, step)?;
        if schedule.sampling() == Sampling::PiecewiseConstant {
            let rho = CMat::from_column_slice(d, d, y.rows(0, n).into_owned().as_slice());
            let jump = schedule.generator_at(t1)?.hamiltonian().matrix() - schedule.generator_at(t0)?.hamiltonian().matrix();
            y[n] += c(trace_product(&rho, &jump));
        }
        record(&y, t1, &mut ledger)?;
    }

    if let Some(beta) = beta {
        let ds = three_point_derivative(&ledger.t, &ledger.entropy);
        let dq = three_point_derivative(&ledger.t, &ledger.heat);
        ledger.sigma = Some(ds.iter().zip(&dq).map(|(s, q)| s - beta * q).collect());
    }
    Ok(ledger)
}

/// Entropy production along a schedule whose generators each fix the
/// instantaneous Gibbs state at inverse temperature `beta`.
pub fn entropy_balance(schedule: &Schedule, rho0: &DensityMatrix, beta: f64, step: f64) -> Result<Vec<f64>> {
    for &t in schedule.grid() {
        let g = schedule.effective_generator(t)?;
        let gibbs = DensityMatrix::gibbs(g.hamiltonian(), beta)?;
        let residual = g.apply(gibbs.op()).trace_norm();
        if residual > 1e-8 {
            return Err(Error::Precondition(format!(
                "instantaneous Gibbs state is not stationary at t = {t} (residual {residual:e})"
            )));
        }
    }
    Ok(first_law_ledger(schedule, rho0, step, Some(beta))?.sigma.expect("beta given"))
}
