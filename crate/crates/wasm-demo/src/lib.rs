//! Browser bindings for three small experiments on a qubit.
//!
//! Every export returns a flat `Float64Array` of fixed-width rows so the page
//! can plot it without any JSON round trip.

use wasm_bindgen::prelude::*;

use qds_core::davies::{build_davies, SpectralFunction};
use qds_core::gkls::GklsGenerator;
use qds_core::models::{two_level_generator, TwoLevelParams};
use qds_core::operators::standard::{sigma_1, sigma_2, sigma_3, sigma_minus};
use qds_core::operators::{DensityMatrix, Operator};
use qds_core::propagation::evolve_exact;
use qds_core::thermo::relative_entropy;
use qds_core::unraveling::{ensemble_density, TrajectoryConfig};

/// Largest trajectory count the page may request.
pub const MAX_TRAJECTORIES: usize = 20_000;

fn grid(t_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(t_max > 0.0 && t_max.is_finite()) || points < 2 {
        return Err("need t_max > 0 and at least two points".into());
    }
    Ok((0..points).map(|k| t_max * k as f64 / (points - 1) as f64).collect())
}

fn bloch_state(x: f64, y: f64, z: f64) -> DensityMatrix {
    let r = (x * x + y * y + z * z).sqrt();
    let s = if r > 1.0 { 1.0 / r } else { 1.0 };
    let op = &(&Operator::identity(2) + &sigma_1().scale_real(s * x)) + &(&sigma_2().scale_real(s * y) + &sigma_3().scale_real(s * z));
    DensityMatrix::new_unchecked(op.scale_real(0.5))
}

fn bloch_vector(rho: &DensityMatrix) -> [f64; 3] {
    [rho.expect(&sigma_1()), rho.expect(&sigma_2()), rho.expect(&sigma_3())]
}

/// Rows `[t, x, y, z]` of the Bloch vector under decay, excitation and dephasing.
pub fn bloch_relaxation_rows(
    omega: f64,
    gamma_down: f64,
    gamma_up: f64,
    delta: f64,
    initial: [f64; 3],
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    let p = TwoLevelParams::new(omega, gamma_down, gamma_up, delta).map_err(|e| e.to_string())?;
    let l = two_level_generator(&p).map_err(|e| e.to_string())?.superoperator();
    let rho0 = bloch_state(initial[0], initial[1], initial[2]);
    let mut out = Vec::with_capacity(4 * points);
    for t in grid(t_max, points)? {
        let rho = evolve_exact(&l, t, &rho0).map_err(|e| e.to_string())?;
        out.push(t);
        out.extend(bloch_vector(&rho));
    }
    Ok(out)
}

fn davies_qubit(epsilon: f64, lambda: f64, beta: f64) -> Result<GklsGenerator, String> {
    let h = sigma_3().scale_real(epsilon / 2.0);
    let r = SpectralFunction::ohmic_cubed_exp(1.0, 5.0, Some(beta)).map_err(|e| e.to_string())?;
    build_davies(&h, &[sigma_1()], &r, lambda).map_err(|e| e.to_string())
}

/// Rows `[t, p_upper, p_upper_gibbs, S(ρ_t ‖ ρ_Gibbs)]` for a qubit coupled
/// through `σ₁` to a bath with `R̂(ω) ∝ ω³e^{−ω/5}`, started in the upper level.
pub fn davies_thermalization_rows(epsilon: f64, lambda: f64, beta: f64, t_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let g = davies_qubit(epsilon, lambda, beta)?;
    let gibbs = DensityMatrix::gibbs(g.hamiltonian(), beta).map_err(|e| e.to_string())?;
    let l = g.superoperator();
    let rho0 = DensityMatrix::basis(2, 1);
    let mut out = Vec::with_capacity(4 * points);
    for t in grid(t_max, points)? {
        let rho = evolve_exact(&l, t, &rho0).map_err(|e| e.to_string())?;
        let rel = relative_entropy(&rho, &gibbs).map_err(|e| e.to_string())?;
        out.extend([t, rho.matrix()[(1, 1)].re, gibbs.matrix()[(1, 1)].re, rel]);
    }
    Ok(out)
}

/// Rows `[t, |ρ₁₂| from trajectories, its standard error, exact |ρ₁₂|]` for
/// a qubit under damping `√γ↓ σ⁻` and dephasing `√δ σ₃`, started in `|+⟩`.
pub fn unravel_rows(
    gamma_down: f64,
    delta: f64,
    n_traj: usize,
    dt: f64,
    t_max: f64,
    points: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if n_traj > MAX_TRAJECTORIES {
        return Err(format!("at most {MAX_TRAJECTORIES} trajectories"));
    }
    if !(gamma_down >= 0.0 && delta >= 0.0) {
        return Err("rates must be >= 0".into());
    }
    let g = GklsGenerator::new(
        Operator::zeros(2),
        vec![sigma_minus().scale_real(gamma_down.sqrt()), sigma_3().scale_real(delta.sqrt())],
    )
    .map_err(|e| e.to_string())?;
    let times = grid(t_max, points)?;
    let cfg = TrajectoryConfig::new(dt, n_traj, seed).map_err(|e| e.to_string())?;
    let rho0 = bloch_state(1.0, 0.0, 0.0);
    let est = ensemble_density(&g, &rho0, &times, &cfg).map_err(|e| e.to_string())?;
    let l = g.superoperator();
    let mut out = Vec::with_capacity(4 * points);
    for (k, &t) in times.iter().enumerate() {
        let exact = evolve_exact(&l, t, &rho0).map_err(|e| e.to_string())?;
        out.extend([t, est.mean[k][(0, 1)].norm(), est.std_err[k][(0, 1)], exact.matrix()[(0, 1)].norm()]);
    }
    Ok(out)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn bloch_relaxation(
    omega: f64,
    gamma_down: f64,
    gamma_up: f64,
    delta: f64,
    x0: f64,
    y0: f64,
    z0: f64,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    bloch_relaxation_rows(omega, gamma_down, gamma_up, delta, [x0, y0, z0], t_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn davies_thermalization(epsilon: f64, lambda: f64, beta: f64, t_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    davies_thermalization_rows(epsilon, lambda, beta, t_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn unravel_trajectories(
    gamma_down: f64,
    delta: f64,
    n_traj: usize,
    dt: f64,
    t_max: f64,
    points: usize,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    unravel_rows(gamma_down, delta, n_traj, dt, t_max, points, u64::from(seed)).map_err(|e| JsError::new(&e))
}
