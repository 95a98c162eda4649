//! Propagators for constant and time-dependent generators.
//!
//! Three independent routes are provided so they can cross-check each other:
//! the matrix exponential `exp(tL)`, classical RK4 on the vectorized equation,
//! and a truncated Dyson-type expansion built only from manifestly completely
//! positive pieces.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gkls::GklsGenerator;
use crate::linalg::{self, c, CMat, CVec, I};
use crate::operators::{devectorize, vectorize, DensityMatrix, HilbertDim, Operator, Superoperator};

/// Maximum number of Dyson levels.
pub const MAX_DYSON_ORDER: usize = 8;
/// Quadrature intervals per Dyson level.
pub const DYSON_GRID: usize = 64;

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn to_state(v: &CVec) -> DensityMatrix {
    let op = devectorize(v).expect("square length");
    DensityMatrix::new_unchecked((&op + &op.adjoint()).scale_real(0.5))
}

/// `exp(tL)` as a superoperator.
pub fn propagator(l: &Superoperator, t: f64) -> Superoperator {
    l.exp(t)
}

/// `ρ_t = exp(tL) ρ₀`.
pub fn evolve_exact(l: &Superoperator, t: f64, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    check_time(t)?;
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: rho0.dim() });
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    Ok(to_state(&(l.exp(t).matrix() * vectorize(rho0.op()))))
}

/// Largest `‖hL‖` bound handled by a single Taylor substep in [`evolve_action`].
const ACTION_THETA: f64 = 4.0;
const ACTION_MAX_TERMS: usize = 80;

/// `ρ_t = exp(tL) ρ₀` without forming the `d² × d²` matrix.
///
/// The exponential is applied as a Taylor series in operator form, split into
/// substeps whose length keeps `h·‖L‖` below a fixed bound. Cost is `O(d³)`
/// per generator application, which beats the dense exponential once `d` is
/// beyond a handful of levels.
pub fn evolve_action(g: &GklsGenerator, t: f64, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    check_time(t)?;
    let d = g.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho0.dim() });
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    // The commutator ignores a shift of H by its spectral midpoint.
    let hv = linalg::eigvalsh(g.hamiltonian().matrix());
    let mid = 0.5 * (hv[0] + hv[d - 1]);
    let mut k = CMat::zeros(d, d);
    let mut jump_bound = 0.0;
    for v in g.jumps() {
        k += v.matrix().adjoint() * v.matrix();
        jump_bound += linalg::spectral_norm(v.matrix()).powi(2);
    }
    let h_eff = g.hamiltonian().matrix() - CMat::identity(d, d) * c(mid) - &k * c(0.5) * I;
    let jumps: Vec<(CMat, CMat)> = g.jumps().iter().map(|v| (v.matrix().clone(), v.matrix().adjoint())).collect();
    // Every Taylor term is hermitian, so −iH_eff ρ + h.c. suffices. The
    // sandwich terms are re-hermitized: without the anticommutator they would
    // otherwise amplify rounding noise in the antihermitian part.
    let apply = |r: &CMat| -> CMat {
        let y = linalg::matmul(&h_eff, r) * (-I);
        let mut out = y.clone();
        for (v, vd) in &jumps {
            out += linalg::matmul(&linalg::matmul(v, r), vd) * c(0.5);
        }
        &out + out.adjoint()
    };
    let bound = 2.0 * linalg::spectral_norm(&h_eff) + jump_bound;
    let substeps = ((t * bound / ACTION_THETA).ceil() as usize).max(1);
    let h = t / substeps as f64;
    let mut rho = rho0.matrix().clone();
    for _ in 0..substeps {
        let mut term = rho.clone();
        let mut sum = rho.clone();
        let mut small = 0;
        for j in 1..=ACTION_MAX_TERMS {
            term = apply(&term) * c(h / j as f64);
            sum += &term;
            if linalg::max_abs(&term) <= 1e-17 * linalg::max_abs(&sum) {
                small += 1;
                if small == 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        rho = sum;
    }
    if rho.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numerical("Taylor action produced non-finite entries".into()));
    }
    Ok(DensityMatrix::new_unchecked(Operator::from_matrix_unchecked((&rho + rho.adjoint()) * c(0.5))))
}

/// Classical fourth-order Runge-Kutta from `t0` to `t1` with steps no longer than `step`.
///
/// The interval is split into `ceil((t1 - t0)/step)` equal steps so the end point is hit exactly.
pub(crate) fn rk4_integrate(
    mut f: impl FnMut(f64, &CVec) -> Result<CVec>,
    t0: f64,
    t1: f64,
    y0: CVec,
    step: f64,
) -> Result<CVec> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be > 0, got {step}")));
    }
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(y0);
    }
    let n = (span / step - 1e-9).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let half = c(0.5 * h);
    let full = c(h);
    let sixth = c(h / 6.0);
    let mut y = y0;
    for k in 0..n {
        let t = t0 + k as f64 * h;
        let k1 = f(t, &y)?;
        let k2 = f(t + 0.5 * h, &(&y + &k1 * half))?;
        let k3 = f(t + 0.5 * h, &(&y + &k2 * half))?;
        let k4 = f(t + h, &(&y + &k3 * full))?;
        y += (k1 + (k2 + k3) * c(2.0) + k4) * sixth;
    }
    Ok(y)
}

/// RK4 under a constant generator.
pub fn evolve_rk4(l: &Superoperator, t: f64, rho0: &DensityMatrix, step: f64) -> Result<DensityMatrix> {
    check_time(t)?;
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch { expected: l.dim(), found: rho0.dim() });
    }
    let m = l.matrix();
    let y = rk4_integrate(|_, y| Ok(m * y), 0.0, t, vectorize(rho0.op()), step)?;
    Ok(to_state(&y))
}

/// How a [`Schedule`] turns its provider into a generator between grid points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// `L(t_i)` is held on `[t_i, t_{i+1})`.
    PiecewiseConstant,
    /// The provider is sampled at every integrator stage; the grid only marks output times.
    Continuous,
}

type Provider = Arc<dyn Fn(f64) -> Result<GklsGenerator> + Send + Sync>;

/// Time-dependent generator together with the output grid.
#[derive(Clone)]
pub struct Schedule {
    provider: Provider,
    grid: Vec<f64>,
    sampling: Sampling,
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Schedule")
            .field("grid", &self.grid)
            .field("sampling", &self.sampling)
            .finish_non_exhaustive()
    }
}

impl Schedule {
    pub fn new(
        provider: impl Fn(f64) -> Result<GklsGenerator> + Send + Sync + 'static,
        grid: Vec<f64>,
        sampling: Sampling,
    ) -> Result<Self> {
        validate_grid(&grid)?;
        Ok(Self { provider: Arc::new(provider), grid, sampling })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    pub fn generator_at(&self, t: f64) -> Result<GklsGenerator> {
        (self.provider)(t)
    }

    /// Generator in force at time `t` under this schedule's sampling rule.
    pub fn effective_generator(&self, t: f64) -> Result<GklsGenerator> {
        match self.sampling {
            Sampling::Continuous => self.generator_at(t),
            Sampling::PiecewiseConstant => {
                let idx = self.grid.partition_point(|&g| g <= t).saturating_sub(1);
                self.generator_at(self.grid[idx])
            }
        }
    }
}

/// Grid must be nonempty, finite and strictly increasing.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("time grid is empty".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("time grid has non-finite points".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// RK4 along a schedule; returns the state at every grid point (the first is `ρ₀`).
pub fn evolve_schedule_rk4(schedule: &Schedule, rho0: &DensityMatrix, step: f64) -> Result<Vec<DensityMatrix>> {
    let grid = schedule.grid();
    let mut out = Vec::with_capacity(grid.len());
    out.push(rho0.clone());
    let mut y = vectorize(rho0.op());
    for w in grid.windows(2) {
        y = match schedule.sampling() {
            Sampling::PiecewiseConstant => {
                let l = schedule.generator_at(w[0])?.superoperator();
                let m = l.matrix().clone();
                rk4_integrate(|_, y| Ok(&m * y), w[0], w[1], y, step)?
            }
            Sampling::Continuous => rk4_integrate(
                |t, y| Ok(schedule.generator_at(t)?.superoperator().matrix() * y),
                w[0],
                w[1],
                y,
                step,
            )?,
        };
        out.push(to_state(&y));
    }
    Ok(out)
}

/// Time-ordered product of exact exponentials for a piecewise-constant schedule.
pub fn evolve_schedule_exact(schedule: &Schedule, rho0: &DensityMatrix) -> Result<Vec<DensityMatrix>> {
    if schedule.sampling() != Sampling::PiecewiseConstant {
        return Err(Error::Precondition("exact schedule propagation needs piecewise-constant sampling".into()));
    }
    let grid = schedule.grid();
    let mut out = Vec::with_capacity(grid.len());
    out.push(rho0.clone());
    let mut y = vectorize(rho0.op());
    for w in grid.windows(2) {
        let l = schedule.generator_at(w[0])?.superoperator();
        y = l.exp(w[1] - w[0]).matrix() * y;
        out.push(to_state(&y));
    }
    Ok(out)
}

/// Composite quadrature weights on `j + 1` equispaced nodes over `[0, j·h]`.
///
/// Simpson for even `j`, Simpson 3/8 on the first three intervals plus Simpson
/// for odd `j ≥ 3`, trapezoid for `j = 1`. All weights are positive.
fn quadrature_weights(j: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; j + 1];
    match j {
        0 => {}
        1 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        _ => {
            let start = if j % 2 == 1 {
                for (k, coef) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
                    w[k] += 3.0 * h / 8.0 * coef;
                }
                3
            } else {
                0
            };
            let mut k = start;
            while k + 2 <= j {
                w[k] += h / 3.0;
                w[k + 1] += 4.0 * h / 3.0;
                w[k + 2] += h / 3.0;
                k += 2;
            }
        }
    }
    w
}

/// Partial sums `Λ_t^{(0)}, …, Λ_t^{(order)}` of the expansion
///
/// ```text
/// Λ_t = W_t + Σ_n ∫…∫ W_{t−t_n} Φ W_{t_n−t_{n−1}} Φ … Φ W_{t_1}
/// ```
///
/// with `W_t ρ = S_t ρ S_t†`, `S_t = exp(−itH − (t/2)Σ V†V)` and `Φρ = Σ VρV†`.
/// The nested time integrals are evaluated as iterated convolutions on a
/// uniform grid of `grid` intervals.
pub fn dyson_partial_sums(g: &GklsGenerator, t: f64, order: usize, grid: usize) -> Result<Vec<Superoperator>> {
    check_time(t)?;
    if order > MAX_DYSON_ORDER {
        return Err(Error::InvalidParameter(format!("Dyson order {order} exceeds {MAX_DYSON_ORDER}")));
    }
    if grid == 0 {
        return Err(Error::InvalidParameter("Dyson grid needs at least one interval".into()));
    }
    let d = g.dim();
    let dim = HilbertDim::new(d)?;
    let h = t / grid as f64;
    let generator = (g.hamiltonian().matrix() * (-I)) - g.jump_sum().matrix() * c(0.5);
    let s_step = (generator * c(h)).exp();

    // W at each grid time kh
    let mut w_maps = Vec::with_capacity(grid + 1);
    let mut s = CMat::identity(d, d);
    for _ in 0..=grid {
        w_maps.push(s.conjugate().kronecker(&s));
        s = &s_step * s;
    }
    let n = d * d;
    let mut phi = CMat::zeros(n, n);
    for v in g.jumps() {
        phi += v.matrix().conjugate().kronecker(v.matrix());
    }

    let mut level: Vec<CMat> = w_maps.clone();
    let mut partial = level[grid].clone();
    let mut sums = vec![Superoperator::from_parts(dim, partial.clone())];
    for _ in 1..=order {
        let fed: Vec<CMat> = level.iter().map(|x| &phi * x).collect();
        let mut next = Vec::with_capacity(grid + 1);
        for j in 0..=grid {
            let weights = quadrature_weights(j, h);
            let mut acc = CMat::zeros(n, n);
            for (i, wt) in weights.iter().enumerate() {
                if *wt != 0.0 {
                    acc += &w_maps[j - i] * &fed[i] * c(*wt);
                }
            }
            next.push(acc);
        }
        level = next;
        partial += &level[grid];
        sums.push(Superoperator::from_parts(dim, partial.clone()));
    }
    Ok(sums)
}

/// `ρ_t` from the Dyson expansion truncated after `order` terms.
pub fn evolve_dyson(g: &GklsGenerator, t: f64, rho0: &DensityMatrix, order: usize) -> Result<DensityMatrix> {
    if rho0.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: rho0.dim() });
    }
    let sums = dyson_partial_sums(g, t, order, DYSON_GRID)?;
    let out = sums.last().expect("at least one term").apply(rho0.op());
    Ok(DensityMatrix::new_unchecked((&out + &out.adjoint()).scale_real(0.5)))
}

/// `‖Λ_{t+s} − Λ_t Λ_s‖` for the exact exponential.
pub fn semigroup_defect(l: &Superoperator, t: f64, s: f64) -> Result<f64> {
    check_time(t)?;
    check_time(s)?;
    let lhs = l.exp(t + s);
    let rhs = l.exp(t).compose(&l.exp(s));
    Ok((&lhs - &rhs).norm())
}

/// RK4 transfer matrix over `[0, t]`: apply the integrator to every basis operator.
pub fn rk4_propagator(l: &Superoperator, t: f64, step: f64) -> Result<Superoperator> {
    check_time(t)?;
    let n = l.dim() * l.dim();
    let m = l.matrix();
    let mut out = CMat::zeros(n, n);
    for k in 0..n {
        let mut e = CVec::zeros(n);
        e[k] = c(1.0);
        let col = rk4_integrate(|_, y| Ok(m * y), 0.0, t, e, step)?;
        out.set_column(k, &col);
    }
    Ok(Superoperator::from_parts(l.hilbert_dim(), out))
}

/// Semigroup defect of the RK4 propagator; a measurement, not a guarantee.
pub fn semigroup_defect_rk4(l: &Superoperator, t: f64, s: f64, step: f64) -> Result<f64> {
    let lhs = rk4_propagator(l, t + s, step)?;
    let rhs = rk4_propagator(l, t, step)?.compose(&rk4_propagator(l, s, step)?);
    Ok((&lhs - &rhs).norm())
}

/// Propagation method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    ExactExponential,
    Rk4 { step: f64 },
    Dyson { order: usize },
}

/// A configured propagation method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Propagator {
    method: Method,
}

impl Propagator {
    pub fn new(method: Method) -> Result<Self> {
        match method {
            Method::Rk4 { step } if !(step > 0.0) => {
                Err(Error::InvalidParameter(format!("RK4 step must be > 0, got {step}")))
            }
            Method::Dyson { order } if order > MAX_DYSON_ORDER => {
                Err(Error::InvalidParameter(format!("Dyson order {order} exceeds {MAX_DYSON_ORDER}")))
            }
            _ => Ok(Self { method }),
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn evolve(&self, g: &GklsGenerator, t: f64, rho0: &DensityMatrix) -> Result<DensityMatrix> {
        match self.method {
            Method::ExactExponential => evolve_exact(&g.superoperator(), t, rho0),
            Method::Rk4 { step } => evolve_rk4(&g.superoperator(), t, rho0, step),
            Method::Dyson { order } => evolve_dyson(g, t, rho0, order),
        }
    }
}

/// `U ρ U†` with `U = exp(−iHt)`, for closed-system comparisons.
pub fn unitary_evolution(h: &Operator, t: f64, rho0: &DensityMatrix) -> DensityMatrix {
    let u = h.scale(-I * t).exp();
    DensityMatrix::new_unchecked(&(&u * rho0.op()) * &u.adjoint())
}
