//! Linear Itô–Schrödinger unraveling:
//!
//! ```text
//! dψ = −iHψ dt − ½ Σ V_j†V_j ψ dt − i Σ V_j ψ dB_j
//! ```
//!
//! The mean of `|ψ⟩⟨ψ|` over the noise solves the master equation. ψ is not
//! renormalized during evolution; the weight of a trajectory is its squared norm.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gkls::GklsGenerator;
use crate::linalg::{c, CMat, CVec, I};
use crate::operators::{DensityMatrix, Operator};
use crate::propagation::validate_grid;

/// Trajectories per work unit; partial sums are combined in chunk order.
const CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    EulerMaruyama,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, n_traj: usize, seed: u64) -> Result<Self> {
        let cfg = Self { dt, n_traj, seed, scheme: Scheme::EulerMaruyama };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter("n_traj must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryState {
    pub psi: CVec,
    pub t: f64,
}

/// Precomputed step matrices for one step length.
struct Stepper {
    dt: f64,
    drift: CMat,
    noise: Vec<CMat>,
}

impl Stepper {
    fn new(g: &GklsGenerator, dt: f64) -> Self {
        let d = g.dim();
        let h = g.hamiltonian().matrix();
        let k = g.jump_sum().into_matrix();
        let drift = CMat::identity(d, d) - (h * I + k * c(0.5)) * c(dt);
        let noise = g.jumps().iter().map(|v| v.matrix() * (-I)).collect();
        Self { dt, drift, noise }
    }

    fn step(&self, psi: &CVec, dw: &[f64]) -> CVec {
        let mut out = &self.drift * psi;
        for (b, w) in self.noise.iter().zip(dw) {
            out += b * psi * c(*w);
        }
        out
    }
}

/// One Euler–Maruyama step with the given Wiener increments.
pub fn em_step(g: &GklsGenerator, s: &TrajectoryState, dw: &[f64], dt: f64) -> Result<TrajectoryState> {
    if s.psi.len() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: s.psi.len() });
    }
    if dw.len() != g.jumps().len() {
        return Err(Error::DimensionMismatch { expected: g.jumps().len(), found: dw.len() });
    }
    let stepper = Stepper::new(g, dt);
    Ok(TrajectoryState { psi: stepper.step(&s.psi, dw), t: s.t + dt })
}

/// Independent random stream for trajectory `index`: ChaCha8 keyed by `seed`,
/// with the trajectory index as the stream number.
pub fn split_seed(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_increments(rng: &mut impl Rng, dt: f64, out: &mut [f64]) {
    let s = dt.sqrt();
    for w in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *w = z * s;
    }
}

/// Eigen-ensemble of ρ₀: eigenvalues (as probabilities) and eigenvectors.
struct InitialEnsemble {
    cumulative: Vec<f64>,
    vectors: Vec<CVec>,
}

impl InitialEnsemble {
    fn new(rho0: &DensityMatrix) -> Self {
        let (vals, vecs) = rho0.op().eigh();
        let weights: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        let vectors = (0..vals.len()).map(|k| vecs.column(k).into_owned()).collect();
        Self { cumulative, vectors }
    }

    fn sample(&self, rng: &mut impl Rng) -> CVec {
        let u: f64 = rng.random();
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.vectors.len() - 1);
        self.vectors[k].clone()
    }
}

/// Steps `(length, count)` covering `span` with steps of `dt` and one shorter
/// final step if needed.
fn step_plan(span: f64, dt: f64) -> Vec<(f64, usize)> {
    let full = (span / dt + 1e-9).floor() as usize;
    let rest = span - full as f64 * dt;
    let mut plan = vec![(dt, full)];
    if rest > 1e-9 * dt {
        plan.push((rest, 1));
    }
    plan
}

struct Runner<'a> {
    ensemble: InitialEnsemble,
    steppers: Vec<Vec<(Stepper, usize)>>,
    grid: &'a [f64],
    n_noise: usize,
}

impl<'a> Runner<'a> {
    fn new(g: &GklsGenerator, rho0: &DensityMatrix, grid: &'a [f64], dt: f64) -> Result<Self> {
        validate_grid(grid)?;
        if grid[0] < 0.0 {
            return Err(Error::InvalidParameter("time grid must start at t >= 0".into()));
        }
        if rho0.dim() != g.dim() {
            return Err(Error::DimensionMismatch { expected: g.dim(), found: rho0.dim() });
        }
        let mut prev = 0.0;
        let steppers = grid
            .iter()
            .map(|&t| {
                let plan = step_plan(t - prev, dt);
                prev = t;
                plan.into_iter().map(|(h, n)| (Stepper::new(g, h), n)).collect()
            })
            .collect();
        Ok(Self { ensemble: InitialEnsemble::new(rho0), steppers, grid, n_noise: g.jumps().len() })
    }

    /// ψ at every grid point for one trajectory.
    fn trajectory(&self, seed: u64, index: u64) -> Vec<CVec> {
        let mut rng = split_seed(seed, index);
        let mut psi = self.ensemble.sample(&mut rng);
        let mut dw = vec![0.0; self.n_noise];
        let mut out = Vec::with_capacity(self.grid.len());
        for segment in &self.steppers {
            for (stepper, count) in segment {
                for _ in 0..*count {
                    draw_increments(&mut rng, stepper.dt, &mut dw);
                    psi = stepper.step(&psi, &dw);
                }
            }
            out.push(psi.clone());
        }
        out
    }
}

/// Running sums of `|ψ⟩⟨ψ|` and of the squared real/imaginary parts.
#[derive(Clone)]
struct Moments {
    sum: Vec<CMat>,
    sq_re: Vec<DMatrix<f64>>,
    sq_im: Vec<DMatrix<f64>>,
    count: usize,
}

impl Moments {
    fn zeros(points: usize, d: usize) -> Self {
        Self {
            sum: vec![CMat::zeros(d, d); points],
            sq_re: vec![DMatrix::zeros(d, d); points],
            sq_im: vec![DMatrix::zeros(d, d); points],
            count: 0,
        }
    }

    /// Add one hermitian sample per grid point (only the upper triangle is read).
    fn add(&mut self, samples: &[CMat]) {
        for (k, x) in samples.iter().enumerate() {
            let d = x.nrows();
            for j in 0..d {
                for i in 0..=j {
                    let z = x[(i, j)];
                    self.sum[k][(i, j)] += z;
                    self.sq_re[k][(i, j)] += z.re * z.re;
                    self.sq_im[k][(i, j)] += z.im * z.im;
                }
            }
        }
        self.count += 1;
    }

    fn merge(&mut self, other: &Moments) {
        for k in 0..self.sum.len() {
            self.sum[k] += &other.sum[k];
            self.sq_re[k] += &other.sq_re[k];
            self.sq_im[k] += &other.sq_im[k];
        }
        self.count += other.count;
    }

    fn finish(self, times: Vec<f64>) -> EnsembleEstimate {
        let n = self.count as f64;
        let mut mean = Vec::with_capacity(self.sum.len());
        let mut std_err = Vec::with_capacity(self.sum.len());
        for k in 0..self.sum.len() {
            let d = self.sum[k].nrows();
            let mut m = CMat::zeros(d, d);
            let mut se = DMatrix::zeros(d, d);
            for j in 0..d {
                for i in 0..=j {
                    let mu = self.sum[k][(i, j)] / c(n);
                    let var = if self.count > 1 {
                        let vr = (self.sq_re[k][(i, j)] / n - mu.re * mu.re).max(0.0);
                        let vi = (self.sq_im[k][(i, j)] / n - mu.im * mu.im).max(0.0);
                        (vr + vi) * n / (n - 1.0)
                    } else {
                        0.0
                    };
                    let s = (var / n).sqrt();
                    m[(i, j)] = mu;
                    m[(j, i)] = mu.conj();
                    se[(i, j)] = s;
                    se[(j, i)] = s;
                }
            }
            mean.push(m);
            std_err.push(se);
        }
        EnsembleEstimate { times, mean, std_err, n_traj: self.count }
    }
}

/// Ensemble estimate of `ρ(t)` with a per-entry standard error
/// `sqrt(Var Re + Var Im)/√n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleEstimate {
    pub times: Vec<f64>,
    pub mean: Vec<CMat>,
    pub std_err: Vec<DMatrix<f64>>,
    pub n_traj: usize,
}

impl EnsembleEstimate {
    pub fn operator(&self, k: usize) -> Operator {
        Operator::from_fn(self.mean[k].nrows(), |i, j| self.mean[k][(i, j)])
    }

    /// Estimate divided by its trace: the normalized-trajectory observable average.
    pub fn normalized(&self, k: usize) -> Operator {
        let op = self.operator(k);
        let tr = op.trace();
        op.scale(c(1.0) / tr)
    }
}

fn projectors(path: &[CVec]) -> Vec<CMat> {
    path.iter().map(|psi| psi * psi.adjoint()).collect()
}

fn run_chunks(n_traj: usize, d: usize, points: usize, f: impl Fn(u64) -> Vec<CMat> + Sync) -> Moments {
    let n_chunks = n_traj.div_ceil(CHUNK);
    let partials: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut m = Moments::zeros(points, d);
            let end = ((chunk + 1) * CHUNK).min(n_traj);
            for idx in chunk * CHUNK..end {
                m.add(&f(idx as u64));
            }
            m
        })
        .collect();
    let mut total = Moments::zeros(points, d);
    for p in &partials {
        total.merge(p);
    }
    total
}

/// Mean of `|ψ(t)⟩⟨ψ(t)|` over `cfg.n_traj` trajectories at each grid time.
///
/// Trajectories run in parallel; sums are combined in trajectory-chunk order,
/// so the result is bitwise reproducible for a fixed seed.
pub fn ensemble_density(
    g: &GklsGenerator,
    rho0: &DensityMatrix,
    grid: &[f64],
    cfg: &TrajectoryConfig,
) -> Result<EnsembleEstimate> {
    cfg.validate()?;
    let runner = Runner::new(g, rho0, grid, cfg.dt)?;
    let m = run_chunks(cfg.n_traj, g.dim(), grid.len(), |i| projectors(&runner.trajectory(cfg.seed, i)));
    Ok(m.finish(grid.to_vec()))
}

/// Stored trajectories, for inspection or export.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEnsemble {
    pub seed: u64,
    pub dt: f64,
    pub times: Vec<f64>,
    /// `paths[n][k]` is ψ of trajectory `n` at `times[k]`.
    pub paths: Vec<Vec<CVec>>,
}

impl TrajectoryEnsemble {
    pub fn simulate(g: &GklsGenerator, rho0: &DensityMatrix, grid: &[f64], cfg: &TrajectoryConfig) -> Result<Self> {
        cfg.validate()?;
        let runner = Runner::new(g, rho0, grid, cfg.dt)?;
        let paths = (0..cfg.n_traj as u64).into_par_iter().map(|i| runner.trajectory(cfg.seed, i)).collect();
        Ok(Self { seed: cfg.seed, dt: cfg.dt, times: grid.to_vec(), paths })
    }

    pub fn estimate(&self) -> EnsembleEstimate {
        let d = self.paths.first().and_then(|p| p.first()).map_or(0, |v| v.len());
        let mut m = Moments::zeros(self.times.len(), d);
        for chunk in self.paths.chunks(CHUNK) {
            let mut part = Moments::zeros(self.times.len(), d);
            for p in chunk {
                part.add(&projectors(p));
            }
            m.merge(&part);
        }
        m.finish(self.times.clone())
    }
}

/// Means of `|ψ_dt⟩⟨ψ_dt| − |ψ_{dt/2}⟩⟨ψ_{dt/2}|` at `t_end` for successive
/// halvings of the step, all driven by the same Brownian paths.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementDifferences {
    /// Step lengths, coarsest first.
    pub dts: Vec<f64>,
    /// `diffs[k]` compares `dts[k]` with `dts[k + 1]`.
    pub diffs: Vec<CMat>,
    pub std_err: Vec<DMatrix<f64>>,
}

impl RefinementDifferences {
    /// Observed weak order `log2(‖D_k‖ / ‖D_{k+1}‖)` for each consecutive pair, using the largest entry.
    pub fn orders(&self) -> Vec<f64> {
        self.diffs
            .windows(2)
            .map(|w| (crate::linalg::max_abs(&w[0]) / crate::linalg::max_abs(&w[1])).log2())
            .collect()
    }
}

/// Coupled dt-halving experiment: each trajectory is simulated at
/// `coarse_dt, coarse_dt/2, …, coarse_dt/2^levels` on one Brownian path.
pub fn refinement_differences(
    g: &GklsGenerator,
    rho0: &DensityMatrix,
    t_end: f64,
    coarse_dt: f64,
    levels: usize,
    n_traj: usize,
    seed: u64,
) -> Result<RefinementDifferences> {
    if levels == 0 {
        return Err(Error::InvalidParameter("need at least one halving".into()));
    }
    let cfg = TrajectoryConfig::new(coarse_dt, n_traj, seed)?;
    let n_coarse = (t_end / coarse_dt).round() as usize;
    if n_coarse == 0 || ((n_coarse as f64) * coarse_dt - t_end).abs() > 1e-9 * t_end {
        return Err(Error::InvalidParameter("t_end must be a positive multiple of the coarse step".into()));
    }
    if rho0.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: rho0.dim() });
    }
    let dts: Vec<f64> = (0..=levels).map(|k| coarse_dt / (1u64 << k) as f64).collect();
    let steppers: Vec<Stepper> = dts.iter().map(|&h| Stepper::new(g, h)).collect();
    let ensemble = InitialEnsemble::new(rho0);
    let n_noise = g.jumps().len();
    let n_fine = n_coarse << levels;

    let m = run_chunks(cfg.n_traj, g.dim(), levels, |idx| {
        let mut rng = split_seed(seed, idx);
        let psi0 = ensemble.sample(&mut rng);
        let mut fine = vec![0.0; n_fine * n_noise];
        draw_increments(&mut rng, dts[levels], &mut fine);
        let mut finals = Vec::with_capacity(levels + 1);
        for (lev, stepper) in steppers.iter().enumerate() {
            let block = 1usize << (levels - lev);
            let mut psi = psi0.clone();
            let mut dw = vec![0.0; n_noise];
            for s in 0..n_fine / block {
                dw.iter_mut().for_each(|w| *w = 0.0);
                for f in s * block..(s + 1) * block {
                    for (j, w) in dw.iter_mut().enumerate() {
                        *w += fine[f * n_noise + j];
                    }
                }
                psi = stepper.step(&psi, &dw);
            }
            finals.push(&psi * psi.adjoint());
        }
        finals.windows(2).map(|w| &w[0] - &w[1]).collect()
    });
    let est = m.finish(Vec::new());
    Ok(RefinementDifferences { dts, diffs: est.mean, std_err: est.std_err })
}
