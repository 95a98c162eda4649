//! Scenario validation and the six tasks.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde_json::{json, Value};

use super::scenario::{DaviesQubit, Format, MethodName, Model, ObservableSpec, Scenario, StateSpec, Task, TaskOptions};
use super::{CliError, ErrorKind, RunSettings};
use crate::davies::{build_davies_with, dissipator_commutation_defect, ergodicity_check, gibbs_residual, DaviesOptions};
use crate::error::Result;
use crate::models::{dephasing_feasibility, spin_boson_overlap, BlochBoltzmannState, CloudNorm};
use crate::operators::standard::{sigma_1, sigma_2, sigma_3};
use crate::operators::{is_completely_positive, DensityMatrix, MatrixJson, Operator, Superoperator};
use crate::propagation::{evolve_action, evolve_dyson, evolve_rk4, evolve_schedule_rk4, validate_grid, Sampling, Schedule, MAX_DYSON_ORDER};
use crate::thermo::first_law_ledger;
use crate::unraveling::{ensemble_density, TrajectoryConfig};

const DEFAULT_STEP: f64 = 1e-3;
const DEFAULT_DT: f64 = 1e-3;
const DEFAULT_N_TRAJ: usize = 1000;
const DEFAULT_CP_TOL: f64 = 1e-10;
const DEFAULT_QUAD_TOL: f64 = 1e-10;
/// Beyond this Hilbert dimension the exact method applies exp(tL) in operator form.
const DENSE_EXP_MAX_DIM: usize = 12;

fn num(x: f64) -> String {
    // 17 significant digits; negative zero printed as zero
    format!("{:.16e}", x + 0.0)
}

#[derive(Clone, Debug)]
pub enum Observable {
    Linear(Operator),
    /// `|ρ_12|`: modulus of the level-1/level-2 coherence.
    CoherenceModulus,
}

impl Observable {
    pub fn eval(&self, rho: &Operator) -> f64 {
        match self {
            Observable::Linear(a) => (a.matrix() * rho.matrix()).trace().re,
            Observable::CoherenceModulus => rho.get(0, 1).norm(),
        }
    }

    fn named(name: &str, d: usize) -> Option<Self> {
        let qubit = |op: Operator| (d == 2).then_some(Observable::Linear(op));
        match name {
            "sigma1" => qubit(sigma_1()),
            "sigma2" => qubit(sigma_2()),
            "sigma3" => qubit(sigma_3()),
            "n" => Some(Observable::Linear(Operator::from_real_diagonal(&(0..d).map(|k| k as f64).collect::<Vec<_>>()))),
            "coherence_12" => Some(Observable::CoherenceModulus),
            _ => {
                let k: usize = name.strip_prefix('p')?.parse().ok()?;
                (1..=d).contains(&k).then(|| Observable::Linear(Operator::unit(d, k - 1, k - 1)))
            }
        }
    }
}

/// A scenario checked against its model and ready to run.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub task: Task,
    pub preset: Option<String>,
    pub model: Option<Model>,
    pub grid: Vec<f64>,
    pub observables: Vec<(String, Observable)>,
    pub rho0: Option<DensityMatrix>,
    pub superoperator: Option<Superoperator>,
    pub output_path: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub options: TaskOptions,
}

/// The artifact body plus an optional contract violation found while producing it.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub body: String,
    pub summary: String,
    pub violation: Option<CliError>,
}

fn has_generator(m: &Model) -> bool {
    matches!(m, Model::TwoLevel { .. } | Model::Oscillator(_) | Model::KickRing(_) | Model::DaviesQubit(_))
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::new(ErrorKind::Validation, msg)
}

fn positive(name: &str, x: Option<f64>, default: f64) -> std::result::Result<f64, CliError> {
    let v = x.unwrap_or(default);
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("option {name} must be > 0, got {v}")));
    }
    Ok(v)
}

pub fn prepare(s: &Scenario, settings: &RunSettings) -> std::result::Result<Prepared, CliError> {
    let model = match &s.model {
        Some(r) => Some(
            Model::from_preset(r)
                .map_err(|u| {
                    CliError::new(ErrorKind::UnknownPreset, format!("unknown {} preset '{}'", u.kind, u.name))
                        .with("preset", u.name)
                })??,
        ),
        None => None,
    };
    let task = s.task;
    let need_model = |ok: fn(&Model) -> bool, what: &str| -> std::result::Result<(), CliError> {
        match &model {
            Some(m) if ok(m) => Ok(()),
            Some(_) => Err(invalid(format!("task {} needs {what}", task.name()))),
            None => Err(invalid(format!("task {} needs a model", task.name()))),
        }
    };
    let mut superoperator = None;
    let needs_grid = match task {
        Task::Evolve => {
            need_model(|m| !matches!(m, Model::SpinBoson(_)), "a dynamical model")?;
            true
        }
        Task::Unravel => {
            need_model(|m| has_generator(m) && !m.is_driven(), "a time-independent GKLS model")?;
            true
        }
        Task::ThermoLedger => {
            need_model(has_generator, "a GKLS model")?;
            true
        }
        Task::DaviesBuild => {
            need_model(|m| matches!(m, Model::DaviesQubit(_)), "the davies-qubit preset")?;
            false
        }
        Task::SpinbosonReport => {
            need_model(|m| matches!(m, Model::SpinBoson(_)), "the spin-boson preset")?;
            false
        }
        Task::CpCheck => match (&model, &s.superoperator) {
            (None, Some(m)) => {
                superoperator = Some(m.to_superoperator()?);
                false
            }
            (Some(_), None) => {
                need_model(|m| has_generator(m) && !m.is_driven(), "a time-independent GKLS model")?;
                true
            }
            _ => return Err(invalid("cp-check needs exactly one of model and superoperator")),
        },
    };
    if s.superoperator.is_some() && task != Task::CpCheck {
        return Err(invalid("superoperator is only used by cp-check"));
    }

    let grid = match (&s.grid, needs_grid) {
        (Some(g), _) => {
            let t = g.times();
            validate_grid(&t)?;
            if t[0] < 0.0 {
                return Err(invalid("grid times must be >= 0; the initial state is taken at t = 0"));
            }
            t
        }
        (None, true) => return Err(invalid(format!("task {} needs a grid", task.name()))),
        (None, false) => Vec::new(),
    };

    let d = model.as_ref().map_or(0, Model::dim);
    let mut observables = Vec::new();
    if task == Task::Evolve {
        let specs: Vec<ObservableSpec> = if s.observables.is_empty() {
            (1..=d.min(8)).map(|k| ObservableSpec::Named(format!("p{k}"))).collect()
        } else {
            s.observables.clone()
        };
        for spec in specs {
            match spec {
                ObservableSpec::Named(name) => {
                    let obs = Observable::named(&name, d)
                        .ok_or_else(|| invalid(format!("unknown observable '{name}' for dimension {d}")))?;
                    observables.push((name, obs));
                }
                ObservableSpec::Matrix { name, matrix } => {
                    let op = matrix.to_operator()?;
                    if op.dim() != d {
                        return Err(invalid(format!("observable '{name}' has dimension {}, model has {d}", op.dim())));
                    }
                    op.require_hermitian(&format!("observable '{name}'"))?;
                    observables.push((name, Observable::Linear(op)));
                }
            }
        }
    } else if !s.observables.is_empty() {
        return Err(invalid("observables are only used by evolve"));
    }

    let rho0 = match task {
        Task::Evolve | Task::Unravel | Task::ThermoLedger => {
            let spec = s.initial_state.clone().unwrap_or(StateSpec::Excited);
            Some(spec.build(d).map_err(|e| invalid(format!("initial state: {e}")))?)
        }
        _ => None,
    };

    let o = &s.options;
    positive("step", o.step, DEFAULT_STEP)?;
    positive("dt", o.dt, DEFAULT_DT)?;
    positive("tol", o.tol, DEFAULT_CP_TOL)?;
    positive("quad_tol", o.quad_tol, DEFAULT_QUAD_TOL)?;
    if o.n_traj == Some(0) {
        return Err(invalid("option n_traj must be >= 1"));
    }
    if let Some(order) = o.order {
        if order > MAX_DYSON_ORDER {
            return Err(invalid(format!("option order must be <= {MAX_DYSON_ORDER}")));
        }
    }
    if let (Some(m), Some(method)) = (&model, o.method) {
        if method != MethodName::Rk4 && (m.is_driven() || matches!(m, Model::BlochBoltzmann(_))) {
            return Err(invalid("driven and Bloch-Boltzmann models are integrated with method rk4"));
        }
    }

    let format = s.output.format;
    let path = PathBuf::from(s.output.path.clone().unwrap_or_else(|| format!("{}.{}", task.name(), format.extension())));
    let output_path = match &settings.out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path,
    };

    Ok(Prepared {
        task,
        preset: s.model.as_ref().map(|r| r.preset.clone()),
        model,
        grid,
        observables,
        rho0,
        superoperator,
        output_path,
        format,
        seed: settings.seed.or(s.seed).unwrap_or(0),
        options: s.options.clone(),
    })
}

impl Prepared {
    fn model(&self) -> &Model {
        self.model.as_ref().expect("validated")
    }

    fn rho0(&self) -> &DensityMatrix {
        self.rho0.as_ref().expect("validated")
    }

    fn step(&self) -> f64 {
        self.options.step.unwrap_or(DEFAULT_STEP)
    }

    pub fn execute(&self) -> std::result::Result<Outcome, CliError> {
        match self.task {
            Task::Evolve => self.evolve(),
            Task::Unravel => self.unravel(),
            Task::DaviesBuild => self.davies_build(),
            Task::CpCheck => self.cp_check(),
            Task::ThermoLedger => self.thermo_ledger(),
            Task::SpinbosonReport => self.spinboson_report(),
        }
    }

    /// States at each grid time, starting from `rho0` at `t = 0`.
    fn trajectory(&self) -> Result<Vec<Operator>> {
        let model = self.model();
        let rho0 = self.rho0();
        if let Model::BlochBoltzmann(bb) = model {
            return self.bloch_boltzmann_trajectory(bb);
        }
        if let Model::DaviesQubit(q @ DaviesQubit { drive: Some(_), .. }) = model {
            let q = q.clone();
            let mut times = self.grid.clone();
            let prepend = times[0] > 0.0;
            if prepend {
                times.insert(0, 0.0);
            }
            let schedule = Schedule::new(move |t| q.generator_at(t), times, Sampling::Continuous)?;
            let mut states = evolve_schedule_rk4(&schedule, rho0, self.step())?;
            if prepend {
                states.remove(0);
            }
            return Ok(states.into_iter().map(DensityMatrix::into_operator).collect());
        }
        let g = model.generator()?;
        let l = g.superoperator();
        let method = self.options.method.unwrap_or(MethodName::Exact);
        let mut out = Vec::with_capacity(self.grid.len());
        let mut cache: HashMap<u64, Superoperator> = HashMap::new();
        let mut state = rho0.clone();
        let mut t_prev = 0.0;
        for &t in &self.grid {
            let dt = t - t_prev;
            state = match method {
                MethodName::Exact if g.dim() > DENSE_EXP_MAX_DIM => evolve_action(&g, dt, &state)?,
                MethodName::Exact => {
                    let p = cache.entry(dt.to_bits()).or_insert_with(|| l.exp(dt));
                    DensityMatrix::new_unchecked(p.apply(state.op()))
                }
                MethodName::Rk4 if dt > 0.0 => evolve_rk4(&l, dt, &state, self.step())?,
                MethodName::Rk4 => state,
                MethodName::Dyson => evolve_dyson(&g, t, rho0, self.options.order.unwrap_or(6))?,
            };
            out.push(state.op().clone());
            t_prev = t;
        }
        Ok(out)
    }

    fn bloch_boltzmann_trajectory(&self, bb: &crate::models::BlochBoltzmannDiscrete) -> Result<Vec<Operator>> {
        let nv = bb.velocities().len();
        let dv = bb.dv();
        let block = self.rho0().op().scale_real(1.0 / (nv as f64 * dv));
        let mut state = BlochBoltzmannState { blocks: vec![block; nv] };
        let reduce = |s: &BlochBoltzmannState| {
            s.blocks.iter().skip(1).fold(s.blocks[0].clone(), |acc, b| &acc + b).scale_real(dv)
        };
        let mut out = Vec::with_capacity(self.grid.len());
        let mut t_prev = 0.0;
        for &t in &self.grid {
            let span = t - t_prev;
            if span > 0.0 {
                let n = (span / self.step() - 1e-9).ceil().max(1.0) as usize;
                let h = span / n as f64;
                for _ in 0..n {
                    state = bb.step(&state, h)?;
                }
            }
            out.push(reduce(&state));
            t_prev = t;
        }
        Ok(out)
    }

    fn evolve(&self) -> std::result::Result<Outcome, CliError> {
        let states = self.trajectory()?;
        let mut columns: Vec<(String, Vec<f64>)> = self
            .observables
            .iter()
            .map(|(name, obs)| (name.clone(), states.iter().map(|r| obs.eval(r)).collect()))
            .collect();
        if matches!(self.model(), Model::BlochBoltzmann(_)) {
            columns.push(("total_trace".into(), states.iter().map(|r| r.trace().re).collect()));
        }
        let body = match self.format {
            Format::Csv => {
                let mut out = String::from("t,observable_name,value\n");
                for (k, t) in self.grid.iter().enumerate() {
                    for (name, values) in &columns {
                        let _ = writeln!(out, "{},{name},{}", num(*t), num(values[k]));
                    }
                }
                out
            }
            Format::Json => json_body(json!({
                "task": "evolve",
                "model": self.preset,
                "times": self.grid,
                "observables": columns.iter().map(|(n, v)| json!({"name": n, "values": v})).collect::<Vec<_>>(),
            })),
        };
        let summary = format!("evolve: {} time points, {} observables", self.grid.len(), columns.len());
        Ok(Outcome { body, summary, violation: None })
    }

    fn unravel(&self) -> std::result::Result<Outcome, CliError> {
        let g = self.model().generator()?;
        let cfg = TrajectoryConfig::new(
            self.options.dt.unwrap_or(DEFAULT_DT),
            self.options.n_traj.unwrap_or(DEFAULT_N_TRAJ),
            self.seed,
        )?;
        let est = ensemble_density(&g, self.rho0(), &self.grid, &cfg)?;
        let d = g.dim();
        let body = match self.format {
            Format::Csv => {
                let mut out = String::from("t");
                for i in 1..=d {
                    for j in 1..=d {
                        let _ = write!(out, ",re_{i}_{j},im_{i}_{j},se_{i}_{j}");
                    }
                }
                out.push('\n');
                for (k, t) in est.times.iter().enumerate() {
                    out.push_str(&num(*t));
                    for i in 0..d {
                        for j in 0..d {
                            let z = est.mean[k][(i, j)];
                            let _ = write!(out, ",{},{},{}", num(z.re), num(z.im), num(est.std_err[k][(i, j)]));
                        }
                    }
                    out.push('\n');
                }
                out
            }
            Format::Json => json_body(json!({
                "task": "unravel",
                "model": self.preset,
                "seed": self.seed,
                "dt": cfg.dt,
                "n_traj": cfg.n_traj,
                "times": est.times,
                "mean": est.mean.iter().map(MatrixJson::from_matrix).collect::<Vec<_>>(),
                "std_err": est.std_err.iter().map(|m| (0..d).map(|i| (0..d).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            })),
        };
        let summary = format!("unravel: {} trajectories, dt = {}, seed = {}", cfg.n_traj, cfg.dt, self.seed);
        Ok(Outcome { body, summary, violation: None })
    }

    fn davies_build(&self) -> std::result::Result<Outcome, CliError> {
        let Model::DaviesQubit(q) = self.model() else { unreachable!("validated") };
        let m = build_davies_with(&q.hamiltonian_at(0.0), &[sigma_1()], &q.spectral, q.lambda, &DaviesOptions::default())?;
        let erg = ergodicity_check(&m.decomposition);
        let residual = gibbs_residual(&m.generator, q.beta)?;
        let commutation = dissipator_commutation_defect(&m.generator);
        let body = match self.format {
            Format::Csv => {
                let mut out = String::from("omega,rate\n");
                for j in &m.jumps {
                    let _ = writeln!(out, "{},{}", num(j.omega), num(j.rate));
                }
                out
            }
            Format::Json => json_body(json!({
                "task": "davies-build",
                "beta": q.beta,
                "bohr_frequencies": m.decomposition.frequencies(),
                "hamiltonian": MatrixJson::from(m.generator.hamiltonian()),
                "jumps": m.jumps.iter().map(|j| json!({
                    "omega": j.omega,
                    "rate": j.rate,
                    "operator": MatrixJson::from(&j.operator),
                })).collect::<Vec<_>>(),
                "superoperator": MatrixJson::from(&m.generator.superoperator()),
                "ergodic": erg.ergodic,
                "commutant_dim": erg.commutant_dim,
                "gibbs_residual": residual,
                "commutation_defect": commutation,
            })),
        };
        let summary = format!(
            "davies-build: {} jumps, ergodic = {}, Gibbs residual = {residual:e}",
            m.jumps.len(),
            erg.ergodic
        );
        Ok(Outcome { body, summary, violation: None })
    }

    fn cp_check(&self) -> std::result::Result<Outcome, CliError> {
        let tol = self.options.tol.unwrap_or(DEFAULT_CP_TOL);
        let maps: Vec<(Option<f64>, Superoperator)> = match &self.superoperator {
            Some(s) => vec![(None, s.clone())],
            None => {
                let l = self.model().generator()?.superoperator();
                self.grid.iter().map(|&t| (Some(t), l.exp(t))).collect()
            }
        };
        let mut rows = Vec::new();
        let mut worst: Option<(Option<f64>, f64)> = None;
        for (t, s) in &maps {
            let r = is_completely_positive(s, tol);
            let tp = s.trace_preservation_defect();
            if !r.completely_positive && worst.is_none_or(|(_, m)| r.min_eigenvalue < m) {
                worst = Some((*t, r.min_eigenvalue));
            }
            rows.push((*t, r, tp));
        }
        let body = match self.format {
            Format::Csv => {
                let mut out = String::from("t,min_eigenvalue,choi_norm,completely_positive,trace_preservation_defect\n");
                for (t, r, tp) in &rows {
                    let t = t.map_or(String::new(), num);
                    let _ = writeln!(
                        out,
                        "{t},{},{},{},{}",
                        num(r.min_eigenvalue),
                        num(r.choi_norm),
                        r.completely_positive,
                        num(*tp)
                    );
                }
                out
            }
            Format::Json => json_body(json!({
                "task": "cp-check",
                "tolerance": tol,
                "completely_positive": worst.is_none(),
                "checks": rows.iter().map(|(t, r, tp)| json!({
                    "t": t,
                    "completely_positive": r.completely_positive,
                    "min_eigenvalue": r.min_eigenvalue,
                    "choi_norm": r.choi_norm,
                    "trace_preservation_defect": tp,
                })).collect::<Vec<_>>(),
            })),
        };
        let min = rows.iter().map(|(_, r, _)| r.min_eigenvalue).fold(f64::INFINITY, f64::min);
        let summary = format!("cp-check: {} maps, smallest Choi eigenvalue {min:e}", rows.len());
        let violation = worst.map(|(t, m)| {
            let e = CliError::new(ErrorKind::Contract, format!("map is not completely positive (Choi eigenvalue {m:e})"))
                .with("min_eigenvalue", m);
            match t {
                Some(t) => e.with("t", t),
                None => e,
            }
        });
        Ok(Outcome { body, summary, violation })
    }

    fn thermo_ledger(&self) -> std::result::Result<Outcome, CliError> {
        let model = self.model();
        let mut times = self.grid.clone();
        if times[0] > 0.0 {
            times.insert(0, 0.0);
        }
        let schedule = match model {
            Model::DaviesQubit(q) => {
                let q = q.clone();
                Schedule::new(move |t| q.generator_at(t), times, Sampling::Continuous)?
            }
            m => {
                let g = m.generator()?;
                Schedule::new(move |_| Ok(g.clone()), times, Sampling::Continuous)?
            }
        };
        let ledger = first_law_ledger(&schedule, self.rho0(), self.step(), model.beta())?;
        let body = match self.format {
            Format::Csv => ledger.to_csv(),
            Format::Json => json_body(json!({
                "task": "thermo-ledger",
                "beta": model.beta(),
                "t": ledger.t,
                "E": ledger.energy,
                "W": ledger.work,
                "Q": ledger.heat,
                "S": ledger.entropy,
                "sigma": ledger.sigma,
                "closure_defect": ledger.closure_defect,
            })),
        };
        let summary = format!("thermo-ledger: max closure defect {:e}", ledger.max_closure_defect());
        Ok(Outcome { body, summary, violation: None })
    }

    fn spinboson_report(&self) -> std::result::Result<Outcome, CliError> {
        let Model::SpinBoson(c) = self.model() else { unreachable!("validated") };
        let overlap = spin_boson_overlap(c, self.options.quad_tol.unwrap_or(DEFAULT_QUAD_TOL))?;
        let feas = dephasing_feasibility(c)?;
        let body = match self.format {
            Format::Csv => {
                let norm = match overlap.norm_g_sq {
                    CloudNorm::Finite(x) => num(x),
                    CloudNorm::Divergent => "divergent".into(),
                };
                let verdict = serde_json::to_value(feas.verdict).unwrap_or(Value::Null);
                format!(
                    "quantity,value\nlambda,{}\ns,{}\nomega_c,{}\nnorm_g_sq,{norm}\noverlap,{}\nquad_error,{}\nzero_frequency_rate,{}\nverdict,{}\nexponent_inconsistent,{}\n",
                    num(c.lambda),
                    num(c.s),
                    num(c.omega_c),
                    num(overlap.overlap),
                    num(overlap.quad_error),
                    num(feas.zero_frequency_rate),
                    verdict.as_str().unwrap_or_default(),
                    feas.exponent_inconsistent
                )
            }
            Format::Json => json_body(json!({
                "task": "spinboson-report",
                "lambda": c.lambda,
                "s": c.s,
                "omega_c": c.omega_c,
                "overlap": overlap,
                "feasibility": feas,
            })),
        };
        let summary = format!("spinboson-report: {:?}", feas.verdict);
        Ok(Outcome { body, summary, violation: None })
    }
}

fn json_body(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}
