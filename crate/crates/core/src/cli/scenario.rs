//! Scenario files: JSON schema, model presets and their parameters.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::davies::{build_davies, SpectralFunction};
use crate::error::{Error, Result};
use crate::gkls::GklsGenerator;
use crate::linalg::{c, CMat};
use crate::models::{
    kick_decoherence_generator, oscillator_generator, two_level_generator, BlochBoltzmannDiscrete, KickModelParams,
    OscillatorParams, SpinBosonCoupling, TwoLevelParams,
};
use crate::operators::MatrixJson;
use crate::operators::standard::{sigma_1, sigma_3, sigma_minus, sigma_plus};
use crate::operators::{DensityMatrix, Operator};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub model: Option<PresetRef>,
    pub task: Task,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub initial_state: Option<StateSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub options: TaskOptions,
    /// Input map for `cp-check`, in the dense matrix format.
    #[serde(default)]
    pub superoperator: Option<MatrixJson>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetRef {
    pub preset: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Evolve,
    Unravel,
    DaviesBuild,
    CpCheck,
    ThermoLedger,
    SpinbosonReport,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Evolve => "evolve",
            Task::Unravel => "unravel",
            Task::DaviesBuild => "davies-build",
            Task::CpCheck => "cp-check",
            Task::ThermoLedger => "thermo-ledger",
            Task::SpinbosonReport => "spinboson-report",
        }
    }
}

/// Either explicit time points or `points` equally spaced values from `start` to `stop`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl GridSpec {
    pub fn times(&self) -> Vec<f64> {
        match *self {
            GridSpec::Points(ref p) => p.clone(),
            GridSpec::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![start],
                n => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Named(String),
    Matrix { name: String, matrix: MatrixJson },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateSpec {
    /// Level 1 (index 0).
    Ground,
    /// Level 2 (index 1).
    Excited,
    /// `(|1⟩ + |2⟩)/√2`
    Plus,
    MaximallyMixed,
    /// Basis state, 0-based.
    Basis(usize),
    /// Truncated coherent state with amplitude `[re, im]`.
    Coherent([f64; 2]),
    /// Truncated thermal state with the given mean number.
    Thermal(f64),
    Matrix(MatrixJson),
}

impl StateSpec {
    pub fn build(&self, d: usize) -> Result<DensityMatrix> {
        let need = |k: usize| -> Result<()> {
            if k >= d {
                return Err(Error::InvalidParameter(format!("basis state {k} does not exist in dimension {d}")));
            }
            Ok(())
        };
        match self {
            StateSpec::Ground => Ok(DensityMatrix::basis(d, 0)),
            StateSpec::Excited => need(1).map(|_| DensityMatrix::basis(d, 1)),
            StateSpec::Plus => {
                need(1)?;
                let mut psi = crate::linalg::CVec::zeros(d);
                psi[0] = c(std::f64::consts::FRAC_1_SQRT_2);
                psi[1] = c(std::f64::consts::FRAC_1_SQRT_2);
                DensityMatrix::pure(&psi)
            }
            StateSpec::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(d)),
            StateSpec::Basis(k) => need(*k).map(|_| DensityMatrix::basis(d, *k)),
            StateSpec::Coherent([re, im]) => crate::models::coherent_state(d, Complex64::new(*re, *im)),
            StateSpec::Thermal(nbar) => crate::models::thermal_state(d, *nbar),
            StateSpec::Matrix(m) => {
                let op = m.to_operator()?;
                if op.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: op.dim() });
                }
                DensityMatrix::new(op)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Relative paths are resolved against the output directory.
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Exact,
    Rk4,
    Dyson,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskOptions {
    #[serde(default)]
    pub method: Option<MethodName>,
    /// RK4 step.
    #[serde(default)]
    pub step: Option<f64>,
    /// Dyson truncation order.
    #[serde(default)]
    pub order: Option<usize>,
    /// Trajectory time step.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub n_traj: Option<usize>,
    /// Complete-positivity tolerance, relative to the Choi norm.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub quad_tol: Option<f64>,
}

/// One parameter of a preset: name, default, meaning.
pub struct ParamDoc(pub &'static str, pub &'static str, pub &'static str);

pub struct PresetInfo {
    pub kind: &'static str,
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamDoc],
}

/// Registry, alphabetized by kind and then by name.
pub const PRESETS: &[PresetInfo] = &[
    PresetInfo {
        kind: "model",
        name: "bloch-boltzmann-discrete",
        summary: "two-level internal state on a velocity grid with decay/excitation kicks",
        params: &[
            ParamDoc("velocities", "[-1,0,1]", "velocity grid"),
            ParamDoc("dv", "1", "velocity cell width"),
            ParamDoc("omega", "1", "internal level splitting"),
            ParamDoc("doppler", "0", "splitting shift per unit velocity"),
            ParamDoc("gamma_down", "1", "decay rate"),
            ParamDoc("gamma_up", "0.5", "excitation rate"),
            ParamDoc("velocity_temperature", "1", "width of the Maxwellian recoil distribution"),
            ParamDoc("basis", "-", "optional list of matrices S_a (replaces the built-in model)"),
            ParamDoc("drift", "-", "drift[i][a], required with basis"),
            ParamDoc("kernel", "-", "kernel[i][j] as matrices K_ab(v_i, v_j), required with basis"),
        ],
    },
    PresetInfo {
        kind: "model",
        name: "davies-qubit",
        summary: "qubit H = eps(t) sigma3/2 coupled through sigma1 to a thermal bath",
        params: &[
            ParamDoc("epsilon", "1", "level splitting"),
            ParamDoc("lambda", "0.5", "coupling constant"),
            ParamDoc("beta", "1", "inverse bath temperature"),
            ParamDoc("spectral", "ohmic-cubed-exp", "spectral preset {preset, params}; omega >= 0 branch, KMS-extended"),
            ParamDoc("drive", "-", "optional {amplitude, frequency}: eps(t) = epsilon (1 + amplitude sin(frequency t))"),
        ],
    },
    PresetInfo {
        kind: "model",
        name: "kick-ring",
        summary: "particle on a periodic lattice with random momentum kicks",
        params: &[
            ParamDoc("lattice_size", "8", "number of sites"),
            ParamDoc("kick_rates", "{\"1\":0.5,\"-1\":0.5}", "rate per momentum-transfer index"),
            ParamDoc("mass", "-", "optional mass for a hopping kinetic term"),
            ParamDoc("potential", "-", "optional on-site potential"),
        ],
    },
    PresetInfo {
        kind: "model",
        name: "oscillator",
        summary: "damped harmonic oscillator, truncated Fock space",
        params: &[
            ParamDoc("omega", "1", "frequency"),
            ParamDoc("gamma_down", "1", "emission rate"),
            ParamDoc("gamma_up", "0.3", "absorption rate (< gamma_down)"),
            ParamDoc("n_trunc", "30", "Fock space dimension"),
        ],
    },
    PresetInfo {
        kind: "model",
        name: "spin-boson",
        summary: "pure-dephasing spin-boson coupling with |f|^2 = w^s exp(-2w/omega_c)",
        params: &[
            ParamDoc("lambda", "0.5", "coupling constant"),
            ParamDoc("s", "2", "spectral exponent"),
            ParamDoc("omega_c", "1", "cutoff frequency"),
        ],
    },
    PresetInfo {
        kind: "model",
        name: "two-level",
        summary: "two-level atom with decay, excitation and dephasing",
        params: &[
            ParamDoc("omega", "1", "level splitting"),
            ParamDoc("gamma_down", "1", "decay rate"),
            ParamDoc("gamma_up", "0", "excitation rate (exclusive with temperature)"),
            ParamDoc("delta", "0", "dephasing rate, jump sqrt(delta) sigma3"),
            ParamDoc("temperature", "-", "sets gamma_up = gamma_down exp(-omega/temperature)"),
        ],
    },
    PresetInfo {
        kind: "spectral",
        name: "flat",
        summary: "constant spectral density",
        params: &[ParamDoc("value", "1", "density")],
    },
    PresetInfo {
        kind: "spectral",
        name: "lorentzian",
        summary: "amplitude 2 tau / (1 + w^2 tau^2)",
        params: &[ParamDoc("amplitude", "1", "overall scale"), ParamDoc("tau", "1", "correlation time")],
    },
    PresetInfo {
        kind: "spectral",
        name: "ohmic-cubed-exp",
        summary: "amplitude w^3 exp(-w/omega_c) for w >= 0",
        params: &[ParamDoc("amplitude", "1", "overall scale"), ParamDoc("omega_c", "1", "cutoff frequency")],
    },
];

pub fn preset_listing() -> String {
    let mut out = String::new();
    for p in PRESETS {
        out.push_str(&format!("{:<9} {:<25} {}\n", p.kind, p.name, p.summary));
        for ParamDoc(name, default, doc) in p.params {
            out.push_str(&format!("{:<9} {:<25}   {name} = {default}: {doc}\n", "", ""));
        }
    }
    out
}

/// A preset name that is not in the registry.
#[derive(Clone, Debug, PartialEq)]
pub struct UnknownPreset {
    pub kind: &'static str,
    pub name: String,
}

fn parse_params<T: DeserializeOwned>(preset: &str, params: &Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(params.clone()))
        .map_err(|e| Error::InvalidParameter(format!("parameters of preset '{preset}': {e}")))
}

fn d1() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoLevelSpec {
    #[serde(default = "d1")]
    omega: f64,
    #[serde(default = "d1")]
    gamma_down: f64,
    #[serde(default)]
    gamma_up: Option<f64>,
    #[serde(default)]
    delta: f64,
    #[serde(default)]
    temperature: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OscillatorSpec {
    #[serde(default = "d1")]
    omega: f64,
    #[serde(default = "d1")]
    gamma_down: f64,
    #[serde(default = "default_gamma_up")]
    gamma_up: f64,
    #[serde(default = "default_n_trunc")]
    n_trunc: usize,
}

fn default_gamma_up() -> f64 {
    0.3
}

fn default_n_trunc() -> usize {
    30
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KickRingSpec {
    #[serde(default = "default_lattice")]
    lattice_size: usize,
    #[serde(default = "default_kicks")]
    kick_rates: BTreeMap<i64, f64>,
    #[serde(default)]
    mass: Option<f64>,
    #[serde(default)]
    potential: Option<Vec<f64>>,
}

fn default_lattice() -> usize {
    8
}

fn default_kicks() -> BTreeMap<i64, f64> {
    BTreeMap::from([(-1, 0.5), (1, 0.5)])
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    pub amplitude: f64,
    pub frequency: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DaviesQubitSpec {
    #[serde(default = "d1")]
    epsilon: f64,
    #[serde(default = "default_lambda")]
    lambda: f64,
    #[serde(default = "d1")]
    beta: f64,
    #[serde(default)]
    spectral: Option<PresetRef>,
    #[serde(default)]
    drive: Option<Drive>,
}

fn default_lambda() -> f64 {
    0.5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpinBosonSpec {
    #[serde(default = "default_lambda")]
    lambda: f64,
    #[serde(default = "default_s")]
    s: f64,
    #[serde(default = "d1")]
    omega_c: f64,
}

fn default_s() -> f64 {
    2.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlochBoltzmannSpec {
    #[serde(default = "default_velocities")]
    velocities: Vec<f64>,
    #[serde(default = "d1")]
    dv: f64,
    #[serde(default = "d1")]
    omega: f64,
    #[serde(default)]
    doppler: f64,
    #[serde(default = "d1")]
    gamma_down: f64,
    #[serde(default = "default_bb_up")]
    gamma_up: f64,
    #[serde(default = "d1")]
    velocity_temperature: f64,
    #[serde(default)]
    basis: Option<Vec<MatrixJson>>,
    #[serde(default)]
    drift: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    kernel: Option<Vec<Vec<MatrixJson>>>,
}

fn default_velocities() -> Vec<f64> {
    vec![-1.0, 0.0, 1.0]
}

fn default_bb_up() -> f64 {
    0.5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LorentzianSpec {
    #[serde(default = "d1")]
    amplitude: f64,
    #[serde(default = "d1")]
    tau: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OhmicSpec {
    #[serde(default = "d1")]
    amplitude: f64,
    #[serde(default = "d1")]
    omega_c: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatSpec {
    #[serde(default = "d1")]
    value: f64,
}

/// Spectral preset on the whole axis, without a temperature.
pub fn build_spectral(r: &PresetRef) -> std::result::Result<Result<SpectralFunction>, UnknownPreset> {
    Ok(match r.preset.as_str() {
        "lorentzian" => parse_params::<LorentzianSpec>("lorentzian", &r.params)
            .and_then(|p| SpectralFunction::lorentzian(p.amplitude, p.tau)),
        "ohmic-cubed-exp" => parse_params::<OhmicSpec>("ohmic-cubed-exp", &r.params)
            .and_then(|p| SpectralFunction::ohmic_cubed_exp(p.amplitude, p.omega_c, None)),
        "flat" => parse_params::<FlatSpec>("flat", &r.params).and_then(|p| SpectralFunction::flat(p.value)),
        other => return Err(UnknownPreset { kind: "spectral", name: other.to_string() }),
    })
}

#[derive(Clone, Debug)]
pub struct DaviesQubit {
    pub epsilon: f64,
    pub lambda: f64,
    pub beta: f64,
    pub spectral: SpectralFunction,
    pub drive: Option<Drive>,
}

impl DaviesQubit {
    pub fn epsilon_at(&self, t: f64) -> f64 {
        match self.drive {
            Some(d) => self.epsilon * (1.0 + d.amplitude * (d.frequency * t).sin()),
            None => self.epsilon,
        }
    }

    pub fn hamiltonian_at(&self, t: f64) -> Operator {
        sigma_3().scale_real(0.5 * self.epsilon_at(t))
    }

    pub fn generator_at(&self, t: f64) -> Result<GklsGenerator> {
        build_davies(&self.hamiltonian_at(t), &[sigma_1()], &self.spectral, self.lambda)
    }
}

#[derive(Clone, Debug)]
pub enum Model {
    TwoLevel { params: TwoLevelParams, beta: Option<f64> },
    Oscillator(OscillatorParams),
    KickRing(KickModelParams),
    DaviesQubit(DaviesQubit),
    BlochBoltzmann(BlochBoltzmannDiscrete),
    SpinBoson(SpinBosonCoupling),
}

impl Model {
    pub fn from_preset(r: &PresetRef) -> std::result::Result<Result<Model>, UnknownPreset> {
        let p = &r.params;
        Ok(match r.preset.as_str() {
            "two-level" => parse_params::<TwoLevelSpec>("two-level", p).and_then(|s| {
                let (params, beta) = match (s.gamma_up, s.temperature) {
                    (Some(_), Some(_)) => {
                        return Err(Error::InvalidParameter("give either gamma_up or temperature, not both".into()))
                    }
                    (_, Some(temp)) => (TwoLevelParams::thermal(s.omega, s.gamma_down, temp, s.delta)?, Some(1.0 / temp)),
                    (up, None) => (TwoLevelParams::new(s.omega, s.gamma_down, up.unwrap_or(0.0), s.delta)?, None),
                };
                Ok(Model::TwoLevel { params, beta })
            }),
            "oscillator" => parse_params::<OscillatorSpec>("oscillator", p).and_then(|s| {
                Ok(Model::Oscillator(OscillatorParams::new(s.omega, s.gamma_down, s.gamma_up, s.n_trunc)?))
            }),
            "kick-ring" => parse_params::<KickRingSpec>("kick-ring", p).and_then(|s| {
                let params = KickModelParams { lattice_size: s.lattice_size, kick_rates: s.kick_rates, mass: s.mass, potential: s.potential };
                params.validate()?;
                Ok(Model::KickRing(params))
            }),
            "davies-qubit" => {
                let spec = match parse_params::<DaviesQubitSpec>("davies-qubit", p) {
                    Ok(s) => s,
                    Err(e) => return Ok(Err(e)),
                };
                let sref = spec.spectral.clone().unwrap_or(PresetRef {
                    preset: "ohmic-cubed-exp".into(),
                    params: Map::from_iter([("omega_c".to_string(), Value::from(5.0))]),
                });
                let base = build_spectral(&sref)?;
                build_davies_qubit(spec, base)
            }
            "bloch-boltzmann-discrete" => {
                parse_params::<BlochBoltzmannSpec>("bloch-boltzmann-discrete", p).and_then(build_bloch_boltzmann)
            }
            "spin-boson" => parse_params::<SpinBosonSpec>("spin-boson", p)
                .and_then(|s| Ok(Model::SpinBoson(SpinBosonCoupling::power_law(s.lambda, s.s, s.omega_c)?))),
            other => return Err(UnknownPreset { kind: "model", name: other.to_string() }),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::TwoLevel { .. } | Model::DaviesQubit(_) | Model::SpinBoson(_) => 2,
            Model::Oscillator(p) => p.n_trunc,
            Model::KickRing(p) => p.lattice_size,
            Model::BlochBoltzmann(m) => m.levels(),
        }
    }

    pub fn is_driven(&self) -> bool {
        matches!(self, Model::DaviesQubit(DaviesQubit { drive: Some(_), .. }))
    }

    /// Time-independent GKLS generator, if the model has one.
    pub fn generator(&self) -> Result<GklsGenerator> {
        match self {
            Model::TwoLevel { params, .. } => two_level_generator(params),
            Model::Oscillator(p) => oscillator_generator(p),
            Model::KickRing(p) => kick_decoherence_generator(p),
            Model::DaviesQubit(q) if q.drive.is_none() => q.generator_at(0.0),
            Model::DaviesQubit(_) => {
                Err(Error::InvalidParameter("a driven model has no time-independent generator".into()))
            }
            Model::BlochBoltzmann(_) | Model::SpinBoson(_) => {
                Err(Error::InvalidParameter("this preset does not define a single GKLS generator".into()))
            }
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            Model::TwoLevel { beta, .. } => *beta,
            Model::DaviesQubit(q) => Some(q.beta),
            _ => None,
        }
    }
}

fn build_davies_qubit(spec: DaviesQubitSpec, base: Result<SpectralFunction>) -> Result<Model> {
    let base = base?;
    if !(spec.epsilon.is_finite() && spec.epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {}", spec.epsilon)));
    }
    if let Some(d) = spec.drive {
        if !(d.amplitude.is_finite() && d.amplitude.abs() < 1.0 && d.frequency.is_finite()) {
            return Err(Error::InvalidParameter("drive needs |amplitude| < 1 and a finite frequency".into()));
        }
    }
    let positive = move |w: f64| base.evaluate_unchecked(w).unwrap_or_else(|_| CMat::from_element(1, 1, c(f64::NAN)));
    let spectral = SpectralFunction::thermal(1, spec.beta, positive)?;
    Ok(Model::DaviesQubit(DaviesQubit {
        epsilon: spec.epsilon,
        lambda: spec.lambda,
        beta: spec.beta,
        spectral,
        drive: spec.drive,
    }))
}

fn build_bloch_boltzmann(s: BlochBoltzmannSpec) -> Result<Model> {
    let nv = s.velocities.len();
    let model = match (s.basis, s.drift, s.kernel) {
        (Some(basis), Some(drift), Some(kernel)) => {
            let basis = basis.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
            let basis = basis.into_iter().map(Operator::from_matrix_unchecked).collect();
            let kernel = kernel
                .iter()
                .map(|row| row.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            BlochBoltzmannDiscrete::new(s.velocities, s.dv, drift, basis, kernel)?
        }
        (None, None, None) => {
            crate::models::require_rate("gamma_down", s.gamma_down)?;
            crate::models::require_rate("gamma_up", s.gamma_up)?;
            if !(s.velocity_temperature > 0.0 && s.velocity_temperature.is_finite()) {
                return Err(Error::InvalidParameter("velocity_temperature must be > 0".into()));
            }
            // recoil redistributes the velocity with Maxwellian weights
            let w: Vec<f64> = s.velocities.iter().map(|v| (-v * v / (2.0 * s.velocity_temperature)).exp()).collect();
            let norm: f64 = w.iter().sum::<f64>() * s.dv;
            let basis = vec![sigma_minus(), sigma_plus(), sigma_3().scale_real(0.5)];
            let drift = s.velocities.iter().map(|v| vec![0.0, 0.0, s.omega + s.doppler * v]).collect();
            let kernel = (0..nv)
                .map(|i| {
                    let k = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
                        c(s.gamma_down * w[i] / norm),
                        c(s.gamma_up * w[i] / norm),
                        c(0.0),
                    ]));
                    vec![k; nv]
                })
                .collect();
            BlochBoltzmannDiscrete::new(s.velocities, s.dv, drift, basis, kernel)?
        }
        _ => return Err(Error::InvalidParameter("basis, drift and kernel must be given together".into())),
    };
    Ok(Model::BlochBoltzmann(model))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset(name: &str, params: Value) -> PresetRef {
        PresetRef { preset: name.into(), params: params.as_object().cloned().unwrap_or_default() }
    }

    #[test]
    fn registry_is_sorted() {
        let keys: Vec<_> = PRESETS.iter().map(|p| (p.kind, p.name)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn every_model_preset_builds_with_defaults() {
        for p in PRESETS.iter().filter(|p| p.kind == "model") {
            let m = Model::from_preset(&preset(p.name, serde_json::json!({}))).unwrap().unwrap();
            assert!(m.dim() >= 2, "{}", p.name);
        }
        for p in PRESETS.iter().filter(|p| p.kind == "spectral") {
            build_spectral(&preset(p.name, serde_json::json!({}))).unwrap().unwrap();
        }
    }

    #[test]
    fn unknown_names_and_fields() {
        assert!(Model::from_preset(&preset("three-level", serde_json::json!({}))).is_err());
        let bad = Model::from_preset(&preset("two-level", serde_json::json!({"omgea": 1.0}))).unwrap();
        assert!(matches!(bad, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn temperature_sets_ratio() {
        let m = Model::from_preset(&preset("two-level", serde_json::json!({"omega": 2f64.ln(), "temperature": 1.0})))
            .unwrap()
            .unwrap();
        let Model::TwoLevel { params, beta } = m else { panic!() };
        assert!((params.gamma_up - 0.5).abs() < 1e-15);
        assert_eq!(beta, Some(1.0));
    }

    #[test]
    fn grid_range() {
        let g: GridSpec = serde_json::from_str(r#"{"start": 0, "stop": 1, "points": 5}"#).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn state_specs() {
        let s: StateSpec = serde_json::from_str(r#""plus""#).unwrap();
        assert!((s.build(2).unwrap().matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
        let s: StateSpec = serde_json::from_str(r#"{"basis": 3}"#).unwrap();
        assert!(s.build(3).is_err());
    }
}
