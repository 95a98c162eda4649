//! Model gallery with closed-form solutions used as oracles.

mod bloch_boltzmann;
mod kick;
mod oscillator;
mod spin_boson;
mod two_level;

pub use bloch_boltzmann::{BlochBoltzmannDiscrete, BlochBoltzmannState};
pub use kick::{kick_closed_form, kick_decoherence_generator, KickModelParams};
pub use oscillator::{
    coherent_state, generating_function_oracle, mean_number_oracle, oscillator_generator, thermal_state,
    truncation_leakage, weyl_operator, OscillatorInitial, OscillatorParams, LEAKAGE_LIMIT,
};
pub use spin_boson::{dephasing_feasibility, spin_boson_overlap, CloudNorm, FeasibilityReport, FeasibilityVerdict, OverlapReport, SpinBosonCoupling};
pub use two_level::{two_level_analytic, two_level_generator, TwoLevelParams};

use crate::error::{Error, Result};

pub(crate) fn require_rate(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {x}")));
    }
    Ok(())
}

pub(crate) fn require_finite(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite, got {x}")));
    }
    Ok(())
}
