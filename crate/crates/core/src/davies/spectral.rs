//! Bath spectral functions `ω ↦ R̂_kl(ω)` and their thermal (KMS) structure.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::quadrature::simpson_samples;

/// Relative tolerance of the KMS consistency check on user data.
pub const KMS_TOL: f64 = 1e-8;
/// PSD tolerance for spectral matrices, relative to their norm.
pub const SPECTRAL_PSD_TOL: f64 = 1e-10;

type Evaluator = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kms {
    /// The evaluator is trusted on the whole axis.
    None,
    /// Negative frequencies are derived from positive ones.
    Derived { beta: f64 },
    /// The evaluator covers the whole axis and must satisfy KMS.
    Checked { beta: f64 },
}

/// Matrix-valued spectral density over `channels` coupling channels.
#[derive(Clone)]
pub struct SpectralFunction {
    channels: usize,
    eval: Evaluator,
    kms: Kms,
}

impl fmt::Debug for SpectralFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralFunction")
            .field("channels", &self.channels)
            .field("kms", &self.kms)
            .finish_non_exhaustive()
    }
}

/// A frequency at which a computed spectral matrix failed the PSD check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdWarning {
    pub omega: f64,
    pub min_eigenvalue: f64,
}

impl SpectralFunction {
    /// Spectral matrix given on the whole frequency axis.
    pub fn new(channels: usize, eval: impl Fn(f64) -> CMat + Send + Sync + 'static) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidParameter("spectral function needs at least one channel".into()));
        }
        Ok(Self { channels, eval: Arc::new(eval), kms: Kms::None })
    }

    /// Single-channel spectral density.
    pub fn scalar(eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { channels: 1, eval: Arc::new(move |w| CMat::from_element(1, 1, c(eval(w)))), kms: Kms::None }
    }

    /// Thermal spectral matrix at inverse temperature `beta` from its `ω ≥ 0` branch;
    /// `R̂(−ω) = e^{−βω} R̂(ω)ᵀ` supplies the rest.
    pub fn thermal(
        channels: usize,
        beta: f64,
        positive_branch: impl Fn(f64) -> CMat + Send + Sync + 'static,
    ) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { kms: Kms::Derived { beta }, ..Self::new(channels, positive_branch)? })
    }

    /// Declare that this spectral function obeys KMS at `beta`. Negative
    /// frequencies are then computed from positive ones, and evaluating at
    /// `ω < 0` fails if the original evaluator disagrees by more than [`KMS_TOL`].
    pub fn with_kms(self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { kms: Kms::Checked { beta }, ..self })
    }

    /// Keep the `ω ≥ 0` branch of this function and extend it thermally to `ω < 0`.
    pub fn kms_extension(self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { kms: Kms::Derived { beta }, ..self })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Inverse temperature, if the function is declared thermal.
    pub fn beta(&self) -> Option<f64> {
        match self.kms {
            Kms::None => None,
            Kms::Derived { beta } | Kms::Checked { beta } => Some(beta),
        }
    }

    fn raw(&self, omega: f64) -> Result<CMat> {
        let m = (self.eval)(omega);
        if m.nrows() != self.channels || m.ncols() != self.channels {
            return Err(Error::DimensionMismatch { expected: self.channels, found: m.nrows() });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical(format!("spectral function is not finite at ω = {omega}")));
        }
        Ok(m)
    }

    /// `R̂(ω)` without the PSD check.
    pub fn evaluate_unchecked(&self, omega: f64) -> Result<CMat> {
        match self.kms {
            Kms::None => self.raw(omega),
            _ if omega >= 0.0 => self.raw(omega),
            Kms::Derived { beta } => Ok(self.raw(-omega)?.transpose() * c((beta * omega).exp())),
            Kms::Checked { beta } => {
                let derived = self.raw(-omega)?.transpose() * c((beta * omega).exp());
                let given = self.raw(omega)?;
                let scale = linalg::max_abs(&derived).max(linalg::max_abs(&given)).max(f64::MIN_POSITIVE);
                let mismatch = linalg::max_abs_diff(&derived, &given) / scale;
                if mismatch > KMS_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "spectral function violates KMS at ω = {omega}: relative mismatch {mismatch:e}"
                    )));
                }
                Ok(derived)
            }
        }
    }

    /// `R̂(ω)`, required to be hermitian positive semidefinite.
    pub fn evaluate(&self, omega: f64) -> Result<CMat> {
        let m = self.evaluate_unchecked(omega)?;
        let scale = linalg::max_abs(&m);
        if linalg::max_abs_diff(&m, &m.adjoint()) > SPECTRAL_PSD_TOL * scale.max(1.0) {
            return Err(Error::NotHermitian {
                what: format!("spectral matrix at ω = {omega}"),
                defect: linalg::max_abs_diff(&m, &m.adjoint()),
            });
        }
        let min = linalg::eigvalsh(&m)[0];
        if min < -SPECTRAL_PSD_TOL * scale {
            return Err(Error::NotPositive { what: format!("spectral matrix at ω = {omega}"), min_eigenvalue: min });
        }
        Ok(m)
    }

    /// `A · 2τ/(1 + ω²τ²)`: transform of `A·e^{−|t|/τ}`.
    pub fn lorentzian(amplitude: f64, tau: f64) -> Result<Self> {
        require_positive("tau", tau)?;
        require_nonnegative("amplitude", amplitude)?;
        Ok(Self::scalar(move |w| amplitude * 2.0 * tau / (1.0 + w * w * tau * tau)))
    }

    /// `A ω³ e^{−ω/ω_c}` for `ω ≥ 0` and zero below, unless extended by KMS.
    pub fn ohmic_cubed_exp(amplitude: f64, omega_c: f64, beta: Option<f64>) -> Result<Self> {
        require_positive("omega_c", omega_c)?;
        require_nonnegative("amplitude", amplitude)?;
        let f = Self::scalar(move |w| if w >= 0.0 { amplitude * w.powi(3) * (-w / omega_c).exp() } else { 0.0 });
        match beta {
            Some(b) => f.kms_extension(b),
            None => Ok(f),
        }
    }

    /// Constant spectral density: the white-noise limit.
    pub fn flat(value: f64) -> Result<Self> {
        require_nonnegative("value", value)?;
        Ok(Self::scalar(move |_| value))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

fn require_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be > 0, got {x}")));
    }
    Ok(())
}

fn require_nonnegative(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {x}")));
    }
    Ok(())
}

/// Sampling grid for a correlation function: `t_j = j·t_max/n`, `j = −n..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationGrid {
    pub t_max: f64,
    pub n: usize,
}

/// `R̂(ω) = ∫ R(t) e^{−itω} dt` from samples of `R(t)` on a symmetric grid.
///
/// Each half-line is integrated separately by composite Simpson so a kink at
/// `t = 0` costs no accuracy. The samples are taken once; the returned function
/// evaluates the transform on demand. Every frequency in `check_at` whose
/// matrix is not PSD is reported.
pub fn spectral_from_correlation(
    channels: usize,
    correlation: impl Fn(f64) -> CMat,
    grid: CorrelationGrid,
    check_at: &[f64],
) -> Result<(SpectralFunction, Vec<PsdWarning>)> {
    require_positive("t_max", grid.t_max)?;
    if grid.n < 2 {
        return Err(Error::InvalidParameter("correlation grid needs n >= 2".into()));
    }
    let h = grid.t_max / grid.n as f64;
    let n = grid.n as isize;
    let samples: Vec<(f64, CMat)> = (-n..=n)
        .map(|j| {
            let t = j as f64 * h;
            let m = correlation(t);
            if m.nrows() != channels || m.ncols() != channels {
                return Err(Error::DimensionMismatch { expected: channels, found: m.nrows() });
            }
            Ok((t, m))
        })
        .collect::<Result<_>>()?;
    let samples = Arc::new(samples);
    let eval = move |omega: f64| {
        CMat::from_fn(channels, channels, |k, l| {
            let half = |range: &mut dyn Iterator<Item = &(f64, CMat)>| {
                let (re, im): (Vec<f64>, Vec<f64>) = range
                    .map(|(t, m)| {
                        let z = m[(k, l)] * num_complex::Complex64::from_polar(1.0, -t * omega);
                        (z.re, z.im)
                    })
                    .unzip();
                num_complex::Complex64::new(simpson_samples(&re, h), simpson_samples(&im, h))
            };
            let mid = grid.n;
            half(&mut samples[mid..].iter()) + half(&mut samples[..=mid].iter().rev())
        })
    };
    let f = SpectralFunction::new(channels, eval)?;
    let mut warnings = Vec::new();
    for &w in check_at {
        let m = f.evaluate_unchecked(w)?;
        let herm = (&m + m.adjoint()) * c(0.5);
        let min = linalg::eigvalsh(&herm)[0];
        if min < -SPECTRAL_PSD_TOL * linalg::max_abs(&m).max(1e-300) {
            warnings.push(PsdWarning { omega: w, min_eigenvalue: min });
        }
    }
    Ok((f, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_at(f: &SpectralFunction, w: f64) -> f64 {
        f.evaluate(w).unwrap()[(0, 0)].re
    }

    #[test]
    fn presets() {
        let l = SpectralFunction::lorentzian(1.0, 2.0).unwrap();
        assert!((scalar_at(&l, 0.5) - 4.0 / 2.0).abs() < 1e-15);
        let o = SpectralFunction::ohmic_cubed_exp(1.0, 2.0, None).unwrap();
        assert!((scalar_at(&o, 2.0) - 8.0 * (-1.0f64).exp()).abs() < 1e-14);
        assert_eq!(scalar_at(&o, -1.0), 0.0);
        let f = SpectralFunction::flat(0.3).unwrap();
        assert_eq!(scalar_at(&f, 123.0), 0.3);
        assert!(SpectralFunction::flat(-1.0).is_err());
    }

    #[test]
    fn thermal_extension_obeys_kms() {
        let beta = 1.3;
        let o = SpectralFunction::ohmic_cubed_exp(1.0, 2.0, Some(beta)).unwrap();
        for w in [0.1, 0.7, 3.0] {
            let ratio = scalar_at(&o, -w) / scalar_at(&o, w);
            assert!((ratio - (-beta * w).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn checked_kms_rejects_inconsistent_data() {
        let f = SpectralFunction::lorentzian(1.0, 1.0).unwrap().with_kms(1.0).unwrap();
        assert!(f.evaluate(0.5).is_ok());
        assert!(f.evaluate(-0.5).is_err());
        let beta = 0.8;
        let good = SpectralFunction::scalar(move |w| {
            let s = 1.0 / (1.0 + w * w);
            if w >= 0.0 { s } else { s * (beta * w).exp() }
        })
        .with_kms(beta)
        .unwrap();
        assert!(good.evaluate(-0.5).is_ok());
    }

    #[test]
    fn non_psd_matrix_rejected() {
        let f = SpectralFunction::new(2, |_| {
            CMat::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(1.0)])
        })
        .unwrap();
        assert!(matches!(f.evaluate(0.0), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn exponential_correlation_gives_lorentzian() {
        let tau = 0.7;
        let (f, warnings) = spectral_from_correlation(
            1,
            |t| CMat::from_element(1, 1, c((-t.abs() / tau).exp())),
            CorrelationGrid { t_max: 40.0 * tau, n: 8000 },
            &[0.0, 1.0, 3.0],
        )
        .unwrap();
        assert!(warnings.is_empty());
        for w in [0.0, 0.4, 1.0, 3.0] {
            let exact = 2.0 * tau / (1.0 + w * w * tau * tau);
            assert!((scalar_at(&f, w) - exact).abs() < 1e-8, "ω={w}");
        }
    }

    #[test]
    fn reports_non_psd_frequencies() {
        // R(t) = −e^{−t²} has a negative transform everywhere
        let (_, warnings) = spectral_from_correlation(
            1,
            |t| CMat::from_element(1, 1, c(-(-t * t).exp())),
            CorrelationGrid { t_max: 10.0, n: 1000 },
            &[0.0, 1.0],
        )
        .unwrap();
        assert_eq!(warnings.len(), 2);
        assert!(warnings[0].min_eigenvalue < 0.0);
    }
}
