//! Detector response: from a white force PSD to what each instrument
//! actually reports (displacement, strain, acceleration), and back.
//!
//! Every function is linear in the density it is given and keeps its
//! sidedness tag, so one- and two-sided chains can't be mixed silently.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::{Quantity, SpectralDensity};

/// Mechanical response of the relative coordinate of a test-mass pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResponseModel {
    /// Suspended masses well above their pendulum frequency.
    FreeMass,
    /// Damped oscillator with resonance `omega0` (rad/s) and quality factor `q`.
    Oscillator { omega0: f64, q: f64 },
    /// First longitudinal mode of a bar of length `length` (m).
    ResonantBar { omega0: f64, length: f64 },
}

impl ResponseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ResponseModel::FreeMass => Ok(()),
            ResponseModel::Oscillator { omega0, q } => {
                positive("omega0", omega0)?;
                positive("q_factor", q)
            }
            ResponseModel::ResonantBar { omega0, length } => {
                positive("omega0", omega0)?;
                positive("length", length)
            }
        }
    }
}

/// What the instrument's calibrated output measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReadoutKind {
    Strain { arm_length: f64 },
    Acceleration,
    Force,
    Displacement,
}

impl ReadoutKind {
    pub fn quantity(&self) -> Quantity {
        match self {
            ReadoutKind::Strain { .. } => Quantity::Strain,
            ReadoutKind::Acceleration => Quantity::Acceleration,
            ReadoutKind::Force => Quantity::Force,
            ReadoutKind::Displacement => Quantity::Displacement,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ReadoutKind::Strain { arm_length } => positive("arm_length", arm_length),
            _ => Ok(()),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be finite and >= 0, got {v}"
        )))
    }
}

/// `|chi(omega)|^-2 = (omega0² - omega²)² + (omega omega0 / Q)²`
fn inverse_susceptibility(omega: f64, omega0: f64, q: f64) -> f64 {
    let detune = omega0 * omega0 - omega * omega;
    let damping = omega * omega0 / q;
    detune * detune + damping * damping
}

/// Relative displacement PSD of an oscillator pair driven by `s_ff`:
/// `(4/m²) S_FF / ((omega0² - omega²)² + (omega omega0/Q)²)`.
pub fn displacement_psd(
    s_ff: SpectralDensity,
    m: f64,
    omega: f64,
    omega0: f64,
    q: f64,
) -> Result<SpectralDensity> {
    s_ff.expect_psd_of(Quantity::Force)?;
    positive("mass", m)?;
    nonneg("omega", omega)?;
    ResponseModel::Oscillator { omega0, q }.validate()?;
    let value = 4.0 * s_ff.value / (m * m * inverse_susceptibility(omega, omega0, q));
    Ok(s_ff.relabel(value, Quantity::Displacement))
}

/// Free-mass limit of [`displacement_psd`]: `4 S_FF / (m² omega⁴)`.
pub fn displacement_psd_free_mass(
    s_ff: SpectralDensity,
    m: f64,
    omega: f64,
) -> Result<SpectralDensity> {
    s_ff.expect_psd_of(Quantity::Force)?;
    positive("mass", m)?;
    positive("omega", omega)?;
    let w2 = omega * omega;
    Ok(s_ff.relabel(4.0 * s_ff.value / (m * m * w2 * w2), Quantity::Displacement))
}

/// Inverse of [`displacement_psd`].
pub fn force_psd_from_displacement(
    s_xx: SpectralDensity,
    m: f64,
    omega: f64,
    omega0: f64,
    q: f64,
) -> Result<SpectralDensity> {
    s_xx.expect_psd_of(Quantity::Displacement)?;
    positive("mass", m)?;
    nonneg("omega", omega)?;
    ResponseModel::Oscillator { omega0, q }.validate()?;
    let value = 0.25 * m * m * s_xx.value * inverse_susceptibility(omega, omega0, q);
    Ok(s_xx.relabel(value, Quantity::Force))
}

/// Inverse of [`displacement_psd_free_mass`].
pub fn force_psd_from_displacement_free_mass(
    s_xx: SpectralDensity,
    m: f64,
    omega: f64,
) -> Result<SpectralDensity> {
    s_xx.expect_psd_of(Quantity::Displacement)?;
    positive("mass", m)?;
    positive("omega", omega)?;
    let w2 = omega * omega;
    Ok(s_xx.relabel(0.25 * m * m * w2 * w2 * s_xx.value, Quantity::Force))
}

/// Equivalent strain of an arm of length `a`: `S_xx / a²`.
pub fn strain_psd(s_xx: SpectralDensity, a: f64) -> Result<SpectralDensity> {
    s_xx.expect_psd_of(Quantity::Displacement)?;
    positive("arm length", a)?;
    Ok(s_xx.relabel(s_xx.value / (a * a), Quantity::Strain))
}

/// `S_hh a²`
pub fn displacement_from_strain(s_hh: SpectralDensity, a: f64) -> Result<SpectralDensity> {
    s_hh.expect_psd_of(Quantity::Strain)?;
    positive("arm length", a)?;
    Ok(s_hh.relabel(s_hh.value * a * a, Quantity::Displacement))
}

/// Relative acceleration PSD, `4 S_FF / m²`.
pub fn acceleration_psd(s_ff: SpectralDensity, m: f64) -> Result<SpectralDensity> {
    s_ff.expect_psd_of(Quantity::Force)?;
    positive("mass", m)?;
    Ok(s_ff.relabel(4.0 * s_ff.value / (m * m), Quantity::Acceleration))
}

/// Inverse of [`acceleration_psd`]: `m² S_gg / 4`.
pub fn force_psd_from_acceleration(s_gg: SpectralDensity, m: f64) -> Result<SpectralDensity> {
    s_gg.expect_psd_of(Quantity::Acceleration)?;
    positive("mass", m)?;
    Ok(s_gg.relabel(0.25 * m * m * s_gg.value, Quantity::Force))
}

/// Force PSD on the reduced bar system equivalent to strain PSD `s_hh`
/// at resonance: `(m omega0² L / pi²)² S_hh`.
pub fn force_psd_from_strain_bar(
    s_hh: SpectralDensity,
    m: f64,
    omega0: f64,
    length: f64,
) -> Result<SpectralDensity> {
    s_hh.expect_psd_of(Quantity::Strain)?;
    positive("mass", m)?;
    positive("omega0", omega0)?;
    positive("length", length)?;
    let k = m * omega0 * omega0 * length / (PI * PI);
    Ok(s_hh.relabel(k * k * s_hh.value, Quantity::Force))
}

/// Inverse of [`force_psd_from_strain_bar`].
pub fn strain_psd_from_force_bar(
    s_ff: SpectralDensity,
    m: f64,
    omega0: f64,
    length: f64,
) -> Result<SpectralDensity> {
    s_ff.expect_psd_of(Quantity::Force)?;
    positive("mass", m)?;
    positive("omega0", omega0)?;
    positive("length", length)?;
    let k = m * omega0 * omega0 * length / (PI * PI);
    Ok(s_ff.relabel(s_ff.value / (k * k), Quantity::Strain))
}

/// A one-sided amplitude spectral density sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    /// Angular frequencies (rad/s), strictly ascending and positive.
    pub omega: Vec<f64>,
    /// One-sided ASD in the SI unit of `quantity`.
    pub asd: Vec<f64>,
    pub quantity: Quantity,
}

impl SpectrumSeries {
    /// Validates the grid. Errors name the 1-based point index as the row.
    pub fn new(omega: Vec<f64>, asd: Vec<f64>, quantity: Quantity) -> Result<Self> {
        let bad = |row: usize, message: String| Error::Ingestion {
            path: "<series>".into(),
            row,
            message,
        };
        if omega.is_empty() {
            return Err(bad(0, "empty spectrum".into()));
        }
        if omega.len() != asd.len() {
            return Err(bad(
                0,
                format!("{} frequencies but {} values", omega.len(), asd.len()),
            ));
        }
        for (i, (&w, &v)) in omega.iter().zip(&asd).enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(bad(
                    i + 1,
                    format!("frequency must be finite and > 0, got {w}"),
                ));
            }
            if i > 0 && w <= omega[i - 1] {
                return Err(bad(i + 1, "frequencies must be strictly ascending".into()));
            }
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(i + 1, format!("value must be finite and > 0, got {v}")));
            }
        }
        Ok(SpectrumSeries {
            omega,
            asd,
            quantity,
        })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// Force ASD that would produce the measured strain ASD on a free-mass
/// pair: `S_F(omega) = (m omega² a / 2) S_h(omega)`, pointwise.
pub fn equivalent_force_asd_freemass(
    series: &SpectrumSeries,
    m: f64,
    a: f64,
) -> Result<SpectrumSeries> {
    if series.quantity != Quantity::Strain {
        return Err(Error::Ingestion {
            path: "<series>".into(),
            row: 0,
            message: format!("expected a strain spectrum, got {}", series.quantity),
        });
    }
    positive("mass", m)?;
    positive("arm length", a)?;
    let half_ma = 0.5 * m * a;
    let asd = series
        .omega
        .iter()
        .zip(&series.asd)
        .map(|(&w, &h)| half_ma * (w * w) * h)
        .collect();
    SpectrumSeries::new(series.omega.clone(), asd, Quantity::Force)
}
