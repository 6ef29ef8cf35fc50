//! Physical constants and spectral-density conventions.
//!
//! Everything inside the library is SI, angular frequency (rad/s) and
//! two-sided power densities. Hz, amplitude densities and one-sided spectra
//! only appear at the I/O boundary, and the helpers here are the only place
//! where those conversions happen.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light (m/s).
pub const C: f64 = 299_792_458.0;
/// Reference nucleon mass (kg), the unified atomic mass unit.
pub const M0: f64 = 1.660_539_066_60e-27;
/// Planck mass (kg).
pub const M_PLANCK: f64 = 2.176_434e-8;

/// The fixed constant set, for callers that prefer passing a value around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    pub m0: f64,
    pub m_planck: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        c: C,
        m0: M0,
        m_planck: M_PLANCK,
    };
}

pub fn hz_to_rad(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

pub fn rad_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Force,
    Displacement,
    Strain,
    Acceleration,
}

impl Quantity {
    /// SI unit of the amplitude density, e.g. `N/sqrt(Hz)`.
    pub fn asd_unit(self) -> &'static str {
        match self {
            Quantity::Force => "N/sqrt(Hz)",
            Quantity::Displacement => "m/sqrt(Hz)",
            Quantity::Strain => "1/sqrt(Hz)",
            Quantity::Acceleration => "m s^-2/sqrt(Hz)",
        }
    }

    /// SI unit of the power density, e.g. `N^2/Hz`.
    pub fn psd_unit(self) -> &'static str {
        match self {
            Quantity::Force => "N^2/Hz",
            Quantity::Displacement => "m^2/Hz",
            Quantity::Strain => "1/Hz",
            Quantity::Acceleration => "m^2 s^-4/Hz",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Quantity::Force => "force",
            Quantity::Displacement => "displacement",
            Quantity::Strain => "strain",
            Quantity::Acceleration => "acceleration",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DensityKind {
    Power,
    Amplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpectralConvention {
    pub sidedness: Sidedness,
    pub quantity: Quantity,
    pub density_kind: DensityKind,
}

/// A single spectral-density value tagged with its convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub value: f64,
    pub convention: SpectralConvention,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConventionError {
    #[error("expected a {expected:?} density, got {found:?}")]
    Sidedness {
        expected: Sidedness,
        found: Sidedness,
    },
    #[error("expected a {expected:?} density, got {found:?}")]
    DensityKind {
        expected: DensityKind,
        found: DensityKind,
    },
    #[error("expected a {expected} density, got {found}")]
    Quantity { expected: Quantity, found: Quantity },
    #[error("spectral density must be finite and nonnegative, got {0}")]
    Domain(f64),
}

impl SpectralDensity {
    pub fn psd(
        value: f64,
        quantity: Quantity,
        sidedness: Sidedness,
    ) -> Result<Self, ConventionError> {
        Self::new(value, quantity, sidedness, DensityKind::Power)
    }

    pub fn asd(
        value: f64,
        quantity: Quantity,
        sidedness: Sidedness,
    ) -> Result<Self, ConventionError> {
        Self::new(value, quantity, sidedness, DensityKind::Amplitude)
    }

    fn new(
        value: f64,
        quantity: Quantity,
        sidedness: Sidedness,
        density_kind: DensityKind,
    ) -> Result<Self, ConventionError> {
        if !value.is_finite() || value < 0.0 {
            return Err(ConventionError::Domain(value));
        }
        Ok(SpectralDensity {
            value,
            convention: SpectralConvention {
                sidedness,
                quantity,
                density_kind,
            },
        })
    }

    fn expect_power(&self) -> Result<(), ConventionError> {
        match self.convention.density_kind {
            DensityKind::Power => Ok(()),
            found => Err(ConventionError::DensityKind {
                expected: DensityKind::Power,
                found,
            }),
        }
    }

    /// Fails unless this is a power density of `quantity`.
    pub fn expect_psd_of(&self, quantity: Quantity) -> Result<(), ConventionError> {
        self.expect_power()?;
        if self.convention.quantity != quantity {
            return Err(ConventionError::Quantity {
                expected: quantity,
                found: self.convention.quantity,
            });
        }
        Ok(())
    }

    /// Same sidedness, new quantity and value.
    pub fn relabel(self, value: f64, quantity: Quantity) -> Self {
        SpectralDensity {
            value,
            convention: SpectralConvention {
                quantity,
                ..self.convention
            },
        }
    }

    pub(crate) fn with_sidedness(mut self, sidedness: Sidedness) -> Self {
        self.convention.sidedness = sidedness;
        self
    }

    fn with(self, value: f64, sidedness: Sidedness, density_kind: DensityKind) -> Self {
        SpectralDensity {
            value,
            convention: SpectralConvention {
                sidedness,
                density_kind,
                ..self.convention
            },
        }
    }
}

/// Folds negative frequencies onto positive ones: one-sided = 2 x two-sided.
pub fn to_one_sided(psd: SpectralDensity) -> Result<SpectralDensity, ConventionError> {
    psd.expect_power()?;
    match psd.convention.sidedness {
        Sidedness::TwoSided => {
            Ok(psd.with(2.0 * psd.value, Sidedness::OneSided, DensityKind::Power))
        }
        found => Err(ConventionError::Sidedness {
            expected: Sidedness::TwoSided,
            found,
        }),
    }
}

pub fn to_two_sided(psd: SpectralDensity) -> Result<SpectralDensity, ConventionError> {
    psd.expect_power()?;
    match psd.convention.sidedness {
        Sidedness::OneSided => {
            Ok(psd.with(0.5 * psd.value, Sidedness::TwoSided, DensityKind::Power))
        }
        found => Err(ConventionError::Sidedness {
            expected: Sidedness::OneSided,
            found,
        }),
    }
}

pub fn asd_to_psd(asd: SpectralDensity) -> Result<SpectralDensity, ConventionError> {
    match asd.convention.density_kind {
        DensityKind::Amplitude => {
            if asd.value.is_nan() || asd.value < 0.0 {
                return Err(ConventionError::Domain(asd.value));
            }
            Ok(asd.with(
                asd.value * asd.value,
                asd.convention.sidedness,
                DensityKind::Power,
            ))
        }
        found => Err(ConventionError::DensityKind {
            expected: DensityKind::Amplitude,
            found,
        }),
    }
}

pub fn psd_to_asd(psd: SpectralDensity) -> Result<SpectralDensity, ConventionError> {
    psd.expect_power()?;
    if psd.value.is_nan() || psd.value < 0.0 {
        return Err(ConventionError::Domain(psd.value));
    }
    Ok(psd.with(
        psd.value.sqrt(),
        psd.convention.sidedness,
        DensityKind::Amplitude,
    ))
}
