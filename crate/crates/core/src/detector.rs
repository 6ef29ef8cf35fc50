//! Detector descriptions and their measured noise figures.

use crate::csl::{BarVariant, MassArrangement, MassGeometry, Shape};
use crate::error::{Error, Result};
use crate::response::{
    displacement_from_strain, force_psd_from_acceleration, force_psd_from_displacement,
    force_psd_from_displacement_free_mass, force_psd_from_strain_bar, ReadoutKind, ResponseModel,
};
use crate::units::{Quantity, Sidedness, SpectralDensity};

/// A published noise level, stored as a one-sided PSD in the SI unit of
/// `quantity`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredNoise {
    pub name: String,
    pub quantity: Quantity,
    pub psd: f64,
    /// Angular frequency (rad/s) the figure refers to, where it matters.
    pub frequency: Option<f64>,
    /// Share of the noise power that is left unexplained and may be
    /// attributed to CSL. 1 attributes everything.
    pub attributable_fraction: f64,
    pub provenance: String,
}

impl MeasuredNoise {
    pub fn new(name: impl Into<String>, quantity: Quantity, psd: f64) -> Result<Self> {
        let n = MeasuredNoise {
            name: name.into(),
            quantity,
            psd,
            frequency: None,
            attributable_fraction: 1.0,
            provenance: String::new(),
        };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.psd.is_finite() && self.psd > 0.0) {
            return Err(Error::domain(format!(
                "noise `{}`: value must be > 0, got {}",
                self.name, self.psd
            )));
        }
        if let Some(w) = self.frequency {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::domain(format!(
                    "noise `{}`: frequency must be > 0, got {w}",
                    self.name
                )));
            }
        }
        let f = self.attributable_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::domain(format!(
                "noise `{}`: attributable_fraction must be in (0, 1], got {f}",
                self.name
            )));
        }
        Ok(())
    }

    pub fn density(&self) -> SpectralDensity {
        SpectralDensity {
            value: self.psd,
            convention: crate::units::SpectralConvention {
                sidedness: Sidedness::OneSided,
                quantity: self.quantity,
                density_kind: crate::units::DensityKind::Power,
            },
        }
    }

    /// Same figure with its power scaled by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        MeasuredNoise {
            psd: self.psd * k,
            ..self.clone()
        }
    }
}

/// The three supported detector layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Archetype {
    /// Cylindrical mirrors read out as strain.
    Interferometer,
    /// Cubic masses read out as relative acceleration.
    Accelerometer,
    /// A single bar read out as strain at its resonance.
    ResonantBar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub name: String,
    pub geometry: MassGeometry,
    pub arrangement: MassArrangement,
    pub response: ResponseModel,
    pub readout: ReadoutKind,
    pub noise: Vec<MeasuredNoise>,
    pub bar_variant: BarVariant,
}

impl DetectorModel {
    /// Checks the combination is one of the supported archetypes.
    pub fn validate(&self) -> Result<Archetype> {
        self.response.validate()?;
        self.readout.validate()?;
        self.arrangement.check(&self.geometry.shape)?;
        for n in &self.noise {
            n.validate()?;
        }
        let archetype = match (&self.geometry.shape, &self.response, &self.readout) {
            (
                Shape::Cylinder(_),
                ResponseModel::FreeMass | ResponseModel::Oscillator { .. },
                ReadoutKind::Strain { .. } | ReadoutKind::Displacement | ReadoutKind::Force,
            ) => Archetype::Interferometer,
            (
                Shape::Cube(_),
                ResponseModel::FreeMass | ResponseModel::Oscillator { .. },
                ReadoutKind::Acceleration | ReadoutKind::Force,
            ) => Archetype::Accelerometer,
            (
                Shape::HalfCylinderBar(bar),
                ResponseModel::ResonantBar { length, .. },
                ReadoutKind::Strain { .. } | ReadoutKind::Force,
            ) => {
                if (length - bar.length).abs() > 1e-12 * bar.length {
                    return Err(Error::domain(format!(
                        "bar response length {length} m differs from the geometry length {} m",
                        bar.length
                    )));
                }
                Archetype::ResonantBar
            }
            (shape, response, readout) => {
                return Err(Error::UnsupportedReadout(format!(
                    "{} with {} response and {} readout is not a supported detector layout",
                    shape_name(shape),
                    response_name(response),
                    readout.quantity()
                )))
            }
        };
        Ok(archetype)
    }

    pub fn noise_entry(&self, name: Option<&str>) -> Result<&MeasuredNoise> {
        match name {
            None => self.noise.first().ok_or_else(|| {
                Error::domain(format!("detector `{}` has no noise entries", self.name))
            }),
            Some(n) => self.noise.iter().find(|e| e.name == n).ok_or_else(|| {
                let known: Vec<&str> = self.noise.iter().map(|e| e.name.as_str()).collect();
                Error::domain(format!(
                    "detector `{}` has no noise entry `{n}` (known: {})",
                    self.name,
                    known.join(", ")
                ))
            }),
        }
    }

    /// Converts a noise figure into the one-sided force PSD (N²/Hz) on the
    /// relative coordinate, scaled by its attributable fraction.
    pub fn measured_force_psd(&self, noise: &MeasuredNoise) -> Result<SpectralDensity> {
        noise.validate()?;
        let m = self.geometry.mass;
        let d = noise.density();
        let need_frequency = || {
            noise.frequency.ok_or_else(|| {
                Error::domain(format!(
                    "noise `{}`: a frequency is needed to convert {} to force",
                    noise.name, noise.quantity
                ))
            })
        };
        let force = match noise.quantity {
            Quantity::Force => d,
            Quantity::Acceleration => force_psd_from_acceleration(d, m)?,
            Quantity::Strain => match self.response {
                ResponseModel::ResonantBar { omega0, length } => {
                    force_psd_from_strain_bar(d, m, omega0, length)?
                }
                _ => {
                    let ReadoutKind::Strain { arm_length } = self.readout else {
                        return Err(Error::UnsupportedReadout(format!(
                            "strain noise on a detector with {} readout",
                            self.readout.quantity()
                        )));
                    };
                    let xx = displacement_from_strain(d, arm_length)?;
                    self.force_from_displacement(xx, need_frequency()?)?
                }
            },
            Quantity::Displacement => {
                if matches!(self.response, ResponseModel::ResonantBar { .. }) {
                    return Err(Error::UnsupportedReadout(
                        "displacement noise on a resonant bar".into(),
                    ));
                }
                self.force_from_displacement(d, need_frequency()?)?
            }
        };
        Ok(force.relabel(force.value * noise.attributable_fraction, Quantity::Force))
    }

    fn force_from_displacement(&self, xx: SpectralDensity, omega: f64) -> Result<SpectralDensity> {
        let m = self.geometry.mass;
        match self.response {
            ResponseModel::FreeMass => force_psd_from_displacement_free_mass(xx, m, omega),
            ResponseModel::Oscillator { omega0, q } => {
                force_psd_from_displacement(xx, m, omega, omega0, q)
            }
            ResponseModel::ResonantBar { .. } => Err(Error::UnsupportedReadout(
                "displacement noise on a resonant bar".into(),
            )),
        }
    }
}

fn shape_name(s: &Shape) -> &'static str {
    match s {
        Shape::Cylinder(_) => "cylinder pair",
        Shape::Cube(_) => "cube pair",
        Shape::HalfCylinderBar(_) => "half-cylinder bar",
    }
}

fn response_name(r: &ResponseModel) -> &'static str {
    match r {
        ResponseModel::FreeMass => "free-mass",
        ResponseModel::Oscillator { .. } => "oscillator",
        ResponseModel::ResonantBar { .. } => "resonant-bar",
    }
}
