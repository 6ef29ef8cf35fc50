//! Detector configuration files, spectrum ingestion and curve output.
//!
//! Configs are JSON with unit-suffixed keys; unknown keys are rejected and
//! every error carries the path of the offending field. Spectra and curves
//! are CSV with `#` comment lines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::csl::{
    BarVariant, Cube, Cylinder, HalfCylinderBar, MassArrangement, MassGeometry, Shape,
};
use crate::detector::{DetectorModel, MeasuredNoise};
use crate::error::{Error, Result};
use crate::exclusion::{ExclusionCurve, ModelPath};
use crate::response::{ReadoutKind, ResponseModel, SpectrumSeries};
use crate::units::{hz_to_rad, rad_to_hz, Quantity};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfigFile {
    pub schema_version: u32,
    pub name: String,
    pub geometry: GeometrySpec,
    /// Required for pairs; bars derive it from their length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrangement: Option<ArrangementSpec>,
    pub response: ResponseSpec,
    pub readout: ReadoutSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bar_variant: Option<BarVariantSpec>,
    pub noise: Vec<NoiseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    Cylinder {
        radius_m: f64,
        length_m: f64,
        mass_kg: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density_kg_m3: Option<f64>,
    },
    Cube {
        side_m: f64,
        mass_kg: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density_kg_m3: Option<f64>,
    },
    HalfCylinderBar {
        radius_m: f64,
        length_m: f64,
        mass_kg: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density_kg_m3: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrangementSpec {
    pub separation_m: f64,
    pub arm_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResponseSpec {
    FreeMass,
    Oscillator { resonance_hz: f64, q_factor: f64 },
    ResonantBar { resonance_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutSpec {
    Strain,
    Acceleration,
    Force,
    Displacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarVariantSpec {
    Printed,
    Rederived,
}

/// One measured noise figure. Exactly one value key must be present; all
/// values are one-sided.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asd_force_n_per_sqrt_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_force_n2_per_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asd_strain_per_sqrt_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_strain_per_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asd_acceleration_m_s2_per_sqrt_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_acceleration_m2_s4_per_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asd_displacement_m_per_sqrt_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_displacement_m2_per_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributable_fraction: Option<f64>,
    #[serde(default)]
    pub provenance: String,
}

struct Diag<'a> {
    origin: &'a str,
}

impl Diag<'_> {
    fn err(&self, field: impl Into<String>, message: impl std::fmt::Display) -> Error {
        Error::Config {
            path: self.origin.to_string(),
            field: field.into(),
            message: message.to_string(),
        }
    }

    fn positive(&self, field: &str, v: f64) -> Result<f64> {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(field, format!("must be finite and > 0, got {v}")))
        }
    }
}

impl NoiseSpec {
    fn values(&self) -> [(&'static str, Option<f64>, Quantity, bool); 8] {
        [
            (
                "asd_force_n_per_sqrt_hz",
                self.asd_force_n_per_sqrt_hz,
                Quantity::Force,
                true,
            ),
            (
                "psd_force_n2_per_hz",
                self.psd_force_n2_per_hz,
                Quantity::Force,
                false,
            ),
            (
                "asd_strain_per_sqrt_hz",
                self.asd_strain_per_sqrt_hz,
                Quantity::Strain,
                true,
            ),
            (
                "psd_strain_per_hz",
                self.psd_strain_per_hz,
                Quantity::Strain,
                false,
            ),
            (
                "asd_acceleration_m_s2_per_sqrt_hz",
                self.asd_acceleration_m_s2_per_sqrt_hz,
                Quantity::Acceleration,
                true,
            ),
            (
                "psd_acceleration_m2_s4_per_hz",
                self.psd_acceleration_m2_s4_per_hz,
                Quantity::Acceleration,
                false,
            ),
            (
                "asd_displacement_m_per_sqrt_hz",
                self.asd_displacement_m_per_sqrt_hz,
                Quantity::Displacement,
                true,
            ),
            (
                "psd_displacement_m2_per_hz",
                self.psd_displacement_m2_per_hz,
                Quantity::Displacement,
                false,
            ),
        ]
    }

    fn to_noise(&self, field: &str, d: &Diag) -> Result<MeasuredNoise> {
        if self.name.is_empty() {
            return Err(d.err(format!("{field}.name"), "must not be empty"));
        }
        let given: Vec<_> = self
            .values()
            .into_iter()
            .filter(|v| v.1.is_some())
            .collect();
        let (key, value, quantity, is_asd) = match given.as_slice() {
            [one] => *one,
            [] => return Err(d.err(field, "needs one value key such as asd_force_n_per_sqrt_hz")),
            many => {
                let keys: Vec<&str> = many.iter().map(|v| v.0).collect();
                return Err(d.err(
                    field,
                    format!("has more than one value key: {}", keys.join(", ")),
                ));
            }
        };
        let v = d.positive(&format!("{field}.{key}"), value.expect("present"))?;
        let frequency = match self.frequency_hz {
            Some(f) => Some(hz_to_rad(d.positive(&format!("{field}.frequency_hz"), f)?)),
            None => None,
        };
        let fraction = self.attributable_fraction.unwrap_or(1.0);
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(d.err(
                format!("{field}.attributable_fraction"),
                format!("must be in (0, 1], got {fraction}"),
            ));
        }
        Ok(MeasuredNoise {
            name: self.name.clone(),
            quantity,
            psd: if is_asd { v * v } else { v },
            frequency,
            attributable_fraction: fraction,
            provenance: self.provenance.clone(),
        })
    }

    fn from_noise(n: &MeasuredNoise) -> Self {
        let mut s = NoiseSpec {
            name: n.name.clone(),
            frequency_hz: n.frequency.map(rad_to_hz),
            attributable_fraction: (n.attributable_fraction != 1.0)
                .then_some(n.attributable_fraction),
            provenance: n.provenance.clone(),
            ..Default::default()
        };
        let slot = match n.quantity {
            Quantity::Force => &mut s.psd_force_n2_per_hz,
            Quantity::Strain => &mut s.psd_strain_per_hz,
            Quantity::Acceleration => &mut s.psd_acceleration_m2_s4_per_hz,
            Quantity::Displacement => &mut s.psd_displacement_m2_per_hz,
        };
        *slot = Some(n.psd);
        s
    }
}

impl DetectorConfigFile {
    /// Validates and builds the model. `origin` names the source in errors.
    pub fn to_model(&self, origin: &str) -> Result<DetectorModel> {
        let d = Diag { origin };
        if self.schema_version != SCHEMA_VERSION {
            return Err(d.err(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        if self.name.is_empty() {
            return Err(d.err("name", "must not be empty"));
        }
        let (shape, mass, density) = match self.geometry {
            GeometrySpec::Cylinder {
                radius_m,
                length_m,
                mass_kg,
                density_kg_m3,
            } => (
                Shape::Cylinder(Cylinder {
                    radius: d.positive("geometry.radius_m", radius_m)?,
                    length: d.positive("geometry.length_m", length_m)?,
                }),
                mass_kg,
                density_kg_m3,
            ),
            GeometrySpec::Cube {
                side_m,
                mass_kg,
                density_kg_m3,
            } => (
                Shape::Cube(Cube {
                    side: d.positive("geometry.side_m", side_m)?,
                }),
                mass_kg,
                density_kg_m3,
            ),
            GeometrySpec::HalfCylinderBar {
                radius_m,
                length_m,
                mass_kg,
                density_kg_m3,
            } => (
                Shape::HalfCylinderBar(HalfCylinderBar {
                    radius: d.positive("geometry.radius_m", radius_m)?,
                    length: d.positive("geometry.length_m", length_m)?,
                }),
                mass_kg,
                density_kg_m3,
            ),
        };
        d.positive("geometry.mass_kg", mass)?;
        if let Some(rho) = density {
            d.positive("geometry.density_kg_m3", rho)?;
        }
        let geometry =
            MassGeometry::new(shape, mass, density).map_err(|e| d.err("geometry.mass_kg", e))?;

        let arrangement = match (&shape, &self.arrangement) {
            (Shape::HalfCylinderBar(bar), None) => MassArrangement::for_bar(bar),
            (_, Some(a)) => {
                let arr = MassArrangement::new(a.separation_m, a.arm_count).map_err(|e| {
                    let field = if a.separation_m.is_finite() && a.separation_m >= 0.0 {
                        "arrangement.arm_count"
                    } else {
                        "arrangement.separation_m"
                    };
                    d.err(field, e)
                })?;
                arr.check(&shape).map_err(|e| d.err("arrangement", e))?;
                arr
            }
            (_, None) => return Err(d.err("arrangement", "required for a pair of test masses")),
        };

        let response = match self.response {
            ResponseSpec::FreeMass => ResponseModel::FreeMass,
            ResponseSpec::Oscillator {
                resonance_hz,
                q_factor,
            } => ResponseModel::Oscillator {
                omega0: hz_to_rad(d.positive("response.resonance_hz", resonance_hz)?),
                q: d.positive("response.q_factor", q_factor)?,
            },
            ResponseSpec::ResonantBar { resonance_hz } => {
                let Shape::HalfCylinderBar(bar) = shape else {
                    return Err(d.err(
                        "response.model",
                        "resonant_bar needs a half_cylinder_bar geometry",
                    ));
                };
                ResponseModel::ResonantBar {
                    omega0: hz_to_rad(d.positive("response.resonance_hz", resonance_hz)?),
                    length: bar.length,
                }
            }
        };

        let readout = match self.readout {
            ReadoutSpec::Strain => ReadoutKind::Strain {
                arm_length: match shape {
                    Shape::HalfCylinderBar(bar) => bar.length,
                    _ => d.positive("arrangement.separation_m", arrangement.separation)?,
                },
            },
            ReadoutSpec::Acceleration => ReadoutKind::Acceleration,
            ReadoutSpec::Force => ReadoutKind::Force,
            ReadoutSpec::Displacement => ReadoutKind::Displacement,
        };

        let bar_variant = match self.bar_variant {
            None => BarVariant::default(),
            Some(_) if !matches!(shape, Shape::HalfCylinderBar(_)) => {
                return Err(d.err(
                    "bar_variant",
                    "only meaningful for a half_cylinder_bar geometry",
                ))
            }
            Some(BarVariantSpec::Printed) => BarVariant::Printed,
            Some(BarVariantSpec::Rederived) => BarVariant::Rederived,
        };

        if self.noise.is_empty() {
            return Err(d.err("noise", "at least one noise entry is required"));
        }
        let mut noise = Vec::with_capacity(self.noise.len());
        for (i, spec) in self.noise.iter().enumerate() {
            let field = format!("noise[{i}]");
            if self.noise[..i].iter().any(|o| o.name == spec.name) {
                return Err(d.err(
                    format!("{field}.name"),
                    format!("duplicate entry `{}`", spec.name),
                ));
            }
            noise.push(spec.to_noise(&field, &d)?);
        }

        let model = DetectorModel {
            name: self.name.clone(),
            geometry,
            arrangement,
            response,
            readout,
            noise,
            bar_variant,
        };
        model.validate().map_err(|e| d.err("readout", e))?;
        for (i, n) in model.noise.iter().enumerate() {
            model
                .measured_force_psd(n)
                .map_err(|e| d.err(format!("noise[{i}]"), e))?;
        }
        Ok(model)
    }

    pub fn from_model(m: &DetectorModel) -> Self {
        let (geometry, is_bar) = match m.geometry.shape {
            Shape::Cylinder(c) => (
                GeometrySpec::Cylinder {
                    radius_m: c.radius,
                    length_m: c.length,
                    mass_kg: m.geometry.mass,
                    density_kg_m3: m.geometry.density,
                },
                false,
            ),
            Shape::Cube(c) => (
                GeometrySpec::Cube {
                    side_m: c.side,
                    mass_kg: m.geometry.mass,
                    density_kg_m3: m.geometry.density,
                },
                false,
            ),
            Shape::HalfCylinderBar(b) => (
                GeometrySpec::HalfCylinderBar {
                    radius_m: b.radius,
                    length_m: b.length,
                    mass_kg: m.geometry.mass,
                    density_kg_m3: m.geometry.density,
                },
                true,
            ),
        };
        DetectorConfigFile {
            schema_version: SCHEMA_VERSION,
            name: m.name.clone(),
            geometry,
            arrangement: (!is_bar).then_some(ArrangementSpec {
                separation_m: m.arrangement.separation,
                arm_count: m.arrangement.arm_count,
            }),
            response: match m.response {
                ResponseModel::FreeMass => ResponseSpec::FreeMass,
                ResponseModel::Oscillator { omega0, q } => ResponseSpec::Oscillator {
                    resonance_hz: rad_to_hz(omega0),
                    q_factor: q,
                },
                ResponseModel::ResonantBar { omega0, .. } => ResponseSpec::ResonantBar {
                    resonance_hz: rad_to_hz(omega0),
                },
            },
            readout: match m.readout {
                ReadoutKind::Strain { .. } => ReadoutSpec::Strain,
                ReadoutKind::Acceleration => ReadoutSpec::Acceleration,
                ReadoutKind::Force => ReadoutSpec::Force,
                ReadoutKind::Displacement => ReadoutSpec::Displacement,
            },
            bar_variant: is_bar.then_some(match m.bar_variant {
                BarVariant::Printed => BarVariantSpec::Printed,
                BarVariant::Rederived => BarVariantSpec::Rederived,
            }),
            noise: m.noise.iter().map(NoiseSpec::from_noise).collect(),
        }
    }
}

/// Parses config text. `origin` names the source in diagnostics.
pub fn parse_config_file(text: &str, origin: &str) -> Result<DetectorConfigFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        Error::Config {
            path: origin.to_string(),
            field: if field == "." { "<root>".into() } else { field },
            message: e.into_inner().to_string(),
        }
    })
}

pub fn parse_detector_config(text: &str, origin: &str) -> Result<DetectorModel> {
    parse_config_file(text, origin)?.to_model(origin)
}

pub fn load_detector_config(path: impl AsRef<Path>) -> Result<DetectorModel> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: origin.clone(),
        source,
    })?;
    parse_detector_config(&text, &origin)
}

pub fn write_detector_config(model: &DetectorModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(&DetectorConfigFile::from_model(model))
        .expect("config serialises");
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Column header for a one-sided ASD of `q` in spectrum files.
pub fn asd_column(q: Quantity) -> &'static str {
    match q {
        Quantity::Force => "asd_force_n_per_sqrt_hz",
        Quantity::Strain => "asd_strain_per_sqrt_hz",
        Quantity::Acceleration => "asd_acceleration_m_s2_per_sqrt_hz",
        Quantity::Displacement => "asd_displacement_m_per_sqrt_hz",
    }
}

fn quantity_of_column(col: &str) -> Option<Quantity> {
    [
        Quantity::Force,
        Quantity::Strain,
        Quantity::Acceleration,
        Quantity::Displacement,
    ]
    .into_iter()
    .find(|&q| asd_column(q) == col)
}

/// Parses a spectrum CSV: optional `#` comments (a `# sidedness: one_sided`
/// or `two_sided` line declares the convention, one-sided by default), a
/// header `frequency_hz,<asd column>`, then rows in Hz. Two-sided input is
/// converted to one-sided. Errors carry 1-based line numbers.
pub fn parse_spectrum_csv(text: &str, origin: &str, expected: Quantity) -> Result<SpectrumSeries> {
    let fail = |row: usize, message: String| Error::Ingestion {
        path: origin.to_string(),
        row,
        message,
    };
    let mut two_sided = false;
    for (i, line) in text.lines().enumerate() {
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        if let Some(v) = comment.trim().strip_prefix("sidedness:") {
            two_sided = match v.trim() {
                "one_sided" => false,
                "two_sided" => true,
                other => return Err(fail(i + 1, format!("unknown sidedness `{other}`"))),
            };
        }
    }

    // csv skips comment lines without counting them; keep the original
    // line numbers so diagnostics point into the file
    let mut line_of = Vec::new();
    let mut body = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        line_of.push(i + 1);
        body.push_str(line);
        body.push('\n');
    }
    let line_no = |pos: Option<&csv::Position>| {
        pos.and_then(|p| line_of.get((p.line() as usize).wrapping_sub(1)).copied())
            .unwrap_or(0)
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(body.as_bytes());
    let mut records = rdr.records();
    let header = match records.next() {
        None => {
            return Err(fail(
                text.lines().count().max(1),
                "no header row (expected frequency_hz,<asd column>)".into(),
            ))
        }
        Some(r) => r.map_err(|e| fail(line_no(e.position()), e.to_string()))?,
    };
    let header_line = line_no(header.position());
    if header.len() != 2 || &header[0] != "frequency_hz" {
        return Err(fail(
            header_line,
            format!("header must be `frequency_hz,{}`", asd_column(expected)),
        ));
    }
    match quantity_of_column(&header[1]) {
        Some(q) if q == expected => {}
        Some(q) => {
            return Err(fail(
                header_line,
                format!("file holds a {q} spectrum, expected {expected}"),
            ))
        }
        None => {
            return Err(fail(
                header_line,
                format!(
                    "unknown column `{}`, expected `{}`",
                    &header[1],
                    asd_column(expected)
                ),
            ))
        }
    }

    let mut omega = Vec::new();
    let mut asd = Vec::new();
    let mut last_f = 0.0;
    for rec in records {
        let rec = rec.map_err(|e| fail(line_no(e.position()), e.to_string()))?;
        let line = line_no(rec.position());
        if rec.len() != 2 {
            return Err(fail(
                line,
                format!("expected 2 columns, found {}", rec.len()),
            ));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| fail(line, format!("{what} `{s}` is not a number")))
        };
        let f = num(&rec[0], "frequency")?;
        let v = num(&rec[1], "value")?;
        if !(f.is_finite() && f > 0.0) {
            return Err(fail(
                line,
                format!("frequency must be finite and > 0, got {f}"),
            ));
        }
        if !omega.is_empty() && f <= last_f {
            let what = if f == last_f {
                "duplicate"
            } else {
                "descending"
            };
            return Err(fail(
                line,
                format!("{what} frequency {f} Hz after {last_f} Hz"),
            ));
        }
        if !(v.is_finite() && v > 0.0) {
            return Err(fail(line, format!("value must be finite and > 0, got {v}")));
        }
        last_f = f;
        omega.push(hz_to_rad(f));
        asd.push(if two_sided {
            v * std::f64::consts::SQRT_2
        } else {
            v
        });
    }
    if omega.is_empty() {
        return Err(fail(header_line + 1, "no data rows".into()));
    }
    SpectrumSeries::new(omega, asd, expected).map_err(|e| match e {
        Error::Ingestion { row, message, .. } => fail(row, message),
        other => other,
    })
}

pub fn load_spectrum_csv(path: impl AsRef<Path>, expected: Quantity) -> Result<SpectrumSeries> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: origin.clone(),
        source,
    })?;
    parse_spectrum_csv(&text, &origin, expected)
}

/// Writes a spectrum in the format [`parse_spectrum_csv`] reads.
pub fn format_spectrum_csv(series: &SpectrumSeries) -> String {
    let mut out = String::from("# sidedness: one_sided\n");
    let _ = writeln!(out, "frequency_hz,{}", asd_column(series.quantity));
    for (w, v) in series.omega.iter().zip(&series.asd) {
        let _ = writeln!(out, "{:e},{:e}", rad_to_hz(*w), v);
    }
    out
}

pub const EXCLUSION_HEADER: &str = "r_c_m,lambda_max_per_s";

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Serialises a curve: metadata comments, header, one row per grid point.
/// Numbers use the shortest representation that reads back exactly.
pub fn format_exclusion_csv(curve: &ExclusionCurve) -> Result<String> {
    if curve.is_empty() {
        return Err(Error::domain("refusing to write an empty exclusion curve"));
    }
    if curve.r_c.len() != curve.lambda_max.len() {
        return Err(Error::domain("exclusion curve columns differ in length"));
    }
    let mut out = String::new();
    let _ = writeln!(out, "# detector: {}", one_line(&curve.detector));
    let _ = writeln!(out, "# noise: {}", one_line(&curve.noise));
    let _ = writeln!(out, "# provenance: {}", one_line(&curve.provenance));
    let _ = writeln!(out, "# model: {}", curve.path.name());
    let _ = writeln!(
        out,
        "# bar_variant: {}",
        curve.bar_variant.map_or("none", BarVariant::name)
    );
    let _ = writeln!(out, "# generator: csl-bounds {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "{EXCLUSION_HEADER}");
    for (r, l) in curve.r_c.iter().zip(&curve.lambda_max) {
        let _ = writeln!(out, "{r:e},{l:e}");
    }
    Ok(out)
}

pub fn write_exclusion_csv(curve: &ExclusionCurve, path: impl AsRef<Path>) -> Result<()> {
    let text = format_exclusion_csv(curve)?;
    let path = path.as_ref();
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads back a file written by [`write_exclusion_csv`].
pub fn parse_exclusion_csv(text: &str, origin: &str) -> Result<ExclusionCurve> {
    let fail = |row: usize, message: String| Error::Ingestion {
        path: origin.to_string(),
        row,
        message,
    };
    let mut curve = ExclusionCurve {
        detector: String::new(),
        noise: String::new(),
        provenance: String::new(),
        path: ModelPath::ClosedForm,
        bar_variant: None,
        r_c: Vec::new(),
        lambda_max: Vec::new(),
    };
    for (i, line) in text.lines().enumerate() {
        let Some(meta) = line.strip_prefix("# ") else {
            continue;
        };
        let Some((key, value)) = meta.split_once(": ").or_else(|| meta.split_once(':')) else {
            continue;
        };
        let value = value.trim().to_string();
        match key {
            "detector" => curve.detector = value,
            "noise" => curve.noise = value,
            "provenance" => curve.provenance = value,
            "model" => {
                curve.path = value
                    .parse()
                    .map_err(|e: Error| fail(i + 1, e.to_string()))?
            }
            "bar_variant" => {
                curve.bar_variant = match value.as_str() {
                    "none" => None,
                    v => Some(v.parse().map_err(|e: Error| fail(i + 1, e.to_string()))?),
                }
            }
            _ => {}
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| fail(0, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != EXCLUSION_HEADER {
        return Err(fail(0, format!("header must be `{EXCLUSION_HEADER}`")));
    }
    for rec in rdr.records() {
        let rec =
            rec.map_err(|e| fail(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| fail(line, format!("`{s}` is not a number")))
        };
        curve.r_c.push(parse(&rec[0])?);
        curve.lambda_max.push(parse(&rec[1])?);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    fn expect_config_err(text: &str, field_part: &str) {
        match parse_detector_config(text, "t.json") {
            Err(Error::Config { field, .. }) => {
                assert!(
                    field.contains(field_part),
                    "field `{field}` lacks `{field_part}`"
                )
            }
            other => panic!("expected config error on {field_part}, got {other:?}"),
        }
    }

    fn lisa_json() -> serde_json::Value {
        serde_json::from_str(bundled::source("lisa_pathfinder").unwrap()).unwrap()
    }

    #[test]
    fn bundled_configs_parse() {
        for name in bundled::NAMES {
            let m = parse_detector_config(bundled::source(name).unwrap(), name).unwrap();
            assert_eq!(&m.name, name);
        }
    }

    #[test]
    fn negative_separation_names_the_field() {
        let mut v = lisa_json();
        v["arrangement"]["separation_m"] = (-1.0).into();
        expect_config_err(&v.to_string(), "arrangement.separation_m");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let mut v = lisa_json();
        v["geometry"]["colour"] = "grey".into();
        expect_config_err(&v.to_string(), "geometry");
        let mut v = lisa_json();
        v["extra"] = 1.into();
        expect_config_err(&v.to_string(), "extra");
    }

    #[test]
    fn wrong_type_names_the_field() {
        let mut v = lisa_json();
        v["noise"][0]["psd_acceleration_m2_s4_per_hz"] = "small".into();
        expect_config_err(&v.to_string(), "noise[0].psd_acceleration_m2_s4_per_hz");
    }

    #[test]
    fn missing_schema_version() {
        let mut v = lisa_json();
        v.as_object_mut().unwrap().remove("schema_version");
        assert!(matches!(
            parse_detector_config(&v.to_string(), "t"),
            Err(Error::Config { .. })
        ));
        let mut v = lisa_json();
        v["schema_version"] = 7.into();
        expect_config_err(&v.to_string(), "schema_version");
    }

    #[test]
    fn density_mismatch() {
        let mut v = lisa_json();
        v["geometry"]["density_kg_m3"] = 30000.0.into();
        expect_config_err(&v.to_string(), "geometry.mass_kg");
    }

    #[test]
    fn noise_value_keys() {
        let mut v = lisa_json();
        v["noise"][0]["asd_force_n_per_sqrt_hz"] = 1e-15.into();
        expect_config_err(&v.to_string(), "noise[0]");
        let mut v = lisa_json();
        v["noise"][0]
            .as_object_mut()
            .unwrap()
            .remove("psd_acceleration_m2_s4_per_hz");
        expect_config_err(&v.to_string(), "noise[0]");
        let mut v = lisa_json();
        v["noise"][0]["attributable_fraction"] = 0.0.into();
        expect_config_err(&v.to_string(), "noise[0].attributable_fraction");
    }

    #[test]
    fn missing_mass() {
        let mut v = lisa_json();
        v["geometry"].as_object_mut().unwrap().remove("mass_kg");
        expect_config_err(&v.to_string(), "geometry");
    }

    #[test]
    fn bar_rejects_arm_count_two() {
        let mut v: serde_json::Value =
            serde_json::from_str(bundled::source("auriga").unwrap()).unwrap();
        v["arrangement"] = serde_json::json!({"separation_m": 1.5, "arm_count": 2});
        expect_config_err(&v.to_string(), "arrangement");
    }

    #[test]
    fn config_file_round_trip_is_exact() {
        for name in bundled::NAMES {
            let file = parse_config_file(bundled::source(name).unwrap(), name).unwrap();
            let text = serde_json::to_string_pretty(&file).unwrap();
            assert_eq!(parse_config_file(&text, name).unwrap(), file);
            let model = file.to_model(name).unwrap();
            let again = DetectorConfigFile::from_model(&model)
                .to_model(name)
                .unwrap();
            assert_eq!(again.geometry, model.geometry);
            assert_eq!(again.arrangement, model.arrangement);
            assert_eq!(again.bar_variant, model.bar_variant);
            for (a, b) in again.noise.iter().zip(&model.noise) {
                assert_eq!(a.psd, b.psd);
                assert_eq!(a.attributable_fraction, b.attributable_fraction);
            }
        }
    }

    const STRAIN_CSV: &str = "# test\nfrequency_hz,asd_strain_per_sqrt_hz\n10,1e-22\n20,5e-23\n";

    #[test]
    fn spectrum_two_rows() {
        let s = parse_spectrum_csv(STRAIN_CSV, "s.csv", Quantity::Strain).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.asd, vec![1e-22, 5e-23]);
        assert_eq!(s.omega[0], hz_to_rad(10.0));
    }

    #[test]
    fn spectrum_errors_name_rows() {
        let desc = "frequency_hz,asd_strain_per_sqrt_hz\n10,1e-22\n# gap\n5,1e-22\n";
        match parse_spectrum_csv(desc, "s.csv", Quantity::Strain) {
            Err(Error::Ingestion { row, message, .. }) => {
                assert_eq!(row, 4);
                assert!(message.contains("descending"));
            }
            other => panic!("{other:?}"),
        }
        let dup = "frequency_hz,asd_strain_per_sqrt_hz\n10,1e-22\n10,1e-22\n";
        assert!(matches!(
            parse_spectrum_csv(dup, "s", Quantity::Strain),
            Err(Error::Ingestion { row: 3, .. })
        ));
        let nan = "frequency_hz,asd_strain_per_sqrt_hz\n10,NaN\n";
        assert!(matches!(
            parse_spectrum_csv(nan, "s", Quantity::Strain),
            Err(Error::Ingestion { row: 2, .. })
        ));
        let zero_f = "frequency_hz,asd_strain_per_sqrt_hz\n0,1e-22\n";
        assert!(parse_spectrum_csv(zero_f, "s", Quantity::Strain).is_err());
        assert!(matches!(
            parse_spectrum_csv("", "s", Quantity::Strain),
            Err(Error::Ingestion { .. })
        ));
        assert!(matches!(
            parse_spectrum_csv(
                "frequency_hz,asd_strain_per_sqrt_hz\n",
                "s",
                Quantity::Strain
            ),
            Err(Error::Ingestion { row: 2, .. })
        ));
    }

    #[test]
    fn spectrum_kind_mismatch() {
        match parse_spectrum_csv(STRAIN_CSV, "s.csv", Quantity::Acceleration) {
            Err(Error::Ingestion {
                row: 2, message, ..
            }) => assert!(message.contains("strain")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spectrum_two_sided_is_folded() {
        let text = "# sidedness: two_sided\nfrequency_hz,asd_force_n_per_sqrt_hz\n1,1\n";
        let s = parse_spectrum_csv(text, "s", Quantity::Force).unwrap();
        assert_eq!(s.asd[0], std::f64::consts::SQRT_2);
        let bad = "# sidedness: both\nfrequency_hz,asd_force_n_per_sqrt_hz\n1,1\n";
        assert!(parse_spectrum_csv(bad, "s", Quantity::Force).is_err());
    }

    #[test]
    fn spectrum_format_round_trip() {
        let s = parse_spectrum_csv(STRAIN_CSV, "s", Quantity::Strain).unwrap();
        let back = parse_spectrum_csv(&format_spectrum_csv(&s), "s", Quantity::Strain).unwrap();
        assert_eq!(back.asd, s.asd);
        for (a, b) in back.omega.iter().zip(&s.omega) {
            assert!(((a - b) / b).abs() < 1e-15);
        }
    }

    fn curve(n: usize) -> ExclusionCurve {
        ExclusionCurve {
            detector: "lisa_pathfinder".into(),
            noise: "measured".into(),
            provenance: "test\nvalue".into(),
            path: ModelPath::ClosedForm,
            bar_variant: None,
            r_c: (0..n).map(|i| 1e-9 * 1.7f64.powi(i as i32)).collect(),
            lambda_max: (0..n).map(|i| 0.1 / (i as f64 + 3.0)).collect(),
        }
    }

    #[test]
    fn exclusion_csv_structure() {
        let text = format_exclusion_csv(&curve(200)).unwrap();
        let comments = text.lines().filter(|l| l.starts_with('#')).count();
        assert!(comments >= 4);
        let rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 201);
        assert!(text.contains(&format!("\n{EXCLUSION_HEADER}\n")));
        assert!(text.contains("# provenance: test value\n"));
        assert_eq!(text, format_exclusion_csv(&curve(200)).unwrap());
        assert!(format_exclusion_csv(&curve(0)).is_err());
    }

    #[test]
    fn exclusion_csv_round_trip_is_exact() {
        let mut c = curve(50);
        c.provenance = "test value".into();
        c.bar_variant = Some(BarVariant::Printed);
        c.path = ModelPath::Quadrature;
        let back = parse_exclusion_csv(&format_exclusion_csv(&c).unwrap(), "c").unwrap();
        assert_eq!(back, c);
    }
}
