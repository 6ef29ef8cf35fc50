//! Upper bounds on the collapse rate from measured detector noise.
//!
//! Attributing the whole (attributable) measured force noise to CSL bounds
//! `lambda` at each `r_c`. The measured figure is one-sided and the model
//! two-sided; the factor 2 between them is applied here and nowhere else.

use rayon::prelude::*;

use crate::csl::{
    sff_closed_form, sff_quadrature, BarVariant, CslParams, QuadratureOptions, Shape,
};
use crate::detector::{DetectorModel, MeasuredNoise};
use crate::error::{Error, Result};
use crate::response::{equivalent_force_asd_freemass, ReadoutKind, ResponseModel, SpectrumSeries};
use crate::units::{C, HBAR, M0, M_PLANCK};

/// Which evaluation of the model PSD a bound was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelPath {
    ClosedForm,
    Quadrature,
}

impl ModelPath {
    pub fn name(self) -> &'static str {
        match self {
            ModelPath::ClosedForm => "closed_form",
            ModelPath::Quadrature => "quadrature",
        }
    }
}

impl std::str::FromStr for ModelPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_form" | "closed-form" => Ok(ModelPath::ClosedForm),
            "quadrature" => Ok(ModelPath::Quadrature),
            other => Err(Error::domain(format!(
                "unknown model path `{other}` (expected closed-form or quadrature)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionCurve {
    pub detector: String,
    pub noise: String,
    pub provenance: String,
    pub path: ModelPath,
    /// Set for bar detectors only.
    pub bar_variant: Option<BarVariant>,
    pub r_c: Vec<f64>,
    pub lambda_max: Vec<f64>,
}

impl ExclusionCurve {
    pub fn len(&self) -> usize {
        self.r_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_c.is_empty()
    }

    /// Grid point with the smallest bound.
    pub fn minimum(&self) -> Option<(f64, f64)> {
        self.lambda_max
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &l)| (self.r_c[i], l))
    }

    /// Interior indices that are strict local minima.
    pub fn local_minima(&self) -> Vec<usize> {
        let l = &self.lambda_max;
        (1..l.len().saturating_sub(1))
            .filter(|&i| l[i] < l[i - 1] && l[i] < l[i + 1])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllisReport {
    pub eta_ellis: f64,
    pub eta_exp: f64,
    pub ratio: f64,
}

/// `n` points from `min` to `max`, evenly spaced in log r.
pub fn log_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min > 0.0 && max > min) {
        return Err(Error::domain(format!(
            "need 0 < min < max, got [{min}, {max}]"
        )));
    }
    if n < 2 {
        return Err(Error::domain(format!(
            "need at least 2 grid points, got {n}"
        )));
    }
    let (lo, hi) = (min.log10(), max.log10());
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| match i {
            0 => min,
            i if i == n - 1 => max,
            i => 10f64.powf(lo + step * i as f64),
        })
        .collect())
}

fn model_psd(
    det: &DetectorModel,
    r_c: f64,
    path: ModelPath,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let p = CslParams::new(1.0, r_c)?;
    let s = match path {
        ModelPath::ClosedForm => {
            sff_closed_form(&p, &det.geometry, &det.arrangement, det.bar_variant)?
        }
        ModelPath::Quadrature => sff_quadrature(&p, &det.geometry, &det.arrangement, opts)?.psd,
    };
    Ok(s.value())
}

/// Largest `lambda` (1/s) compatible with `noise` at `r_c`, from the
/// closed-form model.
pub fn lambda_max(det: &DetectorModel, noise: &MeasuredNoise, r_c: f64) -> Result<f64> {
    lambda_max_with(
        det,
        noise,
        r_c,
        ModelPath::ClosedForm,
        &QuadratureOptions::default(),
    )
}

pub fn lambda_max_with(
    det: &DetectorModel,
    noise: &MeasuredNoise,
    r_c: f64,
    path: ModelPath,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let measured = det.measured_force_psd(noise)?.value;
    bound_from_force(det, measured, r_c, path, opts)
}

fn bound_from_force(
    det: &DetectorModel,
    measured_one_sided: f64,
    r_c: f64,
    path: ModelPath,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let model = model_psd(det, r_c, path, opts)?;
    if !(model > 0.0 && model.is_finite()) {
        return Err(Error::Unbounded { r_c });
    }
    Ok(measured_one_sided / (2.0 * model))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::domain("empty r_c grid"));
    }
    for (i, &r) in grid.iter().enumerate() {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::domain(format!(
                "r_c grid point {i} must be > 0, got {r}"
            )));
        }
        if i > 0 && r <= grid[i - 1] {
            return Err(Error::domain(format!(
                "r_c grid must be strictly ascending (point {i})"
            )));
        }
    }
    Ok(())
}

/// Bounds on every grid point, evaluated in parallel and returned in grid
/// order.
pub fn exclusion_curve(
    det: &DetectorModel,
    noise: &MeasuredNoise,
    grid: &[f64],
    path: ModelPath,
    opts: &QuadratureOptions,
) -> Result<ExclusionCurve> {
    check_grid(grid)?;
    let measured = det.measured_force_psd(noise)?.value;
    let lambda_max = grid
        .par_iter()
        .map(|&r| bound_from_force(det, measured, r, path, opts))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ExclusionCurve {
        detector: det.name.clone(),
        noise: noise.name.clone(),
        provenance: noise.provenance.clone(),
        path,
        bar_variant: match det.geometry.shape {
            Shape::HalfCylinderBar(_) => Some(det.bar_variant),
            _ => None,
        },
        r_c: grid.to_vec(),
        lambda_max,
    })
}

/// Relative tolerance under which two force ASD values count as equal when
/// picking the optimal frequency.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Grid frequency (rad/s) minimising the equivalent force ASD of a measured
/// strain spectrum on a free-mass detector, and that minimum (N/sqrt(Hz)).
/// Ties go to the lowest frequency.
pub fn optimal_frequency(series: &SpectrumSeries, det: &DetectorModel) -> Result<(f64, f64)> {
    let arm_length = match (det.response, det.readout) {
        (ResponseModel::FreeMass, ReadoutKind::Strain { arm_length }) => arm_length,
        _ => {
            return Err(Error::UnsupportedReadout(format!(
                "detector `{}` is not a free-mass strain detector",
                det.name
            )))
        }
    };
    let force = equivalent_force_asd_freemass(series, det.geometry.mass, arm_length)?;
    let min = force.asd.iter().copied().fold(f64::INFINITY, f64::min);
    let i = force
        .asd
        .iter()
        .position(|&v| v <= min * (1.0 + TIE_TOLERANCE))
        .expect("nonempty series");
    Ok((force.omega[i], force.asd[i]))
}

/// Ellis wormhole-decoherence diffusion coefficient (1/(m² s)),
/// `(c m0)^4 m² / (hbar m_Pl)^3`.
pub fn ellis_eta(m: f64) -> Result<f64> {
    if !(m.is_finite() && m >= 0.0) {
        return Err(Error::domain(format!("mass must be >= 0, got {m}")));
    }
    let cm0 = C * M0;
    let hm = HBAR * M_PLANCK;
    Ok((cm0 * cm0) * (cm0 * cm0) * (m * m) / (hm * hm * hm))
}

/// Compares the Ellis coefficient with the diffusion coefficient implied by
/// the measured force noise, `eta_exp = S_FF / hbar²` with the one-sided
/// attributable force PSD.
pub fn ellis_ratio(det: &DetectorModel, noise: &MeasuredNoise) -> Result<EllisReport> {
    let s = det.measured_force_psd(noise)?.value;
    let eta_exp = s / (HBAR * HBAR);
    let eta_ellis = ellis_eta(det.geometry.mass)?;
    Ok(EllisReport {
        eta_ellis,
        eta_exp,
        ratio: eta_ellis / eta_exp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::units::{hz_to_rad, Quantity};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn lisa_bound() {
        let d = bundled::lisa_pathfinder();
        let l = lambda_max(&d, d.noise_entry(None).unwrap(), 1e-7).unwrap();
        assert!(rel(l, 2.981_56e-8) < 1e-5, "{l}");
    }

    #[test]
    fn doubling_noise_doubles_bound() {
        let d = bundled::lisa_pathfinder();
        let n = d.noise_entry(None).unwrap();
        let grid = log_grid(1e-9, 1e2, 17).unwrap();
        let opts = QuadratureOptions::default();
        let a = exclusion_curve(&d, n, &grid, ModelPath::ClosedForm, &opts).unwrap();
        let b = exclusion_curve(&d, &n.scaled(2.0), &grid, ModelPath::ClosedForm, &opts).unwrap();
        for (x, y) in a.lambda_max.iter().zip(&b.lambda_max) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn coincident_masses_are_unbounded() {
        let mut d = bundled::lisa_pathfinder();
        d.arrangement.separation = 0.0;
        let e = lambda_max(&d, d.noise_entry(None).unwrap(), 1e-3).unwrap_err();
        assert!(matches!(e, Error::Unbounded { .. }));
    }

    #[test]
    fn grid_checks() {
        assert!(log_grid(1.0, 1.0, 5).is_err());
        assert!(log_grid(1.0, 10.0, 1).is_err());
        let g = log_grid(1e-9, 1e2, 200).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!((g[0], g[199]), (1e-9, 1e2));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let d = bundled::lisa_pathfinder();
        let n = d.noise_entry(None).unwrap();
        let opts = QuadratureOptions::default();
        assert!(exclusion_curve(&d, n, &[1e-3, 1e-4], ModelPath::ClosedForm, &opts).is_err());
        assert!(exclusion_curve(&d, n, &[], ModelPath::ClosedForm, &opts).is_err());
    }

    fn strain_series(omega: Vec<f64>, f: impl Fn(f64) -> f64) -> SpectrumSeries {
        let asd = omega.iter().map(|&w| f(w)).collect();
        SpectrumSeries::new(omega, asd, Quantity::Strain).unwrap()
    }

    #[test]
    fn optimal_frequency_cases() {
        let d = bundled::ligo();
        let omega: Vec<f64> = (1..=60).map(|i| hz_to_rad(i as f64)).collect();
        let (w, _) = optimal_frequency(&strain_series(omega.clone(), |_| 1e-23), &d).unwrap();
        assert_eq!(w, omega[0]);
        let (w, _) =
            optimal_frequency(&strain_series(omega.clone(), |w| 1e-20 / (w * w)), &d).unwrap();
        assert_eq!(w, omega[0]);
        // slopes -3 then -1 on log-log axes, kink at 30 Hz
        let kink = hz_to_rad(30.0);
        let v = |w: f64| 1e-23 * f64::max((w / kink).powi(-3), (w / kink).powi(-1));
        let (w, s) = optimal_frequency(&strain_series(omega.clone(), v), &d).unwrap();
        assert_eq!(w, kink);
        assert!(rel(s, 0.5 * 40.0 * 4000.0 * kink * kink * 1e-23) < 1e-15);
        // argmin does not move under rescaling, the minimum scales
        let (w2, s2) = optimal_frequency(&strain_series(omega, |w| 7.0 * v(w)), &d).unwrap();
        assert_eq!(w2, w);
        assert!(rel(s2, 7.0 * s) < 1e-15);
        assert!(optimal_frequency(&strain_series(vec![1.0], |_| 1.0), &bundled::auriga()).is_err());
    }

    #[test]
    fn ellis_values() {
        // (c m0)^4 m² / (hbar m_Pl)^3 evaluated in 40-digit arithmetic
        assert!(rel(ellis_eta(1.928).unwrap(), 1.888_114e52) < 1e-6);
        assert_eq!(ellis_eta(0.0).unwrap(), 0.0);
        assert!(
            rel(
                ellis_eta(2.0 * 1.928).unwrap(),
                4.0 * ellis_eta(1.928).unwrap()
            ) < 1e-15
        );
        assert!(ellis_eta(-1.0).is_err());
    }

    #[test]
    fn ellis_ratio_scaling() {
        let d = bundled::lisa_pathfinder();
        let n = d.noise_entry(None).unwrap();
        let r = ellis_ratio(&d, n).unwrap();
        assert!((1e12..=1e13).contains(&r.ratio), "{}", r.ratio);
        assert!(rel(r.eta_exp, 1.928f64.powi(2) * 2.7e-29 / 4.0 / (HBAR * HBAR)) < 1e-15);
        let r2 = ellis_ratio(&d, &n.scaled(2.0)).unwrap();
        assert!(rel(r2.ratio, 0.5 * r.ratio) < 1e-15);
    }
}
