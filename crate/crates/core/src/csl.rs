//! CSL force-noise spectral densities on pairs of test masses.
//!
//! All densities returned here are two-sided, in N^2/Hz, for the relative
//! coordinate of the pair (`F_rel = (F1 - F2)/2`). CSL noise is white, so
//! none of them depend on frequency.
//!
//! Two independent routes are provided: closed forms for the cylinder and
//! cube pairs and for the resonant bar, and a direct evaluation of the
//! k-space integral over the mass form factors ([`sff_quadrature`]). The
//! latter serves as the oracle for the former.
//!
//! The linearised noise model assumes the spread of each centre of mass is
//! much smaller than `r_c`. That is not checked at runtime.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{
    self, geometric_breaks, integrate, integrate_oscillatory, uniform_breaks, Budget, Estimate,
    Tolerance,
};
use crate::specfun::{erf, i0e, i1e, j1, sinc_half};
use crate::units::{
    DensityKind, Quantity, Sidedness, SpectralConvention, SpectralDensity, HBAR, M0,
};

/// Collapse rate `lambda` (1/s) and correlation length `r_c` (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CslParams {
    pub lambda: f64,
    pub r_c: f64,
}

impl CslParams {
    pub fn new(lambda: f64, r_c: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::domain(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        if !(r_c.is_finite() && r_c > 0.0) {
            return Err(Error::domain(format!(
                "r_c must be finite and > 0, got {r_c}"
            )));
        }
        Ok(CslParams { lambda, r_c })
    }
}

/// Cylinder with its axis along the measurement direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub radius: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    pub side: f64,
}

/// A resonant bar of full length `length`, modelled as two touching
/// half-cylinders of length `length/2` and half the mass each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfCylinderBar {
    pub radius: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Cylinder(Cylinder),
    Cube(Cube),
    HalfCylinderBar(HalfCylinderBar),
}

impl Shape {
    pub fn volume(&self) -> f64 {
        match *self {
            Shape::Cylinder(Cylinder { radius, length })
            | Shape::HalfCylinderBar(HalfCylinderBar { radius, length }) => {
                PI * radius * radius * length
            }
            Shape::Cube(Cube { side }) => side * side * side,
        }
    }

    /// Transverse size for cylinders, the side for cubes.
    pub fn characteristic_length(&self) -> f64 {
        match *self {
            Shape::Cylinder(c) => c.radius,
            Shape::HalfCylinderBar(b) => b.radius,
            Shape::Cube(c) => c.side,
        }
    }

    fn dimensions(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Shape::Cylinder(c) => vec![("radius", c.radius), ("length", c.length)],
            Shape::HalfCylinderBar(b) => vec![("radius", b.radius), ("length", b.length)],
            Shape::Cube(c) => vec![("side", c.side)],
        }
    }
}

/// Maximum relative mismatch between declared mass and density x volume.
pub const DENSITY_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassGeometry {
    pub shape: Shape,
    /// Mass of one test mass (kg); for the bar, the whole bar.
    pub mass: f64,
    pub density: Option<f64>,
}

impl MassGeometry {
    pub fn new(shape: Shape, mass: f64, density: Option<f64>) -> Result<Self> {
        for (name, v) in shape.dimensions() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::domain(format!("mass must be > 0, got {mass}")));
        }
        if let Some(rho) = density {
            if !(rho.is_finite() && rho > 0.0) {
                return Err(Error::domain(format!("density must be > 0, got {rho}")));
            }
            let mismatch = (mass - rho * shape.volume()).abs() / mass;
            if mismatch > DENSITY_TOLERANCE {
                return Err(Error::domain(format!(
                    "mass {mass} kg inconsistent with density x volume = {:.4} kg ({:.2} % off)",
                    rho * shape.volume(),
                    100.0 * mismatch
                )));
            }
        }
        Ok(MassGeometry {
            shape,
            mass,
            density,
        })
    }
}

/// Centre-to-centre separation along x, and the number of independent
/// arms the detector reads out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassArrangement {
    pub separation: f64,
    pub arm_count: u32,
}

impl MassArrangement {
    pub fn new(separation: f64, arm_count: u32) -> Result<Self> {
        if !(separation.is_finite() && separation >= 0.0) {
            return Err(Error::domain(format!(
                "separation must be >= 0, got {separation}"
            )));
        }
        if !(1..=2).contains(&arm_count) {
            return Err(Error::domain(format!(
                "arm_count must be 1 or 2, got {arm_count}"
            )));
        }
        Ok(MassArrangement {
            separation,
            arm_count,
        })
    }

    /// The two halves of a bar touch: `a = L/2`, one arm.
    pub fn for_bar(bar: &HalfCylinderBar) -> Self {
        MassArrangement {
            separation: 0.5 * bar.length,
            arm_count: 1,
        }
    }

    /// Checks the arrangement is admissible for `shape`.
    pub fn check(&self, shape: &Shape) -> Result<()> {
        if let Shape::HalfCylinderBar(bar) = shape {
            let forced = Self::for_bar(bar);
            if self.arm_count != 1
                || (self.separation - forced.separation).abs() > 1e-12 * bar.length
            {
                return Err(Error::domain(format!(
                    "a half-cylinder bar requires separation L/2 = {} m and one arm",
                    forced.separation
                )));
            }
        }
        Ok(())
    }
}

/// Two-sided force PSD (N^2/Hz). White: the same at every frequency.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ForcePsd(pub f64);

impl ForcePsd {
    pub fn value(self) -> f64 {
        self.0
    }

    /// As a tagged two-sided force density.
    pub fn density(self) -> SpectralDensity {
        SpectralDensity {
            value: self.0,
            convention: SpectralConvention {
                sidedness: Sidedness::TwoSided,
                quantity: Quantity::Force,
                density_kind: DensityKind::Power,
            },
        }
    }

    pub fn one_sided(self) -> SpectralDensity {
        let two = self.density();
        two.relabel(2.0 * self.0, Quantity::Force)
            .with_sidedness(Sidedness::OneSided)
    }
}

/// Momentum diffusion rate `eta` (1/(m^2 s)), `eta = S_FF / hbar^2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DiffusionRate(pub f64);

/// Which axial factor to use for the resonant bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BarVariant {
    /// `3/2 - e^{-L^2/4r^2}/2 - e^{-L^2/16r^2}`, as published.
    Printed,
    /// The pair axial factor evaluated with `a = L/2` and length `L/2`:
    /// `3/2 + e^{-L^2/4r^2}/2 - 2 e^{-L^2/16r^2}`.
    #[default]
    Rederived,
}

impl BarVariant {
    pub fn name(self) -> &'static str {
        match self {
            BarVariant::Printed => "printed",
            BarVariant::Rederived => "rederived",
        }
    }
}

impl std::str::FromStr for BarVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(BarVariant::Printed),
            "rederived" => Ok(BarVariant::Rederived),
            other => Err(Error::domain(format!(
                "unknown bar variant `{other}` (expected printed or rederived)"
            ))),
        }
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}

/// Correlation term between the two masses of a pair.
///
/// `½ e^{-(a+L)²/4r²} (1 + e^{aL/r²} - 2 e^{L(2a+L)/4r²})`, with each term's
/// exponent combined before exponentiating so nothing overflows.
pub fn f_corr(a: f64, l: f64, r_c: f64) -> Result<f64> {
    check_finite("a", a)?;
    check_finite("L", l)?;
    check_finite("r_c", r_c)?;
    if a < 0.0 || l <= 0.0 || r_c <= 0.0 {
        return Err(Error::domain(format!(
            "f_corr needs a >= 0, L > 0, r_c > 0 (a = {a}, L = {l}, r_c = {r_c})"
        )));
    }
    let t = 0.25 / (r_c * r_c);
    let e_sum = (-(a + l) * (a + l) * t).exp();
    let e_diff = (-(a - l) * (a - l) * t).exp();
    let e_sep = (-a * a * t).exp();
    Ok(0.5 * e_sum + 0.5 * e_diff - e_sep)
}

/// `1 - e^{-L²/4r²} + f_corr`: the part of a pair PSD that carries the
/// separation. Nonnegative; zero when `a = 0`.
///
/// Evaluated as `(1 - e^{-L²t})(1 - e^{-a²t}) + e^{-(a²+L²)t}(cosh(2aLt) - 1)`
/// with `t = 1/4r²`, a sum of nonnegative terms, so the large-r_c regime
/// keeps full relative precision.
pub fn axial_factor(a: f64, l: f64, r_c: f64) -> Result<f64> {
    let fc = f_corr(a, l, r_c)?;
    let t = 0.25 / (r_c * r_c);
    let x = a * l * t;
    if x > 20.0 {
        // cosh overflows eventually; the direct sum has no cancellation here
        return Ok((1.0 - (-l * l * t).exp()) + fc);
    }
    let sh = x.sinh();
    let spread = -(-l * l * t).exp_m1() * -(-a * a * t).exp_m1();
    Ok(spread + (-(a * a + l * l) * t).exp() * 2.0 * sh * sh)
}

// x below which 1 - e^{-x}(I0 + I1)(x) is summed as a power series
const RADIAL_SERIES_THRESHOLD: f64 = 0.1;

/// `1 - e^{-x}(I0(x) + I1(x))` at `x = R²/2r²`: the transverse factor of a
/// cylinder pair.
pub fn radial_bracket(radius: f64, r_c: f64) -> Result<f64> {
    let x = radius * radius / (2.0 * r_c * r_c);
    if !x.is_finite() {
        return Err(Error::domain(format!(
            "R^2/2r_c^2 not finite (R = {radius}, r_c = {r_c})"
        )));
    }
    if x < RADIAL_SERIES_THRESHOLD {
        return Ok(radial_bracket_series(x));
    }
    Ok(1.0 - (i0e(x)? + i1e(x)?))
}

fn radial_bracket_series(x: f64) -> f64 {
    const TERMS: usize = 14;
    // coefficients of I0 + I1
    let mut b = [0.0; TERMS + 1];
    let mut fact = [1.0; TERMS + 2];
    for k in 1..TERMS + 2 {
        fact[k] = fact[k - 1] * k as f64;
    }
    for (n, bn) in b.iter_mut().enumerate() {
        let k = n / 2;
        let quarter_k = 0.25f64.powi(k as i32);
        *bn = if n % 2 == 0 {
            quarter_k / (fact[k] * fact[k])
        } else {
            0.5 * quarter_k / (fact[k] * fact[k + 1])
        };
    }
    // 1 - e^{-x}(I0 + I1) = -sum_{n>=1} s_n x^n
    let mut sum = 0.0;
    let mut xn = 1.0;
    for n in 1..=TERMS {
        xn *= x;
        let mut s_n = 0.0;
        for j in 0..=n {
            let e_j = if j % 2 == 0 { 1.0 } else { -1.0 } / fact[j];
            s_n += e_j * b[n - j];
        }
        sum -= s_n * xn;
    }
    sum
}

/// `1 - e^{-y²} - sqrt(pi) y erf(y)` at `y = L/2r`: the transverse factor of
/// a cube pair (always negative, squared in the PSD).
pub fn cube_bracket(side: f64, r_c: f64) -> Result<f64> {
    let y = 0.5 * side / r_c;
    if !y.is_finite() {
        return Err(Error::domain(format!(
            "L/2r_c not finite (L = {side}, r_c = {r_c})"
        )));
    }
    if y < 1.0 {
        // sum_{m>=1} (-1)^m y^{2m} / (m! (2m-1))
        let y2 = y * y;
        let mut pow_over_fact = 1.0;
        let mut sum = 0.0;
        for m in 1..40 {
            pow_over_fact *= y2 / m as f64;
            let term = pow_over_fact / (2 * m - 1) as f64;
            sum += if m % 2 == 0 { term } else { -term };
            if term <= 1e-18 * sum.abs() {
                break;
            }
        }
        return Ok(sum);
    }
    Ok(1.0 - (-y * y).exp() - PI.sqrt() * y * erf(y)?)
}

fn prefactor(lambda: f64, mass: f64, length: f64) -> f64 {
    // hbar^2 m^2 / (L^2 m0^2), times lambda last so that scaling lambda is exact
    let ratio = HBAR / M0;
    lambda * (mass * mass) * (ratio * ratio / (length * length))
}

/// Closed-form PSD for a pair of coaxial cylinders, summed over
/// `arm_count` independent arms (`arm_count = 2` is the two-arm
/// interferometer expression).
pub fn sff_cylinder_pair(
    p: &CslParams,
    g: &Cylinder,
    mass: f64,
    a: f64,
    arm_count: u32,
) -> Result<ForcePsd> {
    let r = p.r_c;
    let axial = axial_factor(a, g.length, r)?;
    let radial = radial_bracket(g.radius, r)?;
    let geometric = (r / g.radius).powi(2) * axial * radial;
    Ok(ForcePsd(
        4.0 * arm_count as f64 * prefactor(p.lambda, mass, g.length) * geometric,
    ))
}

/// Closed-form PSD for a pair of cubes separated by `a` along x.
pub fn sff_cube_pair(p: &CslParams, g: &Cube, mass: f64, a: f64) -> Result<ForcePsd> {
    let r = p.r_c;
    let l = g.side;
    let axial = axial_factor(a, l, r)?;
    let b = cube_bracket(l, r)?;
    let geometric = (r / l).powi(4) * axial * b * b;
    Ok(ForcePsd(16.0 * prefactor(p.lambda, mass, l) * geometric))
}

/// Axial factor of the bar under the chosen variant.
pub fn bar_axial_factor(length: f64, r_c: f64, variant: BarVariant) -> Result<f64> {
    match variant {
        BarVariant::Rederived => axial_factor(0.5 * length, 0.5 * length, r_c),
        BarVariant::Printed => {
            let s = length * length / (16.0 * r_c * r_c);
            if s < 1.0 / 16.0 {
                // sum_{n>=1} -(-1)^n (4^n/2 + 1) s^n / n!
                let mut sum = 0.0;
                let mut s_over_fact = 1.0;
                let mut four_n = 1.0;
                for n in 1..30 {
                    s_over_fact *= s / n as f64;
                    four_n *= 4.0;
                    let term = (0.5 * four_n + 1.0) * s_over_fact;
                    sum += if n % 2 == 0 { -term } else { term };
                    if term <= 1e-18 * sum.abs() {
                        break;
                    }
                }
                Ok(sum)
            } else {
                Ok(1.5 - 0.5 * (-4.0 * s).exp() - (-s).exp())
            }
        }
    }
}

/// Closed-form PSD of the resonant bar.
pub fn sff_auriga(
    p: &CslParams,
    g: &HalfCylinderBar,
    mass: f64,
    variant: BarVariant,
) -> Result<ForcePsd> {
    let r = p.r_c;
    let axial = bar_axial_factor(g.length, r, variant)?;
    let radial = radial_bracket(g.radius, r)?;
    let geometric = (r / g.radius).powi(2) * axial * radial;
    Ok(ForcePsd(
        4.0 * prefactor(p.lambda, mass, g.length) * geometric,
    ))
}

/// Dispatches to the closed form matching the geometry. Cube pairs are
/// multiplied by `arm_count`; bars ignore the arrangement.
pub fn sff_closed_form(
    p: &CslParams,
    g: &MassGeometry,
    arr: &MassArrangement,
    variant: BarVariant,
) -> Result<ForcePsd> {
    arr.check(&g.shape)?;
    match &g.shape {
        Shape::Cylinder(c) => sff_cylinder_pair(p, c, g.mass, arr.separation, arr.arm_count),
        Shape::Cube(c) => {
            let one = sff_cube_pair(p, c, g.mass, arr.separation)?;
            Ok(ForcePsd(arr.arm_count as f64 * one.0))
        }
        Shape::HalfCylinderBar(b) => sff_auriga(p, b, g.mass, variant),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub max_evaluations: u64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            rel_tol: 1e-9,
            max_evaluations: quadrature::DEFAULT_MAX_EVALUATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub psd: ForcePsd,
    /// Estimated relative error of `psd`.
    pub rel_err: f64,
    pub evaluations: u64,
}

// All 1-D integrals are taken in u = r_c k, cut off where e^{-u^2} < 1e-21.
const U_MAX: f64 = 7.0;
// Largest phase (radians) integrated panel by panel; beyond it the
// oscillating factors are split off and handled by the Legendre-Filon rule.
const DIRECT_PHASE: f64 = 1e4;
// Bessel argument where the cylinder integral switches to Hankel's expansion.
const HANKEL_START: f64 = 2000.0;

fn half_period_breaks(omega: f64, a: f64, b: f64) -> Vec<f64> {
    let n = ((omega * (b - a) / PI).ceil() as usize).max(8);
    uniform_breaks(a, b, n)
}

fn add(x: Estimate, y: Estimate, wy: f64) -> Estimate {
    Estimate {
        value: x.value + wy * y.value,
        abs_err: x.abs_err + wy.abs() * y.abs_err,
    }
}

/// `int_0^U e^{-u^2} cos(w u) du`
fn gaussian_cosine(omega: f64, abs_tol: f64, budget: &mut Budget) -> Result<Estimate> {
    if omega * U_MAX <= DIRECT_PHASE {
        let tol = Tolerance {
            rel: 0.0,
            abs: abs_tol,
        };
        Ok(integrate(
            |u: f64| (-u * u).exp() * (omega * u).cos(),
            &half_period_breaks(omega, 0.0, U_MAX),
            tol,
            budget,
        )?)
    } else {
        let est = integrate_oscillatory(
            |u: f64| (-u * u).exp(),
            omega,
            &uniform_breaks(0.0, U_MAX, 14),
            abs_tol,
            budget,
        )?;
        Ok(Estimate {
            value: est.value.0,
            abs_err: est.abs_err,
        })
    }
}

/// `int_0^U sin²(alpha u) (1 - cos(beta u)) e^{-u²} du`, with
/// `alpha = L/2r`, `beta = a/r`.
fn axial_integral(alpha: f64, beta: f64, rel_tol: f64, budget: &mut Budget) -> Result<Estimate> {
    if beta == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            abs_err: 0.0,
        });
    }
    let w_max = 2.0 * alpha + beta;
    if w_max * U_MAX <= DIRECT_PHASE {
        let f = |u: f64| {
            let s = (alpha * u).sin();
            let c = (0.5 * beta * u).sin();
            s * s * 2.0 * c * c * (-u * u).exp()
        };
        let tol = Tolerance {
            rel: rel_tol,
            abs: 0.0,
        };
        return Ok(integrate(
            f,
            &half_period_breaks(w_max, 0.0, U_MAX),
            tol,
            budget,
        )?);
    }
    // sin²(αu)(1 - cos βu) = ½[1 - cos 2αu - cos βu + ½cos(2α+β)u + ½cos(2α-β)u]
    let abs_tol = 1e-3 * rel_tol * PI.sqrt() / 2.0;
    let mut acc = gaussian_cosine(0.0, abs_tol, budget)?;
    for (omega, w) in [
        (2.0 * alpha, -1.0),
        (beta, -1.0),
        (2.0 * alpha + beta, 0.5),
        ((2.0 * alpha - beta).abs(), 0.5),
    ] {
        acc = add(acc, gaussian_cosine(omega, abs_tol, budget)?, w);
    }
    Ok(Estimate {
        value: 0.5 * acc.value,
        abs_err: 0.5 * acc.abs_err,
    })
}

/// `int_0^U sinc²(alpha u) e^{-u²} du`, one transverse axis of a cube.
fn cube_transverse_integral(alpha: f64, rel_tol: f64, budget: &mut Budget) -> Result<Estimate> {
    let tol = Tolerance {
        rel: rel_tol,
        abs: 0.0,
    };
    let f = |u: f64| {
        let s = sinc_half(alpha * u);
        s * s * (-u * u).exp()
    };
    if 2.0 * alpha * U_MAX <= DIRECT_PHASE {
        return Ok(integrate(
            f,
            &half_period_breaks(2.0 * alpha, 0.0, U_MAX),
            tol,
            budget,
        )?);
    }
    // near part panel by panel, then sinc² = (1 - cos 2αu) / (2α²u²) beyond
    let u0 = DIRECT_PHASE / (4.0 * alpha);
    let near = integrate(f, &half_period_breaks(2.0 * alpha, 0.0, u0), tol, budget)?;
    let g = |u: f64| (-u * u).exp() / (2.0 * alpha * alpha * u * u);
    let breaks = geometric_breaks(u0, U_MAX);
    let abs_tol = 1e-3 * rel_tol * near.value.abs();
    let smooth = integrate(
        g,
        &breaks,
        Tolerance {
            rel: 0.0,
            abs: abs_tol,
        },
        budget,
    )?;
    let osc = integrate_oscillatory(g, 2.0 * alpha, &breaks, abs_tol, budget)?;
    Ok(Estimate {
        value: near.value + smooth.value - osc.value.0,
        abs_err: near.abs_err + smooth.abs_err + osc.abs_err,
    })
}

// Hankel amplitudes of J1: J1(z) = sqrt(2/(pi z)) (P cos chi - Q sin chi)
fn hankel_pq(z: f64) -> (f64, f64) {
    let mu = 4.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    for k in 1..12u32 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * z);
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
    }
    (p, q)
}

/// `int_0^inf J1(z)²/z e^{-s² z²} dz`, the transverse factor of a
/// cylinder in units of `8 pi / R²`.
fn cylinder_transverse_integral(s: f64, rel_tol: f64, budget: &mut Budget) -> Result<Estimate> {
    let tol = Tolerance {
        rel: rel_tol,
        abs: 0.0,
    };
    let f = |z: f64| {
        let j = j1(z).unwrap_or(0.0);
        j * j / z * (-s * s * z * z).exp()
    };
    let z_max = U_MAX / s;
    if z_max <= HANKEL_START {
        return Ok(integrate(
            f,
            &half_period_breaks(2.0, 0.0, z_max),
            tol,
            budget,
        )?);
    }
    let near = integrate(f, &half_period_breaks(2.0, 0.0, HANKEL_START), tol, budget)?;
    // J1²/z = [ (P²+Q²) - (P²-Q²) sin 2z - 2PQ cos 2z ] / (pi z²)
    let envelope = |z: f64| (-s * s * z * z).exp() / (PI * z * z);
    let g_mean = |z: f64| {
        let (p, q) = hankel_pq(z);
        (p * p + q * q) * envelope(z)
    };
    let g_sin = |z: f64| {
        let (p, q) = hankel_pq(z);
        -(p * p - q * q) * envelope(z)
    };
    let g_cos = |z: f64| {
        let (p, q) = hankel_pq(z);
        -2.0 * p * q * envelope(z)
    };
    let breaks = geometric_breaks(HANKEL_START, z_max);
    let abs_tol = 1e-3 * rel_tol * near.value.abs();
    let mean = integrate(
        g_mean,
        &breaks,
        Tolerance {
            rel: 0.0,
            abs: abs_tol,
        },
        budget,
    )?;
    let sin_part = integrate_oscillatory(g_sin, 2.0, &breaks, abs_tol, budget)?;
    let cos_part = integrate_oscillatory(g_cos, 2.0, &breaks, abs_tol, budget)?;
    Ok(Estimate {
        value: near.value + mean.value + sin_part.value.1 + cos_part.value.0,
        abs_err: near.abs_err + mean.abs_err + sin_part.abs_err + cos_part.abs_err,
    })
}

fn rel(e: &Estimate) -> f64 {
    e.rel_err()
}

/// Pair PSD evaluated directly from the k-space integral
///
/// `S = hbar² lambda r³ / (2 pi^{3/2} m0²) int d³k |mu(k)|² (1 - cos a k_x) k_x² e^{-r² k²}`
///
/// with the uniform-density form factors of each shape. The integrand
/// factorises into an axial integral and one (cylinder) or two (cube)
/// transverse integrals, each done numerically in one dimension. Summed over
/// `arm_count` arms.
pub fn sff_quadrature(
    p: &CslParams,
    g: &MassGeometry,
    arr: &MassArrangement,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult> {
    arr.check(&g.shape)?;
    let r = p.r_c;
    let mut budget = Budget::new(opts.max_evaluations);
    let tol = opts.rel_tol / 4.0;
    let (mass, length, separation, arms) = match g.shape {
        Shape::HalfCylinderBar(b) => (0.5 * g.mass, 0.5 * b.length, 0.5 * b.length, 1),
        Shape::Cylinder(c) => (g.mass, c.length, arr.separation, arr.arm_count),
        Shape::Cube(c) => (g.mass, c.side, arr.separation, arr.arm_count),
    };
    let axial = axial_integral(0.5 * length / r, separation / r, tol, &mut budget)?;
    // k-space: X = 8/(r L²) * axial
    let x_factor = 8.0 / (r * length * length) * axial.value;
    let (t_factor, t_rel) = match g.shape {
        Shape::Cube(c) => {
            let t = cube_transverse_integral(0.5 * c.side / r, tol, &mut budget)?;
            let one = 2.0 / r * t.value;
            (one * one, 2.0 * rel(&t))
        }
        Shape::Cylinder(Cylinder { radius, .. })
        | Shape::HalfCylinderBar(HalfCylinderBar { radius, .. }) => {
            let t = cylinder_transverse_integral(r / radius, tol, &mut budget)?;
            (8.0 * PI / (radius * radius) * t.value, rel(&t))
        }
    };
    let ratio = HBAR / M0;
    let c = r * r * r * ratio * ratio / (2.0 * PI.powf(1.5));
    let value = p.lambda * (mass * mass) * (arms as f64 * c * x_factor * t_factor);
    let rel_err = if axial.value == 0.0 {
        0.0
    } else {
        rel(&axial) + t_rel
    };
    if rel_err > opts.rel_tol {
        return Err(Error::Quadrature(quadrature::QuadratureError {
            value,
            abs_err: rel_err * value,
            evaluations: budget.used,
        }));
    }
    Ok(QuadratureResult {
        psd: ForcePsd(value),
        rel_err,
        evaluations: budget.used,
    })
}

/// Relative-coordinate diffusion rate `eta = S_FF / hbar²` from the
/// quadrature route.
pub fn diffusion_rate(
    p: &CslParams,
    g: &MassGeometry,
    arr: &MassArrangement,
    opts: &QuadratureOptions,
) -> Result<DiffusionRate> {
    let s = sff_quadrature(p, g, arr, opts)?;
    Ok(DiffusionRate(s.psd.0 / (HBAR * HBAR)))
}
