//! The handful of special functions the noise formulas need.
//!
//! Modified Bessel functions are exposed only in exponentially scaled form,
//! `e^{-x} I_n(x)`, since the cylinder formulas always multiply them by
//! `e^{-x}` and the unscaled values overflow for `x > ~700`.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{function}: argument {x} outside domain")]
pub struct DomainError {
    pub function: &'static str,
    pub x: f64,
}

/// Accuracy promised by a function on a given interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyContract {
    pub target_rel_err: f64,
    pub domain: (f64, f64),
}

pub const I0E_CONTRACT: AccuracyContract = AccuracyContract {
    target_rel_err: 1e-12,
    domain: (0.0, 1e8),
};
pub const I1E_CONTRACT: AccuracyContract = I0E_CONTRACT;
pub const ERF_CONTRACT: AccuracyContract = AccuracyContract {
    target_rel_err: 1e-12,
    domain: (f64::MIN, f64::MAX),
};
/// J1 is held to an absolute bound: 1e-10 up to 1e3, 1e-8 beyond.
pub const J1_ABS_ERR_LOW: f64 = 1e-10;
pub const J1_ABS_ERR_HIGH: f64 = 1e-8;
pub const J1_MAX_ARG: f64 = 1e6;

// Below this the ascending series is used, above it the Hankel expansion.
const BESSEL_I_SWITCH: f64 = 25.0;
const BESSEL_J_SWITCH: f64 = 13.0;
const ERF_SWITCH: f64 = 3.0;

fn check_nonneg(function: &'static str, x: f64) -> Result<(), DomainError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(DomainError { function, x })
    }
}

/// Ascending series of I_nu(x) for nu in {0, 1}. All terms are positive.
fn bessel_i_series(nu: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if nu == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + nu as f64));
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Large-x expansion of e^{-x} I_nu(x). The series is asymptotic; summation
/// stops at the smallest term.
fn bessel_i_scaled_asymptotic(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (k * 8.0 * x);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        sum += next;
        if next.abs() <= 1e-17 * sum.abs() {
            break;
        }
        term = next;
        k += 1.0;
    }
    sum / (2.0 * PI * x).sqrt()
}

/// `e^{-x} I0(x)` for `x >= 0`.
pub fn i0e(x: f64) -> Result<f64, DomainError> {
    check_nonneg("i0e", x)?;
    Ok(if x <= BESSEL_I_SWITCH {
        (-x).exp() * bessel_i_series(0, x)
    } else {
        bessel_i_scaled_asymptotic(0, x)
    })
}

/// `e^{-x} I1(x)` for `x >= 0`.
pub fn i1e(x: f64) -> Result<f64, DomainError> {
    check_nonneg("i1e", x)?;
    Ok(if x <= BESSEL_I_SWITCH {
        (-x).exp() * bessel_i_series(1, x)
    } else {
        bessel_i_scaled_asymptotic(1, x)
    })
}

/// Error function. Odd; `erf(x) = 1 - erfc(x)` with a continued fraction for
/// `|x| >= 3`, otherwise a positive-term series.
pub fn erf(x: f64) -> Result<f64, DomainError> {
    if !x.is_finite() {
        return Err(DomainError { function: "erf", x });
    }
    let ax = x.abs();
    let v = if ax < ERF_SWITCH {
        erf_series(ax)
    } else {
        1.0 - erfc_continued_fraction(ax)
    };
    Ok(v.copysign(x))
}

// erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (2n+1)!!
fn erf_series(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 1.0;
    loop {
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
        n += 1.0;
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

// erfc(x) = e^{-x^2}/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
// evaluated with the modified Lentz algorithm.
fn erfc_continued_fraction(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let a = 0.5 * n as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Bessel function of the first kind J1 on `[0, 1e6]`.
pub fn j1(x: f64) -> Result<f64, DomainError> {
    if !(0.0..=J1_MAX_ARG).contains(&x) {
        return Err(DomainError { function: "j1", x });
    }
    Ok(if x <= BESSEL_J_SWITCH {
        j1_series(x)
    } else {
        j1_asymptotic(x)
    })
}

fn j1_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    let mut k = 1.0;
    while k < 200.0 {
        term *= q / (k * (k + 1.0));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs().max(1e-300) && k > 0.5 * x {
            break;
        }
        k += 1.0;
    }
    sum
}

fn j1_asymptotic(x: f64) -> f64 {
    // Hankel: J1 = sqrt(2/(pi x)) (P cos chi - Q sin chi), chi = x - 3pi/4,
    // with P, Q the even/odd parts of sum_k (+-) a_k / x^k.
    let mu = 4.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut k = 1.0;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = term * (mu - odd * odd) / (k * 8.0 * x);
        if next.abs() >= term.abs() || next.abs() < 1e-18 {
            break;
        }
        // a_k / x^k contributes to P with sign (-1)^{k/2} for even k,
        // to Q with sign (-1)^{(k-1)/2} for odd k.
        let ki = k as u64;
        let sign = if (ki / 2).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        if ki.is_multiple_of(2) {
            p += sign * next;
        } else {
            q += sign * next;
        }
        term = next;
        k += 1.0;
    }
    let (s, c) = x.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let cos_chi = (s - c) * r;
    let sin_chi = -(s + c) * r;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// `sin(x)/x`, with the removable singularity at 0 handled by its Taylor
/// series.
pub fn sinc_half(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn bessel_spot_values() {
        assert_eq!(i0e(0.0).unwrap(), 1.0);
        assert_eq!(i1e(0.0).unwrap(), 0.0);
        // mpmath, 40 digits
        assert!(rel(i0e(1.0).unwrap(), 0.465_759_607_593_640_4) < 1e-14);
        assert!(rel(i1e(1.0).unwrap(), 0.207_910_415_349_708_45) < 1e-14);
    }

    #[test]
    fn bessel_large_argument_tends_to_asymptote() {
        let x = 1e6;
        let asym = 1.0 / (2.0 * PI * x).sqrt();
        assert!(rel(i0e(x).unwrap(), asym) <= 1e-6);
        assert!(rel(i1e(x).unwrap(), asym) <= 1e-6);
        // no overflow far out
        assert!(i0e(1e300).unwrap().is_finite());
    }

    #[test]
    fn bessel_switchover_is_continuous() {
        let below = BESSEL_I_SWITCH * (1.0 - 1e-15);
        let above = BESSEL_I_SWITCH * (1.0 + 1e-15);
        assert!(rel(i0e(below).unwrap(), i0e(above).unwrap()) < 1e-12);
        assert!(rel(i1e(below).unwrap(), i1e(above).unwrap()) < 1e-12);
    }

    #[test]
    fn i1e_below_i0e() {
        let mut x = 1e-6;
        while x < 1e9 {
            assert!(i1e(x).unwrap() <= i0e(x).unwrap(), "x = {x}");
            x *= 1.7;
        }
    }

    #[test]
    fn bessel_domain() {
        assert!(i0e(-1.0).is_err());
        assert!(i1e(f64::NAN).is_err());
        assert!(i0e(f64::INFINITY).is_err());
    }

    #[test]
    fn erf_spot_values() {
        assert_eq!(erf(0.0).unwrap(), 0.0);
        assert!(rel(erf(1.0).unwrap(), 0.842_700_792_949_714_9) < 1e-15);
        assert_eq!(erf(-1.3).unwrap(), -erf(1.3).unwrap());
        assert!(erf(f64::NAN).is_err());
        assert!(erf(f64::NEG_INFINITY).is_err());
        assert_eq!(erf(30.0).unwrap(), 1.0);
        // tiny arguments keep full relative accuracy
        assert!(rel(erf(1e-200).unwrap(), 2.0 / PI.sqrt() * 1e-200) < 1e-15);
    }

    #[test]
    fn j1_spot_values() {
        assert_eq!(j1(0.0).unwrap(), 0.0);
        assert!((j1(1.0).unwrap() - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!(j1(-0.1).is_err());
        assert!(j1(1.1e6).is_err());
    }

    #[test]
    fn j1_first_zero_is_bracketed() {
        assert!(j1(3.83).unwrap() > 0.0);
        assert!(j1(3.832).unwrap() < 0.0);
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc_half(0.0), 1.0);
        assert!(sinc_half(PI).abs() < 1e-16);
        let x = 1e-9;
        assert!((sinc_half(x) - (1.0 - x * x / 6.0)).abs() <= 1e-18);
        assert_eq!(sinc_half(-2.5), sinc_half(2.5));
        let y = 1.5e-4;
        assert!(rel(sinc_half(y * 0.99), (y * 0.99).sin() / (y * 0.99)) < 1e-15);
    }
}
