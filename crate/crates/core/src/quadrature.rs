//! One-dimensional quadrature used by the k-space noise integral.
//!
//! Two rules are provided:
//!
//! * [`integrate`]: globally adaptive Gauss-Legendre. Each panel is evaluated
//!   with an n-point rule on the whole panel and on both halves; the
//!   difference is the panel's error estimate and the finer value is kept.
//!   The worst panel is bisected until the total error meets the tolerance
//!   or the evaluation budget runs out.
//! * [`integrate_oscillatory`]: `int g(u) e^{i w u} du` for smooth `g` and
//!   arbitrarily large `w`. On each panel `g` is expanded in Legendre
//!   polynomials and the products with the exponential are integrated
//!   exactly through spherical Bessel functions, so the cost does not grow
//!   with `w`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use thiserror::Error;

/// Default evaluation budget, 2^24 integrand calls.
pub const DEFAULT_MAX_EVALUATIONS: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("quadrature did not converge within {evaluations} evaluations: estimated error {abs_err:e} on value {value:e}")]
pub struct QuadratureError {
    pub value: f64,
    pub abs_err: f64,
    pub evaluations: u64,
}

/// Shared evaluation counter for a family of integrals.
#[derive(Debug, Clone)]
pub struct Budget {
    pub max_evaluations: u64,
    pub used: u64,
}

impl Budget {
    pub fn new(max_evaluations: u64) -> Self {
        Budget {
            max_evaluations,
            used: 0,
        }
    }

    fn remaining(&self) -> u64 {
        self.max_evaluations.saturating_sub(self.used)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
}

impl Estimate {
    pub fn rel_err(&self) -> f64 {
        if self.value == 0.0 {
            if self.abs_err == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.abs_err / self.value).abs()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const PANEL_ORDER: usize = 10;

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

fn gl_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = panel_rule();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        s += wi * f(c + h * xi);
    }
    s * h
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn eval_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let m = 0.5 * (a + b);
    let coarse = gl_panel(f, a, b);
    let fine = gl_panel(f, a, m) + gl_panel(f, m, b);
    Panel {
        a,
        b,
        value: fine,
        err: (fine - coarse).abs(),
    }
}

const EVALS_PER_PANEL: u64 = 3 * PANEL_ORDER as u64;

/// Globally adaptive integral of `f` over consecutive breakpoints.
///
/// `breaks` must be ascending and contain at least two points; every
/// interval between them becomes an initial panel.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    tol: Tolerance,
    budget: &mut Budget,
) -> Result<Estimate, QuadratureError> {
    assert!(breaks.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::with_capacity(breaks.len() * 2);
    let (mut value, mut err) = (0.0, 0.0);
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let p = eval_panel(&f, w[0], w[1]);
            value += p.value;
            err += p.err;
            heap.push(p);
            budget.used += EVALS_PER_PANEL;
        }
    }
    let mut refinements = 0usize;
    loop {
        if refinements % 1024 == 1023 {
            // running sums drift; refresh them now and then
            (value, err) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
        }
        if budget.used > budget.max_evaluations {
            return Err(QuadratureError {
                value,
                abs_err: err,
                evaluations: budget.used,
            });
        }
        if err <= tol.abs.max(tol.rel * value.abs()) {
            let (value, err) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
            return Ok(Estimate {
                value,
                abs_err: err,
            });
        }
        if budget.remaining() < 2 * EVALS_PER_PANEL {
            return Err(QuadratureError {
                value,
                abs_err: err,
                evaluations: budget.used,
            });
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // panel can no longer be split in floating point
            return Err(QuadratureError {
                value,
                abs_err: err,
                evaluations: budget.used,
            });
        }
        let left = eval_panel(&f, worst.a, m);
        let right = eval_panel(&f, m, worst.b);
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        budget.used += 2 * EVALS_PER_PANEL;
        refinements += 1;
    }
}

/// `n + 1` equally spaced breakpoints on `[a, b]`.
pub fn uniform_breaks(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                a + (b - a) * i as f64 / n as f64
            }
        })
        .collect()
}

/// Breakpoints doubling from `a > 0` until `b`.
pub fn geometric_breaks(a: f64, b: f64) -> Vec<f64> {
    assert!(a > 0.0 && b > a);
    let mut v = vec![a];
    let mut x = a;
    while 2.0 * x < b {
        x *= 2.0;
        v.push(x);
    }
    v.push(b);
    v
}

const LEGENDRE_TERMS: usize = 16;
const PROJECTION_NODES: usize = 24;
// Below this value of w*h a panel is integrated directly: the spherical
// Bessel forward recurrence needs w*h > LEGENDRE_TERMS to be stable.
const FILON_MIN_PHASE: f64 = 16.0;

struct FilonTables {
    nodes: Vec<f64>,
    // legendre[n][i] = P_n(nodes[i]) * (2n+1)/2 * weights[i]
    projector: Vec<Vec<f64>>,
    direct: (Vec<f64>, Vec<f64>),
}

fn filon_tables() -> &'static FilonTables {
    static TABLES: OnceLock<FilonTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let (nodes, weights) = gauss_legendre(PROJECTION_NODES);
        let mut projector = vec![vec![0.0; PROJECTION_NODES]; LEGENDRE_TERMS];
        for (i, (&t, &w)) in nodes.iter().zip(&weights).enumerate() {
            let mut p0 = 1.0;
            let mut p1 = t;
            for (n, row) in projector.iter_mut().enumerate() {
                let pn = match n {
                    0 => 1.0,
                    1 => t,
                    _ => {
                        let k = n as f64;
                        let p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                        p0 = p1;
                        p1 = p2;
                        p2
                    }
                };
                row[i] = pn * (2.0 * n as f64 + 1.0) / 2.0 * w;
            }
        }
        FilonTables {
            nodes,
            projector,
            direct: gauss_legendre(40),
        }
    })
}

/// Spherical Bessel j_0..j_{n-1} at `x >= n` by forward recurrence.
fn spherical_bessel_forward(x: f64, out: &mut [f64]) {
    let (s, c) = x.sin_cos();
    out[0] = s / x;
    if out.len() > 1 {
        out[1] = s / (x * x) - c / x;
    }
    for n in 2..out.len() {
        out[n] = (2.0 * n as f64 - 1.0) / x * out[n - 1] - out[n - 2];
    }
}

/// Complex value as (re, im).
pub type Complex = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub value: Complex,
    pub abs_err: f64,
}

struct FilonPanel {
    value: Complex,
    err: f64,
    // error level below which the coefficients are pure rounding
    floor: f64,
    evaluations: u64,
}

fn filon_panel<G: Fn(f64) -> f64>(g: &G, omega: f64, a: f64, b: f64) -> FilonPanel {
    let t = filon_tables();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let phase = omega * h;
    if phase < FILON_MIN_PHASE {
        let (x, w) = &t.direct;
        let (mut re, mut im) = (0.0, 0.0);
        for (xi, wi) in x.iter().zip(w) {
            let u = c + h * xi;
            let gv = g(u) * wi;
            let (s, co) = (omega * u).sin_cos();
            re += gv * co;
            im += gv * s;
        }
        // 40 nodes resolve |phase| < 16 to well below double precision
        return FilonPanel {
            value: (re * h, im * h),
            err: 0.0,
            floor: 0.0,
            evaluations: x.len() as u64,
        };
    }
    let samples: Vec<f64> = t.nodes.iter().map(|&xi| g(c + h * xi)).collect();
    let coeffs: Vec<f64> = t
        .projector
        .iter()
        .map(|row| row.iter().zip(&samples).map(|(p, s)| p * s).sum())
        .collect();
    let mut jn = [0.0; LEGENDRE_TERMS];
    spherical_bessel_forward(phase, &mut jn);
    // int_{-1}^{1} P_n(t) e^{i x t} dt = 2 i^n j_n(x)
    let (mut re, mut im) = (0.0, 0.0);
    for (n, (an, j)) in coeffs.iter().zip(jn.iter()).enumerate() {
        let v = 2.0 * an * j;
        match n % 4 {
            0 => re += v,
            1 => im += v,
            2 => re -= v,
            _ => im -= v,
        }
    }
    let (s, co) = (omega * c).sin_cos();
    let value = (h * (re * co - im * s), h * (re * s + im * co));
    // |P_n| <= 1, so the dropped part of g contributes at most 2h times
    // the size of the last coefficients
    let tail = coeffs[LEGENDRE_TERMS - 1].abs() + coeffs[LEGENDRE_TERMS - 2].abs();
    let largest = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    FilonPanel {
        value,
        err: 2.0 * h * tail,
        floor: 2.0 * h * 64.0 * f64::EPSILON * largest,
        evaluations: t.nodes.len() as u64,
    }
}

/// `int_a^b g(u) e^{i omega u} du` for smooth `g`, returned as (re, im).
///
/// Panels between `breaks` are bisected until each meets its share of the
/// absolute tolerance.
pub fn integrate_oscillatory<G: Fn(f64) -> f64>(
    g: G,
    omega: f64,
    breaks: &[f64],
    abs_tol: f64,
    budget: &mut Budget,
) -> Result<ComplexEstimate, QuadratureError> {
    assert!(breaks.len() >= 2, "need at least one interval");
    let total_len = breaks[breaks.len() - 1] - breaks[0];
    let mut stack: Vec<(f64, f64)> = breaks.windows(2).rev().map(|w| (w[0], w[1])).collect();
    let (mut re, mut im, mut err) = (0.0, 0.0, 0.0);
    while let Some((a, b)) = stack.pop() {
        if b <= a {
            continue;
        }
        let panel = filon_panel(&g, omega, a, b);
        budget.used += panel.evaluations;
        let ((pr, pi), perr) = (panel.value, panel.err);
        if budget.used > budget.max_evaluations {
            return Err(QuadratureError {
                value: re + pr,
                abs_err: err + perr,
                evaluations: budget.used,
            });
        }
        let share = abs_tol * (b - a) / total_len;
        let m = 0.5 * (a + b);
        if perr <= share.max(panel.floor) || m <= a || m >= b {
            re += pr;
            im += pi;
            err += perr;
            continue;
        }
        if budget.remaining() < 2 * PROJECTION_NODES as u64 {
            return Err(QuadratureError {
                value: re,
                abs_err: err + perr,
                evaluations: budget.used,
            });
        }
        stack.push((m, b));
        stack.push((a, m));
    }
    Ok(ComplexEstimate {
        value: (re, im),
        abs_err: err,
    })
}
