//! `csl-bounds`: CSL force-noise models and collapse-rate bounds from
//! detector noise.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use csl_bounds::bundled;
use csl_bounds::csl::{
    sff_auriga, sff_closed_form, sff_quadrature, BarVariant, CslParams, ForcePsd,
    QuadratureOptions, Shape,
};
use csl_bounds::detector::{DetectorModel, MeasuredNoise};
use csl_bounds::exclusion::{
    ellis_ratio, exclusion_curve, lambda_max_with, log_grid, optimal_frequency, ModelPath,
};
use csl_bounds::io::{load_detector_config, load_spectrum_csv, write_exclusion_csv};
use csl_bounds::response::{
    acceleration_psd, displacement_psd, displacement_psd_free_mass, strain_psd,
    strain_psd_from_force_bar, ReadoutKind, ResponseModel,
};
use csl_bounds::units::{hz_to_rad, rad_to_hz, Quantity, SpectralDensity};
use csl_bounds::{Error, Result};

/// Largest closed-form vs quadrature difference `validate` accepts.
const VALIDATE_MAX_DIFF: f64 = 1e-3;
/// Agreement needed for the quadrature to endorse a bar variant.
const ENDORSE_TOL: f64 = 1e-4;

#[derive(Parser)]
#[command(
    name = "csl-bounds",
    version,
    about = "CSL force-noise models and collapse-rate bounds from detector noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the CSL force PSD and the detector-native equivalent at one point.
    Noise(NoiseArgs),
    /// Print the bound on lambda at one r_c.
    Bound(BoundArgs),
    /// Write the bound over a log-spaced r_c grid as CSV.
    Scan(ScanArgs),
    /// Pick the best frequency of a measured strain spectrum and scan with it.
    SpectrumBound(SpectrumBoundArgs),
    /// Compare the Ellis diffusion coefficient with the measured one.
    Ellis(EllisArgs),
    /// Check the closed form against the quadrature over an r_c grid.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Detector config: a JSON path, or builtin:NAME (ligo, lisa_pathfinder, auriga).
    #[arg(long, value_name = "PATH|builtin:NAME")]
    config: String,
}

#[derive(Args)]
struct NoiseSelect {
    /// Noise entry of the config to use (default: the first).
    #[arg(long, value_name = "NAME")]
    noise_entry: Option<String>,
}

#[derive(Args)]
struct ModelArgs {
    /// Bar closed form to use (bars only; default: the config's choice).
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// How the model PSD is evaluated.
    #[arg(long, value_enum, default_value_t = PathArg::ClosedForm)]
    path: PathArg,
    /// Relative tolerance of the quadrature path.
    #[arg(long, default_value_t = QuadratureOptions::default().rel_tol)]
    rel_tol: f64,
}

#[derive(Args)]
struct GridArgs {
    /// Smallest r_c (m).
    #[arg(long, default_value_t = 1e-9)]
    rc_min: f64,
    /// Largest r_c (m).
    #[arg(long, default_value_t = 1e2)]
    rc_max: f64,
    /// Number of log-spaced grid points (at least 2).
    #[arg(long, default_value_t = 200)]
    points: usize,
}

#[derive(Args)]
struct NoiseArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    noise: NoiseSelect,
    /// Correlation length r_c (m).
    #[arg(long)]
    rc: f64,
    /// Collapse rate lambda (1/s).
    #[arg(long)]
    lambda: f64,
    /// Frequency (Hz) for strain or displacement readouts of free masses and
    /// oscillators (default: the noise entry's frequency).
    #[arg(long)]
    frequency_hz: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    noise: NoiseSelect,
    /// Correlation length r_c (m).
    #[arg(long)]
    rc: f64,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    noise: NoiseSelect,
    #[command(flatten)]
    grid: GridArgs,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct SpectrumBoundArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Strain ASD CSV (columns frequency_hz and the strain ASD).
    #[arg(long)]
    asd: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct EllisArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    noise: NoiseSelect,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Smallest r_c (m); default 1e-8 for pairs, 1e-3 for bars.
    #[arg(long)]
    rc_min: Option<f64>,
    /// Largest r_c (m); default 1 for pairs, 10 for bars.
    #[arg(long)]
    rc_max: Option<f64>,
    /// Number of log-spaced grid points.
    #[arg(long, default_value_t = 25)]
    points: usize,
    /// Relative tolerance of the quadrature.
    #[arg(long, default_value_t = QuadratureOptions::default().rel_tol)]
    rel_tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Printed,
    Rederived,
}

impl From<VariantArg> for BarVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Printed => BarVariant::Printed,
            VariantArg::Rederived => BarVariant::Rederived,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PathArg {
    ClosedForm,
    Quadrature,
}

impl From<PathArg> for ModelPath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::ClosedForm => ModelPath::ClosedForm,
            PathArg::Quadrature => ModelPath::Quadrature,
        }
    }
}

/// Numbers on stdout carry 9 significant digits.
fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn load_config(spec: &str) -> Result<DetectorModel> {
    let det = match spec.strip_prefix("builtin:") {
        Some(name) => bundled::by_name(name).ok_or_else(|| Error::Config {
            path: spec.to_string(),
            field: "config".into(),
            message: format!(
                "no bundled config `{name}` (known: {})",
                bundled::NAMES.join(", ")
            ),
        })?,
        None => load_detector_config(spec)?,
    };
    det.validate()?;
    Ok(det)
}

fn apply_model(
    det: &mut DetectorModel,
    model: &ModelArgs,
) -> Result<(ModelPath, QuadratureOptions)> {
    if let Some(v) = model.variant {
        if !matches!(det.geometry.shape, Shape::HalfCylinderBar(_)) {
            return Err(Error::Config {
                path: det.name.clone(),
                field: "--variant".into(),
                message: "only half-cylinder bars have closed-form variants".into(),
            });
        }
        det.bar_variant = v.into();
    }
    Ok((model.path.into(), quadrature_options(model.rel_tol)?))
}

fn quadrature_options(rel_tol: f64) -> Result<QuadratureOptions> {
    if !(rel_tol.is_finite() && rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Config {
            path: "<command line>".into(),
            field: "--rel-tol".into(),
            message: format!("must be in (0, 1), got {rel_tol}"),
        });
    }
    Ok(QuadratureOptions {
        rel_tol,
        ..Default::default()
    })
}

fn model_force(
    det: &DetectorModel,
    p: &CslParams,
    path: ModelPath,
    opts: &QuadratureOptions,
) -> Result<ForcePsd> {
    match path {
        ModelPath::ClosedForm => {
            sff_closed_form(p, &det.geometry, &det.arrangement, det.bar_variant)
        }
        ModelPath::Quadrature => Ok(sff_quadrature(p, &det.geometry, &det.arrangement, opts)?.psd),
    }
}

/// Detector-native PSD equivalent to `s_ff`, with the frequency it refers to
/// when the conversion depends on one.
fn native_equivalent(
    det: &DetectorModel,
    s_ff: SpectralDensity,
    omega: Option<f64>,
) -> Result<(SpectralDensity, Option<f64>)> {
    let m = det.geometry.mass;
    let need_omega = || {
        omega.ok_or_else(|| Error::Config {
            path: det.name.clone(),
            field: "--frequency-hz".into(),
            message: format!(
                "a frequency is needed for the {} readout",
                det.readout.quantity()
            ),
        })
    };
    let displacement = |w: f64| match det.response {
        ResponseModel::FreeMass => displacement_psd_free_mass(s_ff, m, w),
        ResponseModel::Oscillator { omega0, q } => displacement_psd(s_ff, m, w, omega0, q),
        ResponseModel::ResonantBar { .. } => Err(Error::UnsupportedReadout(
            "displacement of a resonant bar".into(),
        )),
    };
    match (det.readout, det.response) {
        (ReadoutKind::Force, _) => Ok((s_ff, None)),
        (ReadoutKind::Acceleration, _) => Ok((acceleration_psd(s_ff, m)?, None)),
        (ReadoutKind::Strain { .. }, ResponseModel::ResonantBar { omega0, length }) => {
            Ok((strain_psd_from_force_bar(s_ff, m, omega0, length)?, None))
        }
        (ReadoutKind::Strain { arm_length }, _) => {
            let w = need_omega()?;
            Ok((strain_psd(displacement(w)?, arm_length)?, Some(w)))
        }
        (ReadoutKind::Displacement, _) => {
            let w = need_omega()?;
            Ok((displacement(w)?, Some(w)))
        }
    }
}

fn psd_symbol(q: Quantity) -> &'static str {
    match q {
        Quantity::Force => "S_FF",
        Quantity::Acceleration => "S_gg",
        Quantity::Strain => "S_hh",
        Quantity::Displacement => "S_xx",
    }
}

fn cmd_noise(a: NoiseArgs) -> Result<()> {
    let mut det = load_config(&a.config.config)?;
    let (path, opts) = apply_model(&mut det, &a.model)?;
    let p = CslParams::new(a.lambda, a.rc)?;
    let s_ff = model_force(&det, &p, path, &opts)?.one_sided();
    let omega = match a.frequency_hz {
        Some(f) => Some(hz_to_rad(f)),
        None => det
            .noise_entry(a.noise.noise_entry.as_deref())
            .ok()
            .and_then(|n| n.frequency),
    };
    let (native, used) = native_equivalent(&det, s_ff, omega)?;
    let mut line = format!(
        "S_FF = {} {} (one-sided)",
        num(s_ff.value),
        Quantity::Force.psd_unit()
    );
    let q = native.convention.quantity;
    if q != Quantity::Force {
        line.push_str(&format!(
            "; {} = {} {}",
            psd_symbol(q),
            num(native.value),
            q.psd_unit()
        ));
    }
    if let Some(w) = used {
        line.push_str(&format!(" at {} Hz", num(rad_to_hz(w))));
    }
    println!("{line}");
    Ok(())
}

fn cmd_bound(a: BoundArgs) -> Result<()> {
    let mut det = load_config(&a.config.config)?;
    let (path, opts) = apply_model(&mut det, &a.model)?;
    let noise = det.noise_entry(a.noise.noise_entry.as_deref())?;
    let l = lambda_max_with(&det, noise, a.rc, path, &opts)?;
    println!(
        "lambda_max = {} 1/s at r_c = {} m ({}, noise `{}`)",
        num(l),
        num(a.rc),
        det.name,
        noise.name
    );
    Ok(())
}

fn scan_and_write(
    det: &DetectorModel,
    noise: &MeasuredNoise,
    grid: &GridArgs,
    out: &PathBuf,
    path: ModelPath,
    opts: &QuadratureOptions,
) -> Result<()> {
    let g = log_grid(grid.rc_min, grid.rc_max, grid.points)?;
    let curve = exclusion_curve(det, noise, &g, path, opts)?;
    write_exclusion_csv(&curve, out)?;
    let (r, l) = curve.minimum().expect("grid has at least 2 points");
    println!("minimum: lambda_max = {} 1/s at r_c = {} m", num(l), num(r));
    Ok(())
}

fn cmd_scan(a: ScanArgs) -> Result<()> {
    let mut det = load_config(&a.config.config)?;
    let (path, opts) = apply_model(&mut det, &a.model)?;
    let noise = det.noise_entry(a.noise.noise_entry.as_deref())?.clone();
    scan_and_write(&det, &noise, &a.grid, &a.out, path, &opts)
}

fn cmd_spectrum_bound(a: SpectrumBoundArgs) -> Result<()> {
    let mut det = load_config(&a.config.config)?;
    let (path, opts) = apply_model(&mut det, &a.model)?;
    if !matches!(
        (det.response, det.readout),
        (ResponseModel::FreeMass, ReadoutKind::Strain { .. })
    ) {
        return Err(Error::UnsupportedReadout(format!(
            "spectrum-bound needs a free-mass strain detector; `{}` is not one",
            det.name
        )));
    }
    let series = load_spectrum_csv(&a.asd, Quantity::Strain)?;
    let (omega, force_asd) = optimal_frequency(&series, &det)?;
    println!(
        "optimal frequency = {} Hz; S_F = {} {}",
        num(rad_to_hz(omega)),
        num(force_asd),
        Quantity::Force.asd_unit()
    );
    let mut noise = MeasuredNoise::new("spectrum", Quantity::Force, force_asd * force_asd)?;
    noise.frequency = Some(omega);
    noise.provenance = format!("optimal frequency of {}", a.asd.display());
    scan_and_write(&det, &noise, &a.grid, &a.out, path, &opts)
}

fn cmd_ellis(a: EllisArgs) -> Result<()> {
    let det = load_config(&a.config.config)?;
    let noise = det.noise_entry(a.noise.noise_entry.as_deref())?;
    let r = ellis_ratio(&det, noise)?;
    println!(
        "eta_ellis = {} 1/(m^2 s); eta_exp = {} 1/(m^2 s); ratio = {}",
        num(r.eta_ellis),
        num(r.eta_exp),
        num(r.ratio)
    );
    Ok(())
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Returns whether every closed-form value stayed within tolerance.
fn cmd_validate(a: ValidateArgs) -> Result<bool> {
    let det = load_config(&a.config.config)?;
    let bar = match det.geometry.shape {
        Shape::HalfCylinderBar(b) => Some(b),
        _ => None,
    };
    let (lo, hi) = if bar.is_some() {
        (1e-3, 10.0)
    } else {
        (1e-8, 1.0)
    };
    let grid = log_grid(a.rc_min.unwrap_or(lo), a.rc_max.unwrap_or(hi), a.points)?;
    let opts = quadrature_options(a.rel_tol)?;

    let variants = [BarVariant::Rederived, BarVariant::Printed];
    let mut worst = [0.0f64; 2];
    let mut worst_configured = 0.0f64;
    println!("r_c_m closed_form quadrature rel_diff");
    for &r in &grid {
        let p = CslParams::new(1.0, r)?;
        let q = sff_quadrature(&p, &det.geometry, &det.arrangement, &opts)?
            .psd
            .value();
        let c = sff_closed_form(&p, &det.geometry, &det.arrangement, det.bar_variant)?.value();
        let d = rel_diff(c, q);
        worst_configured = worst_configured.max(d);
        println!("{} {} {} {}", num(r), num(c), num(q), num(d));
        if let Some(b) = &bar {
            for (w, v) in worst.iter_mut().zip(variants) {
                *w = w.max(rel_diff(
                    sff_auriga(&p, b, det.geometry.mass, v)?.value(),
                    q,
                ));
            }
        }
    }
    println!("max rel_diff = {}", num(worst_configured));
    if bar.is_some() {
        let endorsed: Vec<usize> = (0..2).filter(|&i| worst[i] <= ENDORSE_TOL).collect();
        match endorsed.as_slice() {
            [i] => println!(
                "quadrature endorses the {} variant (max rel_diff {}); the {} variant deviates by up to {}",
                variants[*i].name(),
                num(worst[*i]),
                variants[1 - *i].name(),
                num(worst[1 - *i])
            ),
            _ => println!(
                "no single variant endorsed: {} max rel_diff {}, {} max rel_diff {}",
                variants[0].name(),
                num(worst[0]),
                variants[1].name(),
                num(worst[1])
            ),
        }
    }
    Ok(worst_configured <= VALIDATE_MAX_DIFF)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Noise(a) => cmd_noise(a).map(|_| true),
        Command::Bound(a) => cmd_bound(a).map(|_| true),
        Command::Scan(a) => cmd_scan(a).map(|_| true),
        Command::SpectrumBound(a) => cmd_spectrum_bound(a).map(|_| true),
        Command::Ellis(a) => cmd_ellis(a).map(|_| true),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!(
                "error: closed form and quadrature differ by more than {VALIDATE_MAX_DIFF:e}"
            );
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
