//! `dgml` command-line experiment runner.
//!
//! Every run writes CSV and/or SVG files under an output prefix plus a
//! `<prefix>_meta.txt` sidecar of `key=value` lines. Exit codes: 0 success,
//! 1 usage or I/O error, 2 verification failure, 3 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use faer::c64;

use crate::discretization::{dense_cap_from_env, source_vector, BoundaryCondition, Dimension, DiscretizationConfig};
use crate::error::Error;
use crate::lfa::{self, SymbolVariant};
use crate::optimize;
use crate::solver::gmres;
use crate::spectrum::{self, SpectrumReport};
use crate::discretization::OperatorRole;
use crate::svg::{Plot, Series, Style};
use crate::twolevel::{MethodParams, TwoLevel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Largest deviation accepted by `lfa-verify`.
pub const VERIFY_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "dgml", version, about = "Two-level DG preconditioner experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Error-operator spectrum on a 1D mesh (default J=32, Dirichlet).
    Spectrum1d(RunArgs),
    /// Error-operator spectrum on a square 2D mesh (default 32x32, Dirichlet).
    Spectrum2d(RunArgs),
    /// Preconditioned GMRES iteration counts over a list of meshes.
    GmresSweep(RunArgs),
    /// Clustering parameters, their residuals and the 1D baselines.
    Optimize(RunArgs),
    /// Compare Fourier symbols against dense periodic operators.
    LfaVerify(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DimArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BcArg {
    Periodic,
    Dirichlet,
}

impl From<BcArg> for BoundaryCondition {
    fn from(b: BcArg) -> Self {
        match b {
            BcArg::Periodic => BoundaryCondition::Periodic,
            BcArg::Dirichlet => BoundaryCondition::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// α = 8/9, δ₀ = 2, c = ½
    Classical,
    /// α and δ₀ optimized for c = ½
    AlphaDelta,
    /// α, δ₀ and c from the clustering conditions
    Clustering,
    /// Nelder–Mead on the dense 2D operator, started from `clustering`
    #[value(name = "numeric-2d")]
    Numeric2d,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Classical => "classical",
            Preset::AlphaDelta => "alpha-delta",
            Preset::Clustering => "clustering",
            Preset::Numeric2d => "numeric-2d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
    fn svg(self) -> bool {
        matches!(self, Format::Svg | Format::Both)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Cells per dimension; comma-separated for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub cells: Vec<usize>,
    /// Spatial dimension (spectrum commands fix it).
    #[arg(long, value_enum)]
    pub dim: Option<DimArg>,
    #[arg(long, value_enum)]
    pub bc: Option<BcArg>,
    /// Parameter presets; comma-separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub preset: Vec<Preset>,
    /// Overrides α; with any override a single `custom` parameter set is
    /// built from the first preset.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta0: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// GMRES relative tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Output path prefix.
    #[arg(long, default_value = "dgml")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Link distance for eigenvalue clustering.
    #[arg(long, default_value_t = spectrum::DEFAULT_CLUSTER_TOL)]
    pub cluster_tol: f64,
    /// Objective evaluations for the numeric-2d preset.
    #[arg(long, default_value_t = 50)]
    pub max_evals: usize,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// CSV number format: C-style `%.12e`.
pub fn fmt_e(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Verify(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn exit_code(f: &Failure) -> i32 {
    match f {
        Failure::Usage(_) => EXIT_USAGE,
        Failure::Verify(_) => EXIT_VERIFY,
        Failure::Lib(Error::Config(_) | Error::Params(_) | Error::Size { .. } | Error::Io { .. }) => EXIT_USAGE,
        Failure::Lib(_) => EXIT_NUMERIC,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) | Failure::Verify(m) => m.clone(),
                Failure::Lib(e) => e.to_string(),
            };
            let _ = writeln!(err, "dgml: {msg}");
            exit_code(&f)
        }
    }
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Run<()> {
    match cmd {
        Command::Spectrum1d(a) => cmd_spectrum(a, Dimension::One, out),
        Command::Spectrum2d(a) => cmd_spectrum(a, Dimension::Two, out),
        Command::GmresSweep(a) => cmd_gmres_sweep(a, out),
        Command::Optimize(a) => cmd_optimize(a, out),
        Command::LfaVerify(a) => cmd_lfa_verify(a, out),
    }
}

fn check_common(a: &RunArgs) -> Run<()> {
    if !(a.tol > 0.0 && a.tol < 1.0) {
        return Err(Failure::Usage(format!("--tol must lie in (0, 1), got {}", a.tol)));
    }
    if a.cluster_tol.is_nan() || a.cluster_tol <= 0.0 {
        return Err(Failure::Usage(format!("--cluster-tol must be positive, got {}", a.cluster_tol)));
    }
    Ok(())
}

fn resolve_preset(p: Preset, cfg2d: Option<&DiscretizationConfig>, max_evals: usize) -> Run<MethodParams> {
    Ok(match p {
        Preset::Classical => MethodParams::classical(),
        Preset::AlphaDelta => {
            let (alpha, delta0, _) = optimize::optimize_1d_alpha_delta(0.5);
            MethodParams::unchecked(alpha, delta0, 0.5)
        }
        Preset::Clustering => optimize::clustering_parameters().params,
        Preset::Numeric2d => {
            let cfg = cfg2d.ok_or_else(|| Failure::Usage("preset numeric-2d needs a 2D mesh".into()))?;
            let start = optimize::clustering_parameters().params;
            optimize::optimize_2d(cfg, &start, max_evals)?.params
        }
    })
}

/// Named parameter sets after applying presets and overrides.
fn parameter_sets(
    a: &RunArgs,
    defaults: &[Preset],
    cfg2d: Option<&DiscretizationConfig>,
) -> Run<Vec<(String, MethodParams)>> {
    let presets: Vec<Preset> = if a.preset.is_empty() { defaults.to_vec() } else { a.preset.clone() };
    let overridden = a.alpha.is_some() || a.delta0.is_some() || a.c.is_some();
    if overridden {
        let base = resolve_preset(presets[0], cfg2d, a.max_evals)?;
        let p = MethodParams::new(
            a.alpha.unwrap_or(base.alpha),
            a.delta0.unwrap_or(base.penalty),
            a.c.unwrap_or(base.discontinuity),
        )
        .map_err(|e| Failure::Usage(e.to_string()))?;
        return Ok(vec![("custom".to_string(), p)]);
    }
    presets
        .into_iter()
        .map(|p| Ok((p.name().to_string(), resolve_preset(p, cfg2d, a.max_evals)?)))
        .collect()
}

fn output_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> Run<()> {
    std::fs::write(path, contents).map_err(|source| {
        Failure::Lib(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn write_meta(
    a: &RunArgs,
    command: &str,
    cells: &[usize],
    dim: Dimension,
    bc: BoundaryCondition,
    sets: &[(String, MethodParams)],
) -> Run<()> {
    let mut m = String::new();
    let _ = writeln!(m, "command={command}");
    let _ = writeln!(m, "version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        m,
        "cells={}",
        cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(m, "dim={}", if dim == Dimension::One { 1 } else { 2 });
    let _ = writeln!(m, "bc={}", if bc == BoundaryCondition::Periodic { "periodic" } else { "dirichlet" });
    let _ = writeln!(m, "tol={}", fmt_e(a.tol));
    let _ = writeln!(m, "cluster_tol={}", fmt_e(a.cluster_tol));
    let _ = writeln!(m, "dense_cap={}", dense_cap_from_env());
    for (name, p) in sets {
        let _ = writeln!(
            m,
            "params.{name}={},{},{}",
            fmt_e(p.alpha),
            fmt_e(p.penalty),
            fmt_e(p.discontinuity)
        );
    }
    write_file(&output_path(&a.out, "_meta.txt"), &m)
}

fn single_cells(a: &RunArgs, default: usize) -> Run<usize> {
    match a.cells.as_slice() {
        [] => Ok(default),
        [j] => Ok(*j),
        _ => Err(Failure::Usage("spectrum commands take a single --cells value".into())),
    }
}

fn cmd_spectrum(a: &RunArgs, dim: Dimension, out: &mut dyn Write) -> Run<()> {
    check_common(a)?;
    if let Some(d) = a.dim {
        let want = if dim == Dimension::One { DimArg::One } else { DimArg::Two };
        if d != want {
            return Err(Failure::Usage("--dim conflicts with the spectrum command".into()));
        }
    }
    let cells = single_cells(a, 32)?;
    let bc: BoundaryCondition = a.bc.unwrap_or(BcArg::Dirichlet).into();
    let probe = DiscretizationConfig::new(cells, 2.0, bc, dim)
        .map_err(|e| Failure::Usage(e.to_string()))?
        .with_dense_cap(dense_cap_from_env());
    if probe.dofs() > probe.dense_cap {
        return Err(Failure::Lib(Error::Size {
            rows: probe.dofs(),
            cap: probe.dense_cap,
        }));
    }
    let (defaults, command): (&[Preset], &str) = match dim {
        Dimension::One => (&[Preset::Classical, Preset::AlphaDelta, Preset::Clustering], "spectrum1d"),
        Dimension::Two => (
            &[Preset::Classical, Preset::AlphaDelta, Preset::Clustering, Preset::Numeric2d],
            "spectrum2d",
        ),
    };
    let sets = parameter_sets(a, defaults, (dim == Dimension::Two).then_some(&probe))?;

    let mut csv = String::from("re,im,preset\n");
    let mut series = Vec::new();
    for (name, p) in &sets {
        let cfg = probe.with_penalty(p.penalty);
        let tl = TwoLevel::new(&cfg, p)?;
        let report = SpectrumReport::new(spectrum::error_spectrum(&tl)?, a.cluster_tol, OperatorRole::Error);
        for z in &report.eigenvalues {
            let _ = writeln!(csv, "{},{},{name}", fmt_e(z.re), fmt_e(z.im));
        }
        let _ = writeln!(
            out,
            "{name}: alpha={:.6} delta0={:.6} c={:.6} rho={:.6} clusters={}",
            p.alpha,
            p.penalty,
            p.discontinuity,
            report.spectral_radius,
            report.clusters.len()
        );
        series.push(Series {
            label: name.clone(),
            points: report.eigenvalues.iter().map(|z: &c64| (z.re, z.im)).collect(),
        });
    }
    if a.format.csv() {
        write_file(&output_path(&a.out, "_spectrum.csv"), &csv)?;
    }
    if a.format.svg() {
        let plot = Plot {
            title: format!("Error operator spectrum, J={cells}"),
            x_label: "Re".into(),
            y_label: "Im".into(),
            style: Style::Markers,
            series,
        };
        write_file(&output_path(&a.out, "_spectrum.svg"), &plot.render())?;
    }
    write_meta(a, command, &[cells], dim, bc, &sets)
}

fn cmd_gmres_sweep(a: &RunArgs, out: &mut dyn Write) -> Run<()> {
    check_common(a)?;
    let cells = if a.cells.is_empty() { vec![16, 32, 64, 128, 256] } else { a.cells.clone() };
    let dim = match a.dim.unwrap_or(DimArg::One) {
        DimArg::One => Dimension::One,
        DimArg::Two => Dimension::Two,
    };
    let bc: BoundaryCondition = a.bc.unwrap_or(BcArg::Dirichlet).into();
    let sets = parameter_sets(a, &[Preset::Classical, Preset::Clustering], None)?;
    let mut csv = String::from("J,preset,iterations,final_relres\n");
    let mut series: Vec<Series> = sets
        .iter()
        .map(|(n, _)| Series {
            label: n.clone(),
            points: Vec::new(),
        })
        .collect();
    for &j in &cells {
        for ((name, p), s) in sets.iter().zip(series.iter_mut()) {
            let cfg = DiscretizationConfig::new(j, p.penalty, bc, dim)
                .map_err(|e| Failure::Usage(e.to_string()))?
                .with_dense_cap(dense_cap_from_env());
            let tl = TwoLevel::new(&cfg, p)?;
            let b = source_vector(&cfg);
            let r = gmres(|x| tl.apply_a(x), |x| tl.apply_preconditioner(x), &b, a.tol, tl.dofs());
            if !r.converged {
                return Err(Failure::Lib(Error::Diverged {
                    iterations: r.iterations,
                    residual: r.relative_residual,
                }));
            }
            let _ = writeln!(csv, "{j},{name},{},{}", r.iterations, fmt_e(r.relative_residual));
            let _ = writeln!(out, "J={j} {name}: {} iterations, relres {:.3e}", r.iterations, r.relative_residual);
            s.points.push((j as f64, r.iterations as f64));
        }
    }
    if a.format.csv() {
        write_file(&output_path(&a.out, "_gmres.csv"), &csv)?;
    }
    if a.format.svg() {
        let plot = Plot {
            title: format!("GMRES iterations, tol {:.0e}", a.tol),
            x_label: "J".into(),
            y_label: "iterations".into(),
            style: Style::Lines,
            series,
        };
        write_file(&output_path(&a.out, "_gmres.svg"), &plot.render())?;
    }
    write_meta(a, "gmres-sweep", &cells, dim, bc, &sets)
}

fn cmd_optimize(a: &RunArgs, out: &mut dyn Write) -> Run<()> {
    check_common(a)?;
    let sol = optimize::clustering_parameters();
    let newton = optimize::solve_clustering_system(&MethodParams::new(0.9, 1.5, 0.55)?)?;
    let (alpha_classical, rho_classical) = optimize::optimize_1d_alpha(2.0, 0.5);
    let (alpha_ad, delta_ad, rho_ad) = optimize::optimize_1d_alpha_delta(0.5);
    let p = sol.params;
    let newton_gap = (newton.params.alpha - p.alpha)
        .abs()
        .max((newton.params.penalty - p.penalty).abs())
        .max((newton.params.discontinuity - p.discontinuity).abs());
    let rows: Vec<(&str, f64)> = vec![
        ("alpha", p.alpha),
        ("delta0", p.penalty),
        ("c", p.discontinuity),
        ("quartic_residual_c", sol.quartic_residuals[0]),
        ("quartic_residual_delta0", sol.quartic_residuals[1]),
        ("quartic_residual_alpha", sol.quartic_residuals[2]),
        ("system_residual_1", sol.residuals[0]),
        ("system_residual_2", sol.residuals[1]),
        ("system_residual_3", sol.residuals[2]),
        ("rho", sol.rho),
        ("newton_max_difference", newton_gap),
        ("classical_alpha", alpha_classical),
        ("classical_rho", rho_classical),
        ("alpha_delta_alpha", alpha_ad),
        ("alpha_delta_delta0", delta_ad),
        ("alpha_delta_rho", rho_ad),
    ];
    let mut csv = String::from("quantity,value\n");
    for (k, v) in &rows {
        let _ = writeln!(csv, "{k},{}", fmt_e(*v));
    }
    let _ = writeln!(
        out,
        "clustering: alpha={:.6} delta0={:.6} c={:.6} rho={:.5}",
        p.alpha, p.penalty, p.discontinuity, sol.rho
    );
    let _ = writeln!(out, "classical (delta0=2, c=0.5): alpha={alpha_classical:.6} rho={rho_classical:.6}");
    let _ = writeln!(out, "alpha-delta (c=0.5): alpha={alpha_ad:.6} delta0={delta_ad:.6} rho={rho_ad:.6}");
    if a.format.csv() {
        write_file(&output_path(&a.out, "_optimize.csv"), &csv)?;
    }
    if a.format.svg() {
        let grid = lfa::phase_grid(200);
        let curve = |p: &MethodParams| -> Series {
            Series {
                label: String::new(),
                points: grid
                    .iter()
                    .filter_map(|&phi| lfa::lambda_closed_form_phase(phi, p).ok().map(|s| (phi, s.modulus())))
                    .collect(),
            }
        };
        let sets = [
            ("classical", MethodParams::classical()),
            ("alpha-delta", MethodParams::unchecked(alpha_ad, delta_ad, 0.5)),
            ("clustering", p),
        ];
        let plot = Plot {
            title: "max |λ±| over the coarse phase".into(),
            x_label: "phase 4πk/J".into(),
            y_label: "|λ|".into(),
            style: Style::Lines,
            series: sets
                .iter()
                .map(|(n, p)| Series {
                    label: n.to_string(),
                    ..curve(p)
                })
                .collect(),
        };
        write_file(&output_path(&a.out, "_optimize.svg"), &plot.render())?;
    }
    write_meta(
        a,
        "optimize",
        &[],
        Dimension::One,
        BoundaryCondition::Periodic,
        &[("clustering".to_string(), p)],
    )?;
    let worst = sol.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if worst > 1e-9 {
        return Err(Failure::Verify(format!("nonlinear residual {worst:e} exceeds 1e-9")));
    }
    Ok(())
}

fn cmd_lfa_verify(a: &RunArgs, out: &mut dyn Write) -> Run<()> {
    check_common(a)?;
    if a.bc == Some(BcArg::Dirichlet) || a.dim == Some(DimArg::Two) {
        return Err(Failure::Usage("lfa-verify works on 1D periodic meshes only".into()));
    }
    let cells = if a.cells.is_empty() { vec![4, 8, 16, 32] } else { a.cells.clone() };
    let sets = parameter_sets(a, &[Preset::Classical, Preset::AlphaDelta, Preset::Clustering], None)?;
    let variant = if a.inject_fault { SymbolVariant::FlippedCosine } else { SymbolVariant::Exact };
    let mut csv = String::from("J,preset,spectrum,galerkin,closed_form\n");
    let mut worst = 0.0f64;
    for &j in &cells {
        if j < 2 || !j.is_multiple_of(2) {
            return Err(Failure::Usage(format!("cell count must be even and >= 2, got {j}")));
        }
        for (name, p) in &sets {
            let d = lfa::dense_oracle_variant(j, p, variant)?;
            worst = worst.max(d.max());
            let _ = writeln!(
                csv,
                "{j},{name},{},{},{}",
                fmt_e(d.spectrum),
                fmt_e(d.galerkin),
                fmt_e(d.closed_form)
            );
            let _ = writeln!(out, "J={j} {name}: max deviation {:.3e}", d.max());
        }
    }
    if a.format.csv() {
        write_file(&output_path(&a.out, "_lfa.csv"), &csv)?;
    }
    write_meta(a, "lfa-verify", &cells, Dimension::One, BoundaryCondition::Periodic, &sets)?;
    if worst > VERIFY_TOL {
        return Err(Failure::Verify(format!(
            "symbol deviation {worst:e} exceeds {VERIFY_TOL:e}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(fmt_e(0.123456789012345), "1.234567890123e-01");
        assert_eq!(fmt_e(-2.5e10), "-2.500000000000e+10");
        assert_eq!(fmt_e(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e(1e-100), "1.000000000000e-100");
    }

    #[test]
    fn output_suffixes() {
        assert_eq!(output_path(Path::new("/tmp/run"), "_meta.txt"), PathBuf::from("/tmp/run_meta.txt"));
    }

    #[test]
    fn presets_resolve() {
        let c = resolve_preset(Preset::Classical, None, 1).unwrap();
        assert_eq!(c, MethodParams::classical());
        assert!(matches!(resolve_preset(Preset::Numeric2d, None, 1), Err(Failure::Usage(_))));
    }
}
