//! Browser bindings for the interactive demo in `www/`.
//!
//! Each export returns a flat `Float64Array`. The `*_impl` functions hold the
//! logic and are what the native tests exercise.

use dgml::discretization::{source_vector, BoundaryCondition, DiscretizationConfig};
use dgml::lfa;
use dgml::optimize;
use dgml::solver::gmres;
use dgml::spectrum;
use dgml::twolevel::{MethodParams, TwoLevel};
use wasm_bindgen::prelude::*;

/// Largest mesh the page may request; keeps dense eigensolves interactive.
pub const MAX_CELLS_SPECTRUM: usize = 256;
pub const MAX_CELLS_GMRES: usize = 4096;

fn params(alpha: f64, delta0: f64, c: f64) -> Result<MethodParams, String> {
    MethodParams::new(alpha, delta0, c).map_err(|e| e.to_string())
}

fn bc(periodic: bool) -> BoundaryCondition {
    if periodic {
        BoundaryCondition::Periodic
    } else {
        BoundaryCondition::Dirichlet
    }
}

/// `[φ₀, |λ₊|₀, |λ₋|₀, φ₁, …]` over `n` coarse phases; undefined points are NaN.
pub fn lfa_curve_impl(alpha: f64, delta0: f64, c: f64, n: usize) -> Result<Vec<f64>, String> {
    let p = params(alpha, delta0, c)?;
    if n == 0 || n > 10_000 {
        return Err(format!("phase count must lie in 1..=10000, got {n}"));
    }
    let mut out = Vec::with_capacity(3 * n);
    for phi in lfa::phase_grid(n) {
        let (lp, lm) = match lfa::lambda_closed_form_phase(phi, &p) {
            Ok(s) => (s.lambda_plus.norm(), s.lambda_minus.norm()),
            Err(_) => (f64::NAN, f64::NAN),
        };
        out.extend([phi, lp, lm]);
    }
    Ok(out)
}

/// Error-operator eigenvalues on a 1D mesh as `[re₀, im₀, re₁, im₁, …]`.
pub fn error_spectrum_1d_impl(cells: usize, alpha: f64, delta0: f64, c: f64, periodic: bool) -> Result<Vec<f64>, String> {
    let p = params(alpha, delta0, c)?;
    if cells > MAX_CELLS_SPECTRUM {
        return Err(format!("at most {MAX_CELLS_SPECTRUM} cells, got {cells}"));
    }
    let cfg = DiscretizationConfig::one_d(cells, delta0, bc(periodic)).map_err(|e| e.to_string())?;
    let tl = TwoLevel::new(&cfg, &p).map_err(|e| e.to_string())?;
    let eigs = spectrum::error_spectrum(&tl).map_err(|e| e.to_string())?;
    Ok(eigs.iter().flat_map(|z| [z.re, z.im]).collect())
}

/// Preconditioned GMRES residual history, normalized by the initial residual.
pub fn gmres_history_impl(cells: usize, alpha: f64, delta0: f64, c: f64, tol: f64) -> Result<Vec<f64>, String> {
    let p = params(alpha, delta0, c)?;
    if cells > MAX_CELLS_GMRES {
        return Err(format!("at most {MAX_CELLS_GMRES} cells, got {cells}"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(format!("tolerance must lie in (0, 1), got {tol}"));
    }
    let cfg = DiscretizationConfig::one_d(cells, delta0, BoundaryCondition::Dirichlet).map_err(|e| e.to_string())?;
    let tl = TwoLevel::new(&cfg, &p).map_err(|e| e.to_string())?;
    let b = source_vector(&cfg);
    let r = gmres(|x| tl.apply_a(x), |x| tl.apply_preconditioner(x), &b, tol, tl.dofs());
    let r0 = r.residual_history[0];
    Ok(r.residual_history.iter().map(|v| v / r0).collect())
}

/// `[α, δ₀, c, ρ]` of the clustering triple.
pub fn clustering_parameters_impl() -> Vec<f64> {
    let s = optimize::clustering_parameters();
    vec![s.params.alpha, s.params.penalty, s.params.discontinuity, s.rho]
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn lfa_curve(alpha: f64, delta0: f64, c: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    js(lfa_curve_impl(alpha, delta0, c, n))
}

#[wasm_bindgen]
pub fn error_spectrum_1d(cells: usize, alpha: f64, delta0: f64, c: f64, periodic: bool) -> Result<Vec<f64>, JsValue> {
    js(error_spectrum_1d_impl(cells, alpha, delta0, c, periodic))
}

#[wasm_bindgen]
pub fn gmres_history(cells: usize, alpha: f64, delta0: f64, c: f64, tol: f64) -> Result<Vec<f64>, JsValue> {
    js(gmres_history_impl(cells, alpha, delta0, c, tol))
}

#[wasm_bindgen]
pub fn clustering_parameters() -> Vec<f64> {
    clustering_parameters_impl()
}
