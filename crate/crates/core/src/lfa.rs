//! Fourier symbols of the periodic 1D two-level method.
//!
//! Frequency `k ∈ [0, J/2)` couples the fine phases `θ − π` and `θ` with
//! `θ = 2πk/J`; each block acts on the left/right dof pair of both phases, so
//! fine symbols are 4×4 and coarse symbols 2×2. The basis puts the phase of a
//! right dof at the node it sits on, which makes `Â` real.
//!
//! Every symbol is also available as a function of the continuous coarse
//! phase `φ = 2θ ∈ [0, 2π)` for plotting.

use std::f64::consts::{PI, SQRT_2};

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::twolevel::MethodParams;

/// Cell parity of the reference coarse node. Even is used throughout; odd
/// only differs by the similarity `(−1)^j I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// One frequency block of a symbol.
#[derive(Debug, Clone)]
pub struct FourierBlock {
    pub k: usize,
    pub cells: usize,
    pub parity: Parity,
    pub entries: Mat<c64>,
}

/// `λ± = c₁ ± √(c₂/c₃)` with its intermediates.
#[derive(Debug, Clone, Copy)]
pub struct SymbolEigenvalues {
    pub k: usize,
    pub lambda_plus: c64,
    pub lambda_minus: c64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl SymbolEigenvalues {
    pub fn modulus(&self) -> f64 {
        self.lambda_plus.norm().max(self.lambda_minus.norm())
    }
}

fn check_frequency(k: usize, cells: usize) -> Result<()> {
    if cells < 2 || !cells.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "cell count must be even and >= 2, got {cells}"
        )));
    }
    if k >= cells / 2 {
        return Err(Error::FrequencyOutOfRange { k, cells });
    }
    Ok(())
}

/// Coarse phase `φ = 4πk/J`.
pub fn coarse_phase(k: usize, cells: usize) -> f64 {
    4.0 * PI * k as f64 / cells as f64
}

fn c(re: f64) -> c64 {
    c64::new(re, 0.0)
}

fn block(k: usize, cells: usize, parity: Parity, entries: Mat<c64>) -> FourierBlock {
    FourierBlock {
        k,
        cells,
        parity,
        entries,
    }
}

/// Symbol variant; `FlippedCosine` reproduces a sign error in the
/// `θ − π` block and exists to exercise the verification path.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolVariant {
    Exact,
    FlippedCosine,
}

/// `Â(φ)` in units of `1/h²`.
pub fn a_hat_phase(phi: f64, delta0: f64) -> Mat<c64> {
    a_hat_variant(phi, delta0, SymbolVariant::Exact)
}

fn a_hat_variant(phi: f64, delta0: f64, variant: SymbolVariant) -> Mat<c64> {
    let theta = 0.5 * phi;
    let lo = match variant {
        SymbolVariant::Exact => delta0 - (theta - PI).cos(),
        SymbolVariant::FlippedCosine => delta0 + (theta - PI).cos(),
    };
    let hi = delta0 - theta.cos();
    let off = 1.0 - delta0;
    let mut m = Mat::<c64>::zeros(4, 4);
    m[(0, 0)] = c(lo);
    m[(1, 1)] = c(lo);
    m[(0, 1)] = c(off);
    m[(1, 0)] = c(off);
    m[(2, 2)] = c(hi);
    m[(3, 3)] = c(hi);
    m[(2, 3)] = c(off);
    m[(3, 2)] = c(off);
    m
}

/// `R̂(φ)`, 2×4.
pub fn r_hat_phase(phi: f64, discontinuity: f64, parity: Parity) -> Mat<c64> {
    let cc = discontinuity;
    let e = c64::from_polar(1.0, 0.5 * phi);
    let f = e.conj();
    let s = parity.sign();
    let scale = 1.0 / (2.0 * SQRT_2);
    let one = c(1.0);
    let rows = [
        [one + e * (cc - 1.0), -e * cc, (one - e * (cc - 1.0)) * s, e * cc * s],
        [-f * cc * s, (one + f * (cc - 1.0)) * s, f * cc, one - f * (cc - 1.0)],
    ];
    Mat::from_fn(2, 4, |i, j| rows[i][j] * scale)
}

/// `P̂ = 2 R̂*`, 4×2.
pub fn p_hat_phase(phi: f64, discontinuity: f64, parity: Parity) -> Mat<c64> {
    let r = r_hat_phase(phi, discontinuity, parity);
    Mat::from_fn(4, 2, |i, j| r[(j, i)].conj() * 2.0)
}

/// `Â₀(φ)` in units of `1/h²` (fine mesh width).
pub fn a0_hat_phase(phi: f64, delta0: f64, discontinuity: f64, parity: Parity) -> Mat<c64> {
    let (d, cc) = (delta0, discontinuity);
    let diag = 0.5 * (cc * (4.0 * (cc - 1.0) * d - 2.0 * cc + 3.0) + (cc - 1.0) * phi.cos() + 2.0 * d - 1.0);
    let e = c64::from_polar(1.0, phi);
    let g = (2.0 * cc - 1.0) * (cc * (2.0 * d - 1.0) - d + 1.0);
    let base = -cc - d + 1.0;
    let s = parity.sign();
    let off = (e * (-g) + base) * (0.5 * s);
    let off_conj = (e.conj() * (-g) + base) * (0.5 * s);
    let mut m = Mat::<c64>::zeros(2, 2);
    m[(0, 0)] = c(diag);
    m[(1, 1)] = c(diag);
    m[(0, 1)] = off;
    m[(1, 0)] = off_conj;
    m
}

fn inv2(m: &Mat<c64>) -> Option<Mat<c64>> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let scale = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].norm())
        .fold(0.0, f64::max);
    if det.norm() <= 1e-12 * scale * scale {
        return None;
    }
    let inv = c(1.0) / det;
    let mut out = Mat::<c64>::zeros(2, 2);
    out[(0, 0)] = m[(1, 1)] * inv;
    out[(1, 1)] = m[(0, 0)] * inv;
    out[(0, 1)] = -m[(0, 1)] * inv;
    out[(1, 0)] = -m[(1, 0)] * inv;
    Some(out)
}

/// Pseudo-inverse of a Hermitian 2×2 block, dropping eigenvalues below
/// `1e-12` relative.
fn pinv2_hermitian(m: &Mat<c64>) -> Mat<c64> {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    let (l1, l2) = (mean - rad, mean + rad);
    let tol = 1e-12 * l1.abs().max(l2.abs());
    let mut out = Mat::<c64>::zeros(2, 2);
    for (lam, other) in [(l1, l2), (l2, l1)] {
        if lam.abs() <= tol {
            continue;
        }
        // spectral projector onto the `lam` eigenspace
        let denom = lam - other;
        let proj = |i: usize, j: usize| {
            let id = if i == j { 1.0 } else { 0.0 };
            if denom.abs() <= tol {
                c(0.5 * id)
            } else {
                (m[(i, j)] - c(other * id)) / denom
            }
        };
        for i in 0..2 {
            for j in 0..2 {
                out[(i, j)] += proj(i, j) / lam;
            }
        }
    }
    out
}

fn scaled(m: &Mat<c64>, s: f64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

fn identity4() -> Mat<c64> {
    Mat::from_fn(4, 4, |i, j| if i == j { c(1.0) } else { c(0.0) })
}

/// `(I − P̂ Â₀⁺ R̂ Â)(I − α D̂⁻¹ Â)`, scale-free in `h`.
fn e_hat_with(phi: f64, params: &MethodParams, coarse_inv: Mat<c64>, variant: SymbolVariant) -> Mat<c64> {
    let a = a_hat_variant(phi, params.penalty, variant);
    let r = r_hat_phase(phi, params.discontinuity, Parity::Even);
    let p = p_hat_phase(phi, params.discontinuity, Parity::Even);
    let id = identity4();
    let smooth = &id - scaled(&a, params.alpha / params.penalty);
    let coarse = &id - &p * (&coarse_inv * (&r * &a));
    &coarse * &smooth
}

/// `Ê(φ)`; `None` where `Â₀(φ)` is singular.
pub fn e_hat_phase(phi: f64, params: &MethodParams) -> Option<Mat<c64>> {
    let a0 = a0_hat_phase(phi, params.penalty, params.discontinuity, Parity::Even);
    inv2(&a0).map(|inv| e_hat_with(phi, params, inv, SymbolVariant::Exact))
}

/// `Ê(φ)` with the coarse kernel deflated by the pseudo-inverse.
pub fn e_hat_phase_deflated(phi: f64, params: &MethodParams) -> Mat<c64> {
    e_hat_deflated_variant(phi, params, SymbolVariant::Exact)
}

fn e_hat_deflated_variant(phi: f64, params: &MethodParams, variant: SymbolVariant) -> Mat<c64> {
    let a0 = a0_hat_phase(phi, params.penalty, params.discontinuity, Parity::Even);
    e_hat_with(phi, params, pinv2_hermitian(&a0), variant)
}

pub fn symbol_a(k: usize, cells: usize, delta0: f64) -> Result<FourierBlock> {
    check_frequency(k, cells)?;
    let h2 = (cells * cells) as f64;
    let m = scaled(&a_hat_phase(coarse_phase(k, cells), delta0), h2);
    Ok(block(k, cells, Parity::Even, m))
}

/// `D̂⁻¹ = (h²/δ₀) I₄`.
pub fn symbol_d_inv(delta0: f64, h: f64) -> Mat<c64> {
    scaled(&identity4(), h * h / delta0)
}

pub fn symbol_r(k: usize, cells: usize, discontinuity: f64, parity: Parity) -> Result<FourierBlock> {
    check_frequency(k, cells)?;
    let m = r_hat_phase(coarse_phase(k, cells), discontinuity, parity);
    Ok(block(k, cells, parity, m))
}

pub fn symbol_p(k: usize, cells: usize, discontinuity: f64, parity: Parity) -> Result<FourierBlock> {
    check_frequency(k, cells)?;
    let m = p_hat_phase(coarse_phase(k, cells), discontinuity, parity);
    Ok(block(k, cells, parity, m))
}

pub fn symbol_a0(
    k: usize,
    cells: usize,
    delta0: f64,
    discontinuity: f64,
    parity: Parity,
) -> Result<FourierBlock> {
    check_frequency(k, cells)?;
    let h2 = (cells * cells) as f64;
    let m = scaled(&a0_hat_phase(coarse_phase(k, cells), delta0, discontinuity, parity), h2);
    Ok(block(k, cells, parity, m))
}

/// Error symbol; fails with [`Error::KernelFrequency`] where `Â₀(k)` is
/// singular.
pub fn symbol_e(k: usize, cells: usize, params: &MethodParams) -> Result<FourierBlock> {
    check_frequency(k, cells)?;
    e_hat_phase(coarse_phase(k, cells), params)
        .map(|m| block(k, cells, Parity::Even, m))
        .ok_or(Error::KernelFrequency { k })
}

pub fn symbol_e_deflated(k: usize, cells: usize, params: &MethodParams) -> Result<FourierBlock> {
    check_frequency(k, cells)?;
    let m = e_hat_phase_deflated(coarse_phase(k, cells), params);
    Ok(block(k, cells, Parity::Even, m))
}

/// Eigenvalues of a small complex block.
pub fn block_eigenvalues(m: &Mat<c64>) -> Result<Vec<c64>> {
    m.eigenvalues()
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

/// Union over `k ∈ [0, J/2)` of the eigenvalues of the deflated `Ê(k)`;
/// `2J` values, the spectrum of the dense periodic error operator.
pub fn error_spectrum(cells: usize, params: &MethodParams) -> Result<Vec<c64>> {
    error_spectrum_variant(cells, params, SymbolVariant::Exact)
}

#[doc(hidden)]
pub fn error_spectrum_variant(cells: usize, params: &MethodParams, variant: SymbolVariant) -> Result<Vec<c64>> {
    check_frequency(0, cells)?;
    let mut out = Vec::with_capacity(2 * cells);
    for k in 0..cells / 2 {
        let e = e_hat_deflated_variant(coarse_phase(k, cells), params, variant);
        out.extend(block_eigenvalues(&e)?);
    }
    Ok(out)
}

/// Largest deviations between the symbols and the dense periodic operators.
#[derive(Debug, Clone, Copy)]
pub struct OracleDeviation {
    pub cells: usize,
    /// Dense error-operator spectrum against the union of block spectra.
    pub spectrum: f64,
    /// `Â₀ − R̂ Â P̂`, relative to `‖Â‖`.
    pub galerkin: f64,
    /// Closed-form `λ±` against block eigenvalues, non-kernel frequencies.
    pub closed_form: f64,
}

impl OracleDeviation {
    pub fn max(&self) -> f64 {
        self.spectrum.max(self.galerkin).max(self.closed_form)
    }
}

/// Compares the symbols with the dense periodic 1D operators at `J` cells.
pub fn dense_oracle(cells: usize, params: &MethodParams) -> Result<OracleDeviation> {
    dense_oracle_variant(cells, params, SymbolVariant::Exact)
}

#[doc(hidden)]
pub fn dense_oracle_variant(cells: usize, params: &MethodParams, variant: SymbolVariant) -> Result<OracleDeviation> {
    use crate::discretization::{BoundaryCondition, DiscretizationConfig};
    use crate::spectrum::{eigenvalues_dense, multiset_distance};
    use crate::twolevel::TwoLevel;

    let cfg = DiscretizationConfig::one_d(cells, params.penalty, BoundaryCondition::Periodic)?;
    let tl = TwoLevel::new(&cfg, params)?;
    let dense = eigenvalues_dense(&tl.error_operator())?;
    let symbol = error_spectrum_variant(cells, params, variant)?;
    let spectrum = multiset_distance(&dense, &symbol);

    let mut galerkin = 0.0f64;
    let mut closed_form = 0.0f64;
    for k in 0..cells / 2 {
        let phi = coarse_phase(k, cells);
        let a = a_hat_variant(phi, params.penalty, variant);
        let r = r_hat_phase(phi, params.discontinuity, Parity::Even);
        let p = p_hat_phase(phi, params.discontinuity, Parity::Even);
        let a0 = a0_hat_phase(phi, params.penalty, params.discontinuity, Parity::Even);
        let prod = &r * (&a * &p);
        let scale = (0..4).map(|i| a[(i, i)].norm()).fold(1.0, f64::max);
        for i in 0..2 {
            for j in 0..2 {
                galerkin = galerkin.max((prod[(i, j)] - a0[(i, j)]).norm() / scale);
            }
        }
        if let Some(inv) = inv2(&a0) {
            let e = e_hat_with(phi, params, inv, variant);
            let s = lambda_closed_form_phase(phi, params)?;
            let zero = c(0.0);
            let expect = [zero, zero, s.lambda_plus, s.lambda_minus];
            closed_form = closed_form.max(multiset_distance(&block_eigenvalues(&e)?, &expect));
        }
    }
    Ok(OracleDeviation {
        cells,
        spectrum,
        galerkin,
        closed_form,
    })
}

/// Closed-form `λ±` at coarse phase `φ`.
pub fn lambda_closed_form_phase(phi: f64, params: &MethodParams) -> Result<SymbolEigenvalues> {
    let (al, d, cc) = (params.alpha, params.penalty, params.discontinuity);
    let co = phi.cos();
    let num = -al * (3.0 * cc * cc * d * (4.0 * d - 3.0) + cc * (-12.0 * d * d + 9.0 * d + 1.0) + 4.0 * d * d - 2.0 * d - 1.0)
        + d * (cc * cc * (8.0 * d * d - 4.0 * d - 1.0) + cc * (-8.0 * d * d + 4.0 * d + 2.0) + 2.0 * d * d - 1.0)
        + (1.0 - cc) * (al + al * cc * (d - 2.0) + (cc - 1.0) * d) * co;
    let den = d * (2.0 * d * d - 1.0)
        + d * cc * cc * (8.0 * d * d - 4.0 * d - 1.0)
        + d * cc * (-8.0 * d * d + 4.0 * d + 2.0)
        - d * (cc - 1.0).powi(2) * co;
    let cm1 = cc - 1.0;
    let c2 = al * al
        * (16.0 * cm1 * cm1 * cc * cc * d.powi(4)
            - 2.0 * cm1 * cm1 * (4.0 * cc * cc + cc + 2.0) * d
            - 8.0 * cm1 * cc * (3.0 * cm1 * cc - 1.0) * d.powi(3)
            + (cc * (17.0 * cc + 8.0) * cm1 * cm1 + 2.0) * d * d
            + 2.0 * cm1 * cm1 * (cm1 * cc + 1.0))
        + 2.0 * al * al
            * (4.0 * cm1 * cc * d * d - 3.0 * cm1 * cc * d + cc + d - 1.0)
            * (cc * (3.0 * cm1 * d - 2.0 * cc + 3.0) + d - 1.0)
            * co
        + al * al * cm1 * cm1 * cc * (cc * ((d - 4.0) * d + 2.0) + 2.0 * (d - 1.0)) * co * co;
    let c3 = d * d * (4.0 * cc * cm1 * d - 2.0 * (1.0 - 2.0 * cc).powi(2) * d * d + cm1 * cm1).powi(2)
        + 2.0 * d * d * (-2.0 * (2.0 * cc * cc - 3.0 * cc + 1.0).powi(2) * d * d + 4.0 * cc * cm1.powi(3) * d + cm1.powi(4)) * co
        + cm1.powi(4) * d * d * co * co;
    let scale = d.powi(6).max(1.0);
    if c3.abs() <= 1e-14 * scale || den.abs() <= 1e-14 * d.powi(3) {
        return Err(Error::Degenerate(format!(
            "closed form undefined at α={al}, δ₀={d}, c={cc}, φ={phi}"
        )));
    }
    let c1 = num / den;
    let root = c(c2 / c3).sqrt();
    Ok(SymbolEigenvalues {
        k: 0,
        lambda_plus: c(c1) + root,
        lambda_minus: c(c1) - root,
        c1,
        c2,
        c3,
    })
}

pub fn lambda_closed_form(k: usize, cells: usize, params: &MethodParams) -> Result<SymbolEigenvalues> {
    check_frequency(k, cells)?;
    let mut s = lambda_closed_form_phase(coarse_phase(k, cells), params)?;
    s.k = k;
    Ok(s)
}

/// `n` equispaced coarse phases in `[0, 2π)`.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// Closed-form eigenvalues for every `k ∈ [0, J/2)`.
pub fn sweep(cells: usize, params: &MethodParams) -> Result<Vec<SymbolEigenvalues>> {
    check_frequency(0, cells)?;
    (0..cells / 2)
        .map(|k| lambda_closed_form(k, cells, params))
        .collect()
}

/// `max_φ max(|λ₊|, |λ₋|)` over an `n`-point phase grid.
pub fn symbol_radius(params: &MethodParams, n: usize) -> Result<f64> {
    let mut rho = 0.0f64;
    for phi in phase_grid(n) {
        rho = rho.max(lambda_closed_form_phase(phi, params)?.modulus());
    }
    Ok(rho)
}
