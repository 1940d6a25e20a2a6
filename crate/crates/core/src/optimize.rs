//! Parameter selection: the clustering triple from its defining quartics,
//! a Newton solver for the underlying nonlinear system, and derivative-free
//! minimization of the spectral radius.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::discretization::DiscretizationConfig;
use crate::error::{Error, Result};
use crate::lfa;
use crate::spectrum;
use crate::twolevel::{MethodParams, TwoLevel};

/// `4c⁴ − 8c³ + 8c² − 8c + 3`, ascending coefficients.
pub const C_QUARTIC: [f64; 5] = [3.0, -8.0, 8.0, -8.0, 4.0];
/// `12δ⁴ − 32δ³ + 24δ² − 4δ − 1`
pub const DELTA0_QUARTIC: [f64; 5] = [-1.0, -4.0, 24.0, -32.0, 12.0];
/// `183α⁴ − 352α³ + 214α² − 40α − 1`
pub const ALPHA_QUARTIC: [f64; 5] = [-1.0, -40.0, 214.0, -352.0, 183.0];

/// Upper end of the `δ₀` search bracket.
pub const DELTA0_BRACKET_MAX: f64 = 10.0;

/// Phase grid used by the 1D objective.
pub const DEFAULT_PHASE_POINTS: usize = 512;

/// Horner evaluation, ascending coefficients.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

fn trim(mut p: Vec<f64>) -> Vec<f64> {
    let scale = p.iter().map(|c| c.abs()).fold(0.0, f64::max);
    while p.len() > 1 && p.last().is_some_and(|c| c.abs() <= 1e-13 * scale) {
        p.pop();
    }
    p
}

/// Remainder of `a / b` (ascending coefficients).
fn poly_rem(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db];
    while r.len() > db && !r.is_empty() {
        let dr = r.len() - 1;
        let q = r[dr] / lead;
        for i in 0..=db {
            r[dr - db + i] -= q * b[i];
        }
        r.pop();
    }
    if r.is_empty() {
        vec![0.0]
    } else {
        trim(r)
    }
}

fn sturm_chain(coeffs: &[f64]) -> Vec<Vec<f64>> {
    let p0 = trim(coeffs.to_vec());
    let mut chain = vec![p0.clone()];
    if p0.len() < 2 {
        return chain;
    }
    chain.push(trim(poly_derivative(&p0)));
    loop {
        let n = chain.len();
        if chain[n - 1].len() < 2 {
            break;
        }
        let r = poly_rem(&chain[n - 2], &chain[n - 1]);
        if r.iter().all(|&c| c == 0.0) {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
    }
    chain
}

fn sign_changes(chain: &[Vec<f64>], x: f64) -> usize {
    let mut count = 0;
    let mut last = 0.0f64;
    for p in chain {
        let v = poly_eval(p, x);
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

/// Distinct real roots of a polynomial (ascending coefficients, degree ≤ 4
/// in practice) in the open interval `(lo, hi)`: Sturm isolation, bisection
/// and Newton polishing.
pub fn real_roots_in_interval(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    assert!(lo < hi, "empty interval");
    let chain = sturm_chain(coeffs);
    if chain[0].len() < 2 {
        return Vec::new();
    }
    let count = |a: f64, b: f64| sign_changes(&chain, a).saturating_sub(sign_changes(&chain, b));
    let mut roots = Vec::new();
    let mut stack = vec![(lo, hi)];
    while let Some((a, b)) = stack.pop() {
        let n = count(a, b);
        if n == 0 {
            continue;
        }
        if n == 1 || b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            roots.push(refine(coeffs, &chain, a, b));
            continue;
        }
        let m = 0.5 * (a + b);
        stack.push((m, b));
        stack.push((a, m));
    }
    // roots exactly at an interior split point are counted in neither half
    roots.retain(|&r| r > lo && r < hi);
    roots.sort_by(f64::total_cmp);
    // a multiple root is only resolved to about √ε and may be isolated twice
    roots.dedup_by(|a, b| {
        let same = (*a - *b).abs() <= 1e-7 * (1.0 + b.abs());
        if same && poly_eval(coeffs, *a).abs() < poly_eval(coeffs, *b).abs() {
            *b = *a;
        }
        same
    });
    roots
}

fn refine(coeffs: &[f64], chain: &[Vec<f64>], mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let m = 0.5 * (a + b);
        if poly_eval(coeffs, m) == 0.0 {
            return m;
        }
        let left = sign_changes(chain, a).saturating_sub(sign_changes(chain, m));
        if left >= 1 {
            b = m;
        } else {
            a = m;
        }
    }
    let d = poly_derivative(coeffs);
    let mut x = 0.5 * (a + b);
    for _ in 0..4 {
        let dp = poly_eval(&d, x);
        if dp == 0.0 {
            break;
        }
        let next = x - poly_eval(coeffs, x) / dp;
        if !next.is_finite() || (next - x).abs() > (b - a).max(1e-12) * 4.0 {
            break;
        }
        if poly_eval(coeffs, next).abs() > poly_eval(coeffs, x).abs() {
            break;
        }
        x = next;
    }
    x
}

/// Parameter triple with its defining-equation residuals.
#[derive(Debug, Clone, Copy)]
pub struct ClusteringSolution {
    pub params: MethodParams,
    /// Residuals of the three nonlinear clustering equations.
    pub residuals: [f64; 3],
    /// Quartic residuals `p(c)`, `p(δ₀)`, `p(α)`.
    pub quartic_residuals: [f64; 3],
    /// Predicted spectral radius of the error operator.
    pub rho: f64,
    pub iterations: usize,
}

/// Residuals (LHS − RHS) of the three clustering equations.
pub fn clustering_system_residuals(p: &MethodParams) -> Result<[f64; 3]> {
    let (a, d, c) = (p.alpha, p.penalty, p.discontinuity);
    let r1 = a + a * c * (d - 2.0) + (c - 1.0) * d;
    let r2 = a * (3.0 * c * c * d * (4.0 * d - 3.0) + c * (-12.0 * d * d + 9.0 * d + 1.0) + 4.0 * d * d - 2.0 * d - 1.0)
        - d * (c * c * (8.0 * d * d - 4.0 * d - 1.0) + c * (-8.0 * d * d + 4.0 * d + 2.0) + 2.0 * d * d - 1.0);
    let cm1 = c - 1.0;
    let den_l = cm1.powi(4) * d * d;
    let den_r = 2.0 * d * d * (-2.0 * (2.0 * c * c - 3.0 * c + 1.0).powi(2) * d * d + 4.0 * c * cm1.powi(3) * d + cm1.powi(4));
    if den_l.abs() < 1e-300 || den_r.abs() < 1e-300 {
        return Err(Error::Degenerate(format!(
            "clustering equations undefined at α={a}, δ₀={d}, c={c}"
        )));
    }
    let lhs = 2.0 * a * a * cm1 * cm1 * c * (c * ((d - 4.0) * d + 2.0) + 2.0 * (d - 1.0)) / den_l;
    let rhs = 4.0
        * a
        * a
        * (4.0 * cm1 * c * d * d - 3.0 * cm1 * c * d + c + d - 1.0)
        * (c * (3.0 * cm1 * d - 2.0 * c + 3.0) + d - 1.0)
        / den_r;
    Ok([r1, r2, lhs - rhs])
}

fn norm3(r: &[f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

fn predicted_rho(p: &MethodParams) -> Result<f64> {
    Ok(lfa::lambda_closed_form_phase(0.0, p)?.modulus())
}

/// The clustering triple from the three quartics. Among admissible
/// `α`-roots the one that best satisfies the nonlinear system is kept.
pub fn clustering_parameters() -> ClusteringSolution {
    let c = *real_roots_in_interval(&C_QUARTIC, 0.0, 1.0)
        .first()
        .expect("c-quartic has a root in (0, 1)");
    let d = *real_roots_in_interval(&DELTA0_QUARTIC, 1.0, DELTA0_BRACKET_MAX)
        .first()
        .expect("δ₀-quartic has a root in (1, 10)");
    let (alpha, residuals) = real_roots_in_interval(&ALPHA_QUARTIC, 0.0, 1.0)
        .into_iter()
        .filter_map(|a| {
            clustering_system_residuals(&MethodParams::unchecked(a, d, c))
                .ok()
                .map(|r| (a, r))
        })
        .min_by(|x, y| norm3(&x.1).total_cmp(&norm3(&y.1)))
        .expect("α-quartic has a root in (0, 1)");
    let params = MethodParams::unchecked(alpha, d, c);
    ClusteringSolution {
        params,
        residuals,
        quartic_residuals: [
            poly_eval(&C_QUARTIC, c),
            poly_eval(&DELTA0_QUARTIC, d),
            poly_eval(&ALPHA_QUARTIC, alpha),
        ],
        rho: predicted_rho(&params).expect("closed form defined at the clustering triple"),
        iterations: 0,
    }
}

/// Damped Newton on [`clustering_system_residuals`] with a forward
/// difference Jacobian (relative step `1e-7`).
pub fn solve_clustering_system(initial: &MethodParams) -> Result<ClusteringSolution> {
    initial.validate()?;
    const MAX_ITER: usize = 100;
    let mut x = initial.as_array();
    let eval = |x: &[f64; 3]| clustering_system_residuals(&MethodParams::unchecked(x[0], x[1], x[2]));
    let mut r = eval(&x)?;
    let mut iterations = 0;
    while iterations < MAX_ITER && norm3(&r) > 1e-14 {
        iterations += 1;
        let mut jac = Mat::<f64>::zeros(3, 3);
        for j in 0..3 {
            let step = 1e-7 * x[j].abs().max(1e-3);
            let mut xp = x;
            xp[j] += step;
            let rp = eval(&xp)?;
            for i in 0..3 {
                jac[(i, j)] = (rp[i] - r[i]) / step;
            }
        }
        let rhs = Mat::from_fn(3, 1, |i, _| -r[i]);
        let dx = jac.partial_piv_lu().solve(&rhs);
        if (0..3).any(|i| !dx[(i, 0)].is_finite()) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            let trial = [x[0] + t * dx[(0, 0)], x[1] + t * dx[(1, 0)], x[2] + t * dx[(2, 0)]];
            if let Ok(rt) = eval(&trial) {
                if norm3(&rt) < norm3(&r) {
                    x = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let params = MethodParams::unchecked(x[0], x[1], x[2]);
    let res = norm3(&r);
    if res > 1e-10 || !params.in_box() {
        return Err(Error::NoConvergence {
            iterations,
            residual: res,
            alpha: x[0],
            delta0: x[1],
            c: x[2],
        });
    }
    Ok(ClusteringSolution {
        params,
        residuals: r,
        quartic_residuals: [
            poly_eval(&C_QUARTIC, x[2]),
            poly_eval(&DELTA0_QUARTIC, x[1]),
            poly_eval(&ALPHA_QUARTIC, x[0]),
        ],
        rho: predicted_rho(&params)?,
        iterations,
    })
}

/// `max_φ max |λ±(φ)|` over `n` phases; eigenvalues of `Ê(φ)` stand in
/// where the closed form is undefined.
pub fn lfa_radius(params: &MethodParams, n: usize) -> f64 {
    let mut rho = 0.0f64;
    for phi in lfa::phase_grid(n) {
        let m = match lfa::lambda_closed_form_phase(phi, params) {
            Ok(s) => s.modulus(),
            Err(_) => match lfa::e_hat_phase(phi, params) {
                Some(e) => lfa::block_eigenvalues(&e)
                    .map(|ev| spectrum::spectral_radius_of(&ev))
                    .unwrap_or(f64::INFINITY),
                None => continue,
            },
        };
        rho = rho.max(m);
    }
    rho
}

/// Golden-section minimization on `[lo, hi]`; returns `(x, f(x))`.
pub fn golden_section<F: FnMut(f64) -> Result<f64>>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Best `α ∈ (0, 1]` for fixed `δ₀`, `c`; returns `(α, ρ)`.
pub fn optimize_1d_alpha(delta0: f64, c: f64) -> (f64, f64) {
    golden_section(
        |a| Ok(lfa_radius(&MethodParams::unchecked(a, delta0, c), DEFAULT_PHASE_POINTS)),
        1e-3,
        1.0,
        1e-9,
    )
    .expect("objective is infallible")
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    pub xtol: f64,
    pub ftol: f64,
    /// Initial simplex edge, relative to each start coordinate.
    pub step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            xtol: 1e-10,
            ftol: 1e-13,
            step: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    /// Best objective value after each iteration; non-increasing.
    pub history: Vec<f64>,
}

/// Nelder–Mead with standard coefficients (1, 2, ½, ½).
pub fn nelder_mead<F: FnMut(&[f64]) -> Result<f64>>(
    mut f: F,
    start: &[f64],
    opts: NelderMeadOptions,
) -> Result<NelderMeadResult> {
    let n = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        let v = f(x)?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start, &mut evals)?));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += if x[i] != 0.0 { opts.step * x[i] } else { opts.step };
        let fx = eval(&x, &mut evals)?;
        simplex.push((x, fx));
    }
    let mut history = Vec::new();
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    order(&mut simplex);
    history.push(simplex[0].1);
    while evals < opts.max_evals {
        let spread_f = simplex[n].1 - simplex[0].1;
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread_x <= opts.xtol || (spread_f.is_finite() && spread_f <= opts.ftol) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (w - c)).collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals)?;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals)?;
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals)?;
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best.iter().zip(&s.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let fx = eval(&x, &mut evals)?;
                    *s = (x, fx);
                }
            }
        }
        order(&mut simplex);
        history.push(simplex[0].1);
    }
    let (x, fx) = simplex.swap_remove(0);
    Ok(NelderMeadResult {
        x,
        fx,
        evals,
        history,
    })
}

fn box_penalized(p: MethodParams, value: impl FnOnce(&MethodParams) -> Result<f64>) -> Result<f64> {
    if p.in_box() {
        value(&p)
    } else {
        Ok(f64::INFINITY)
    }
}

/// Restarted Nelder–Mead; each restart begins at the previous best point.
fn nelder_mead_restarted<F: FnMut(&[f64]) -> Result<f64>>(
    mut f: F,
    start: &[f64],
    opts: NelderMeadOptions,
    restarts: usize,
) -> Result<NelderMeadResult> {
    let mut best = nelder_mead(&mut f, start, opts)?;
    for _ in 0..restarts {
        let next = nelder_mead(&mut f, &best.x, NelderMeadOptions { step: opts.step * 0.2, ..opts })?;
        let improved = next.fx < best.fx;
        best.evals += next.evals;
        let floor = best.fx;
        best.history
            .extend(next.history.iter().map(|&v| v.min(floor)));
        if improved {
            best.x = next.x;
            best.fx = next.fx;
        } else {
            break;
        }
    }
    Ok(best)
}

/// Best `(α, δ₀)` for fixed `c`; returns `(α, δ₀, ρ)`.
pub fn optimize_1d_alpha_delta(c: f64) -> (f64, f64, f64) {
    let r = nelder_mead_restarted(
        |x| box_penalized(MethodParams::unchecked(x[0], x[1], c), |p| Ok(lfa_radius(p, DEFAULT_PHASE_POINTS))),
        &[8.0 / 9.0, 2.0],
        NelderMeadOptions::default(),
        4,
    )
    .expect("objective is infallible");
    (r.x[0], r.x[1], r.fx)
}

/// All three parameters free, from `start`.
pub fn optimize_1d_full(start: &MethodParams) -> (MethodParams, f64) {
    let r = nelder_mead_restarted(
        |x| box_penalized(MethodParams::unchecked(x[0], x[1], x[2]), |p| Ok(lfa_radius(p, DEFAULT_PHASE_POINTS))),
        &start.as_array(),
        NelderMeadOptions::default(),
        4,
    )
    .expect("objective is infallible");
    (MethodParams::unchecked(r.x[0], r.x[1], r.x[2]), r.fx)
}

/// Spectral radius of the dense error operator for `params`.
pub fn dense_radius(config: &DiscretizationConfig, params: &MethodParams) -> Result<f64> {
    let tl = TwoLevel::new(config, params)?;
    spectrum::error_radius(&tl)
}

#[derive(Debug, Clone)]
pub struct NumericOptimum {
    pub params: MethodParams,
    pub rho: f64,
    pub start_rho: f64,
    pub evals: usize,
    pub history: Vec<f64>,
}

/// Minimizes the dense error-operator radius over `(α, δ₀, c)` by
/// Nelder–Mead from `initial`, with at most `max_evals` evaluations.
pub fn optimize_2d(
    config: &DiscretizationConfig,
    initial: &MethodParams,
    max_evals: usize,
) -> Result<NumericOptimum> {
    initial.validate()?;
    let start_rho = dense_radius(config, initial)?;
    let opts = NelderMeadOptions {
        max_evals: max_evals.max(4),
        xtol: 1e-6,
        ftol: 1e-9,
        step: 0.02,
    };
    let r = nelder_mead(
        |x| box_penalized(MethodParams::unchecked(x[0], x[1], x[2]), |p| dense_radius(config, p)),
        &initial.as_array(),
        opts,
    )?;
    let (params, rho) = if r.fx <= start_rho {
        (MethodParams::unchecked(r.x[0], r.x[1], r.x[2]), r.fx)
    } else {
        (*initial, start_rho)
    };
    Ok(NumericOptimum {
        params,
        rho,
        start_rho,
        evals: r.evals + 1,
        history: r.history,
    })
}

/// Best `α` for fixed `δ₀`, `c` on the dense operator; returns `(α, ρ)`.
pub fn optimize_2d_alpha(config: &DiscretizationConfig, delta0: f64, c: f64, tol: f64) -> Result<(f64, f64)> {
    golden_section(|a| dense_radius(config, &MethodParams::unchecked(a, delta0, c)), 0.05, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner() {
        assert_eq!(poly_eval(&[1.0, 2.0, 3.0], 2.0), 17.0);
        assert_eq!(poly_eval(&[], 2.0), 0.0);
    }

    #[test]
    fn simple_roots() {
        assert_eq!(real_roots_in_interval(&[-1.0, 0.0, 1.0], 0.0, 2.0), vec![1.0]);
        let r = real_roots_in_interval(&[-1.0, 0.0, 1.0], -2.0, 2.0);
        assert_eq!(r.len(), 2);
        assert!(real_roots_in_interval(&[1.0, 0.0, 1.0], -5.0, 5.0).is_empty());
        assert!(real_roots_in_interval(&[3.0], -5.0, 5.0).is_empty());
        // (x − 0.25)(x − 0.5)(x − 0.75)
        let p = [-0.09375, 0.6875, -1.5, 1.0];
        let r = real_roots_in_interval(&p, 0.0, 1.0);
        assert_eq!(r.len(), 3);
        for (x, e) in r.iter().zip([0.25, 0.5, 0.75]) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn double_root_found_once() {
        // (x − 0.3)²(x + 1)
        let q = [0.09, -0.51, 0.4, 1.0];
        let r = real_roots_in_interval(&q, 0.0, 1.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn clustering_quartic_roots() {
        let c = real_roots_in_interval(&C_QUARTIC, 0.0, 1.0);
        assert_eq!(c.len(), 1);
        assert!((c[0] - 0.564604).abs() < 1e-6);
        let d = real_roots_in_interval(&DELTA0_QUARTIC, 1.0, 10.0);
        assert_eq!(d.len(), 1);
        // numpy.roots oracle
        assert!((d[0] - 1.516_978_300_147).abs() < 1e-11);
        for (p, x) in [(C_QUARTIC, c[0]), (DELTA0_QUARTIC, d[0])] {
            let scale = p.iter().map(|c| c.abs()).fold(0.0, f64::max);
            assert!(poly_eval(&p, x).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn first_equation_by_hand() {
        let r = clustering_system_residuals(&MethodParams::classical()).unwrap();
        assert!((r[0] + 1.0 / 9.0).abs() < 1e-15);
        for c in [0.1, 0.5, 0.9] {
            let r = clustering_system_residuals(&MethodParams::unchecked(1.0, 1.0 + 1e-300, c)).unwrap();
            assert!(r[0].abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_equations_rejected() {
        assert!(matches!(
            clustering_system_residuals(&MethodParams::unchecked(0.9, 1.5, 1.0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn newton_fixed_point() {
        let s = clustering_parameters();
        let n = solve_clustering_system(&s.params).unwrap();
        assert!(n.iterations <= 2);
    }

    #[test]
    fn newton_far_start_never_leaves_box() {
        match solve_clustering_system(&MethodParams::new(0.5, 2.5, 0.3).unwrap()) {
            Ok(s) => {
                assert!(s.params.in_box());
                let c = clustering_parameters().params;
                assert!((s.params.alpha - c.alpha).abs() < 1e-8);
            }
            Err(Error::NoConvergence { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section(|x| Ok((x - 0.3) * (x - 0.3)), 0.0, 1.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-15);
    }

    #[test]
    fn nelder_mead_rosenbrock_history_monotone() {
        let r = nelder_mead(
            |x| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)),
            &[-1.2, 1.0],
            NelderMeadOptions {
                max_evals: 5000,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn nelder_mead_propagates_errors() {
        let r = nelder_mead(|_| Err(Error::Eigen("boom".into())), &[0.0], NelderMeadOptions::default());
        assert!(matches!(r, Err(Error::Eigen(_))));
    }
}
