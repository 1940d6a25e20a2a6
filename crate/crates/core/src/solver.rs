//! Left-preconditioned GMRES and the stationary two-level iteration.

use crate::dense::{axpy, dot, norm2};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// Preconditioned residual norms; entry 0 is the initial residual.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub solution: Vec<f64>,
    /// Final preconditioned relative residual.
    pub relative_residual: f64,
    /// `‖b − A x‖ / ‖b‖` at the returned solution.
    pub unpreconditioned_relative_residual: f64,
    /// Geometric-mean residual reduction over the second half of the run
    /// (stationary iteration only).
    pub contraction: Option<f64>,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn relative_true_residual<A: Fn(&[f64]) -> Vec<f64>>(apply_a: &A, b: &[f64], x: &[f64]) -> f64 {
    let nb = norm2(b);
    let r = norm2(&sub(b, &apply_a(x)));
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

/// Full (unrestarted) GMRES on `M A x = M b` from `x₀ = 0`, modified
/// Gram–Schmidt Arnoldi, stopping when the preconditioned relative residual
/// reaches `tol`.
pub fn gmres<A, M>(apply_a: A, apply_m: M, b: &[f64], tol: f64, max_iter: usize) -> SolveReport
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let r0 = apply_m(b);
    let beta = norm2(&r0);
    let mut history = vec![beta];
    if beta == 0.0 {
        return SolveReport {
            iterations: 0,
            residual_history: history,
            converged: true,
            solution: vec![0.0; n],
            relative_residual: 0.0,
            unpreconditioned_relative_residual: relative_true_residual(&apply_a, b, &vec![0.0; n]),
            contraction: None,
        };
    }
    let mut basis: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
    // column j of the Hessenberg matrix, already rotated
    let mut h_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut converged = false;
    let mut iterations = 0;
    let cap = max_iter.min(n);

    for j in 0..cap {
        iterations = j + 1;
        let mut w = apply_m(&apply_a(&basis[j]));
        let mut h = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            h[i] = dot(&w, v);
            axpy(-h[i], v, &mut w);
        }
        let hn = norm2(&w);
        h[j + 1] = hn;
        for i in 0..j {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        let rho = h[j].hypot(h[j + 1]);
        let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (h[j] / rho, h[j + 1] / rho) };
        cs.push(c);
        sn.push(s);
        h[j] = rho;
        h[j + 1] = 0.0;
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s * gj);
        h_cols.push(h);
        let res = g[j + 1].abs();
        history.push(res);
        if res <= tol * beta {
            converged = true;
            break;
        }
        if hn <= 1e-14 * beta {
            // happy breakdown: the Krylov space is invariant
            converged = res <= tol * beta;
            break;
        }
        basis.push(w.iter().map(|v| v / hn).collect());
    }

    let m = h_cols.len();
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = g[i];
        for (k, yk) in y.iter().enumerate().take(m).skip(i + 1) {
            s -= h_cols[k][i] * yk;
        }
        y[i] = s / h_cols[i][i];
    }
    let mut x = vec![0.0; n];
    for (yi, v) in y.iter().zip(&basis) {
        axpy(*yi, v, &mut x);
    }
    let relative_residual = history.last().copied().unwrap_or(0.0) / beta;
    SolveReport {
        iterations,
        residual_history: history,
        converged,
        unpreconditioned_relative_residual: relative_true_residual(&apply_a, b, &x),
        solution: x,
        relative_residual,
        contraction: None,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StationaryOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Project iterates and residuals onto mean-zero vectors (periodic
    /// problems, whose kernel is the constants).
    pub deflate_mean: bool,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            deflate_mean: false,
        }
    }
}

/// Consecutive residual increases treated as divergence.
pub const DIVERGENCE_STREAK: usize = 10;

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// `u ← u + M⁻¹(b − A u)` until the unpreconditioned relative residual
/// reaches `tol`.
pub fn stationary_solve<A, M>(
    apply_a: A,
    apply_m: M,
    b: &[f64],
    initial: Option<&[f64]>,
    opts: StationaryOptions,
) -> Result<SolveReport>
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut b = b.to_vec();
    if opts.deflate_mean {
        remove_mean(&mut b);
    }
    let nb = norm2(&b).max(f64::MIN_POSITIVE);
    let mut u = initial.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    if opts.deflate_mean {
        remove_mean(&mut u);
    }
    let residual = |u: &[f64]| {
        let mut r = sub(&b, &apply_a(u));
        if opts.deflate_mean {
            remove_mean(&mut r);
        }
        r
    };
    let mut r = residual(&u);
    let mut history = vec![norm2(&r)];
    let mut streak = 0;
    let mut iterations = 0;
    while history[iterations] > opts.tol * nb && iterations < opts.max_iter {
        let mut du = apply_m(&r);
        if opts.deflate_mean {
            remove_mean(&mut du);
        }
        axpy(1.0, &du, &mut u);
        r = residual(&u);
        iterations += 1;
        let rn = norm2(&r);
        history.push(rn);
        streak = if rn > history[iterations - 1] { streak + 1 } else { 0 };
        if streak >= DIVERGENCE_STREAK || !rn.is_finite() {
            return Err(Error::Diverged {
                iterations,
                residual: rn,
            });
        }
    }
    let contraction = contraction_estimate(&history);
    let rel = history[iterations] / nb;
    Ok(SolveReport {
        iterations,
        residual_history: history,
        converged: rel <= opts.tol,
        solution: u,
        relative_residual: rel,
        unpreconditioned_relative_residual: rel,
        contraction,
    })
}

/// `(‖r_k‖ / ‖r_j‖)^{1/(k−j)}` with `j = k/2`.
pub fn contraction_estimate(history: &[f64]) -> Option<f64> {
    let k = history.len().checked_sub(1)?;
    if k < 2 {
        return None;
    }
    let j = k / 2;
    if history[j] == 0.0 {
        return None;
    }
    Some((history[k] / history[j]).powf(1.0 / (k - j) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                2.0 * x[i] - l - r
            })
            .collect()
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = [1.0, -2.0, 3.0];
        let r = gmres(|x| x.to_vec(), |x| x.to_vec(), &b, 1e-12, 10);
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        for (x, y) in r.solution.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let r = gmres(|x| x.to_vec(), |x| x.to_vec(), &[0.0; 4], 1e-8, 10);
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn unpreconditioned_laplacian_terminates_and_history_monotone() {
        let n = 20;
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = gmres(tridiag, |x| x.to_vec(), &b, 1e-10, 100);
        assert!(r.converged);
        assert!(r.iterations <= n);
        assert!(r.unpreconditioned_relative_residual < 1e-9);
        assert!(r.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn max_iter_reports_not_converged() {
        let b: Vec<f64> = (0..30).map(|i| (i as f64).cos()).collect();
        let r = gmres(tridiag, |x| x.to_vec(), &b, 1e-12, 3);
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn two_distinct_eigenvalues_take_two_steps() {
        let a = |x: &[f64]| -> Vec<f64> { x.iter().enumerate().map(|(i, &v)| if i % 2 == 0 { v } else { 3.0 * v }).collect() };
        let b = [1.0, 1.0, 2.0, -1.0];
        let r = gmres(a, |x| x.to_vec(), &b, 1e-12, 10);
        assert!(r.converged);
        assert_eq!(r.iterations, 2);
    }

    #[test]
    fn stationary_exact_guess_is_zero_iterations() {
        let x = [1.0, 2.0, 3.0];
        let b = tridiag(&x);
        let r = stationary_solve(tridiag, |v| v.to_vec(), &b, Some(&x), StationaryOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }

    #[test]
    fn stationary_jacobi_contraction() {
        // damped Jacobi on a diagonal system: error shrinks by exactly ½
        let a = |x: &[f64]| x.iter().map(|v| 2.0 * v).collect::<Vec<_>>();
        let m = |x: &[f64]| x.iter().map(|v| 0.25 * v).collect::<Vec<_>>();
        let r = stationary_solve(a, m, &[1.0, 1.0], None, StationaryOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.contraction.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stationary_divergence_reported() {
        let a = |x: &[f64]| x.to_vec();
        let m = |x: &[f64]| x.iter().map(|v| 3.0 * v).collect::<Vec<_>>();
        match stationary_solve(a, m, &[1.0], None, StationaryOptions::default()) {
            Err(Error::Diverged { iterations, .. }) => assert_eq!(iterations, DIVERGENCE_STREAK),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
