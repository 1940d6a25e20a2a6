//! Eigenvalues of error and preconditioned operators, and their clusters.
//!
//! With Dirichlet conditions `A = L Lᵀ` is SPD and the error operator is
//! similar to the symmetric matrix
//! `(I − Q Qᵀ)(I − α Lᵀ D⁻¹ L)(I − Q Qᵀ)` with `Q` an orthonormal basis of
//! `range(Lᵀ P)`, so its spectrum is real and a symmetric eigensolver
//! suffices. Periodic operators go through the general dense solver.

use faer::{c64, Mat, MatRef, Side};

use crate::dense;
use crate::discretization::{dense_cap_from_env, BoundaryCondition, OperatorMatrix, OperatorRole};
use crate::error::{Error, Result};
use crate::twolevel::TwoLevel;

/// Default link distance for [`cluster_eigenvalues`].
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    pub center: c64,
    pub count: usize,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<c64>,
    pub spectral_radius: f64,
    pub clusters: Vec<Cluster>,
    pub role: OperatorRole,
}

impl SpectrumReport {
    pub fn new(mut eigenvalues: Vec<c64>, cluster_tol: f64, role: OperatorRole) -> Self {
        sort_complex(&mut eigenvalues);
        let spectral_radius = spectral_radius_of(&eigenvalues);
        let clusters = cluster_eigenvalues(&eigenvalues, cluster_tol);
        Self {
            eigenvalues,
            spectral_radius,
            clusters,
            role,
        }
    }

    pub fn max_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn min_real(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }
}

pub fn spectral_radius_of(eigs: &[c64]) -> f64 {
    eigs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sorts by real part, then imaginary part.
pub fn sort_complex(v: &mut [c64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn check_square(rows: usize, cols: usize) -> Result<()> {
    if rows != cols {
        return Err(Error::Dimension(format!("matrix is {rows}x{cols}, not square")));
    }
    let cap = dense_cap_from_env();
    if rows > cap {
        return Err(Error::Size { rows, cap });
    }
    Ok(())
}

/// All eigenvalues of a general dense matrix.
pub fn eigenvalues_dense(m: &OperatorMatrix) -> Result<Vec<c64>> {
    eigenvalues_general(m.entries.as_ref())
}

pub fn eigenvalues_general(m: MatRef<'_, f64>) -> Result<Vec<c64>> {
    check_square(m.nrows(), m.ncols())?;
    m.eigenvalues()
        .map_err(|e| Error::Eigen(format!("{}x{} general eigensolve: {e:?}", m.nrows(), m.ncols())))
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn eigenvalues_symmetric(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    check_square(m.nrows(), m.ncols())?;
    let mut ev = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{}x{} symmetric eigensolve: {e:?}", m.nrows(), m.ncols())))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn lower_cholesky(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let f = a
        .llt(Side::Lower)
        .map_err(|e| Error::Eigen(format!("system matrix is not positive definite: {e:?}")))?;
    Ok(f.L().to_owned())
}

/// Symmetric matrix similar to the error operator (SPD system matrix only).
pub fn symmetric_error_matrix(tl: &TwoLevel) -> Result<Mat<f64>> {
    let n = tl.dofs();
    let l = lower_cholesky(tl.a.entries.as_ref())?;
    let lt = l.transpose();
    let w = lt * &tl.p.entries;
    let gram = w.transpose() * &w;
    let gram_f = gram
        .llt(Side::Lower)
        .map_err(|e| Error::SingularCoarse(format!("Lᵀ P is rank deficient: {e:?}")))?;
    // Π = W (WᵀW)⁻¹ Wᵀ
    let mut g_wt = w.transpose().to_owned();
    faer::linalg::solvers::Solve::solve_in_place(&gram_f, g_wt.as_mut());
    let pi = &w * &g_wt;
    let proj = Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - pi[(i, j)]);

    let ltdl = lt * (&tl.dinv.entries * &l);
    let alpha = tl.params.alpha;
    let smooth = Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - alpha * ltdl[(i, j)]);
    let c = &proj * (&smooth * &proj);
    Ok(Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)])))
}

/// Spectrum of the error operator: symmetric route for Dirichlet, general
/// dense solve for periodic problems.
pub fn error_spectrum(tl: &TwoLevel) -> Result<Vec<c64>> {
    check_square(tl.dofs(), tl.dofs())?;
    let mut ev = match tl.config.bc {
        BoundaryCondition::Dirichlet => eigenvalues_symmetric(symmetric_error_matrix(tl)?.as_ref())?
            .into_iter()
            .map(|x| c64::new(x, 0.0))
            .collect(),
        BoundaryCondition::Periodic => eigenvalues_dense(&tl.error_operator())?,
    };
    sort_complex(&mut ev);
    Ok(ev)
}

pub fn error_report(tl: &TwoLevel, cluster_tol: f64) -> Result<SpectrumReport> {
    Ok(SpectrumReport::new(error_spectrum(tl)?, cluster_tol, OperatorRole::Error))
}

/// Settings for [`lanczos_radius`].
#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub max_steps: usize,
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_steps: 160,
            tol: 1e-10,
        }
    }
}

fn start_vector(n: usize) -> Vec<f64> {
    // fixed, non-smooth start so no eigenvector is missed by symmetry
    (0..n)
        .map(|i| ((i as f64 + 1.0) * 0.754_877_666).fract() - 0.5 + 0.1 * ((i * 7 + 3) as f64).sin())
        .collect()
}

/// Spectral radius of the error operator by Lanczos in the `A`-inner
/// product on `(I − π) S (I − π)`, where `π = P A₀⁻¹ R A` and
/// `S = I − α D⁻¹ A`. Needs an SPD system matrix.
pub fn lanczos_radius(tl: &TwoLevel, opts: LanczosOptions) -> Result<f64> {
    if tl.config.bc != BoundaryCondition::Dirichlet {
        return Err(Error::Config("Lanczos radius needs an SPD (Dirichlet) system".into()));
    }
    let n = tl.dofs();
    let project = |x: &[f64]| -> Vec<f64> {
        let corr = tl.coarse_correction(&tl.apply_a(x));
        x.iter().zip(&corr).map(|(a, b)| a - b).collect()
    };
    let op = |x: &[f64]| -> Vec<f64> {
        let y = project(x);
        let mut s = tl.apply_smoother(&tl.apply_a(&y));
        s.iter_mut().zip(&y).for_each(|(si, yi)| *si = yi - tl.params.alpha * *si);
        project(&s)
    };
    let a_norm = |x: &[f64]| dense::dot(x, &tl.apply_a(x)).max(0.0).sqrt();

    let mut v = project(&start_vector(n));
    let nv = a_norm(&v);
    if nv == 0.0 {
        return Ok(0.0);
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut a_basis: Vec<Vec<f64>> = vec![tl.apply_a(&basis[0])];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev = f64::NAN;
    let mut stable = 0;
    let steps = opts.max_steps.min(n);
    for j in 0..steps {
        let mut w = op(&basis[j]);
        let aj = dense::dot(&w, &a_basis[j]);
        alphas.push(aj);
        // full reorthogonalization in the A-inner product, twice
        for _ in 0..2 {
            for (q, aq) in basis.iter().zip(&a_basis) {
                let s = dense::dot(&w, aq);
                dense::axpy(-s, q, &mut w);
            }
        }
        let radius = tridiagonal_radius(&alphas, &betas)?;
        stable = if (radius - prev).abs() <= opts.tol * radius.max(1e-300) { stable + 1 } else { 0 };
        if stable >= 3 && j >= 4 {
            return Ok(radius);
        }
        prev = radius;
        let b = a_norm(&w);
        if b <= 1e-13 * radius.max(1.0) || j + 1 == steps {
            return Ok(radius);
        }
        betas.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        a_basis.push(tl.apply_a(&w));
        basis.push(w);
    }
    Ok(prev)
}

fn tridiagonal_radius(alphas: &[f64], betas: &[f64]) -> Result<f64> {
    let m = alphas.len();
    let t = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i == j + 1 {
            betas[j]
        } else if j == i + 1 {
            betas[i]
        } else {
            0.0
        }
    });
    let ev = t
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("tridiagonal eigensolve: {e:?}")))?;
    Ok(ev.iter().map(|x| x.abs()).fold(0.0, f64::max))
}

/// Spectral radius of the error operator, choosing Lanczos for Dirichlet
/// problems and a dense solve otherwise.
pub fn error_radius(tl: &TwoLevel) -> Result<f64> {
    match tl.config.bc {
        BoundaryCondition::Dirichlet => lanczos_radius(tl, LanczosOptions::default()),
        BoundaryCondition::Periodic => Ok(spectral_radius_of(&error_spectrum(tl)?)),
    }
}

/// Single-linkage clusters with link distance `tol`, ordered by center.
pub fn cluster_eigenvalues(eigs: &[c64], tol: f64) -> Vec<Cluster> {
    assert!(tol > 0.0, "cluster tolerance must be positive");
    let mut v = eigs.to_vec();
    sort_complex(&mut v);
    let n = v.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if v[j].re - v[i].re > tol {
                break;
            }
            if (v[j] - v[i]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<c64>> = Default::default();
    for (i, z) in v.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(*z);
    }
    let mut out: Vec<Cluster> = groups
        .into_values()
        .map(|g| {
            let count = g.len();
            let center = g.iter().fold(c64::new(0.0, 0.0), |s, z| s + z) / count as f64;
            let radius = g.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
            Cluster {
                center,
                count,
                radius,
            }
        })
        .collect();
    out.sort_by(|a, b| a.center.re.total_cmp(&b.center.re).then(a.center.im.total_cmp(&b.center.im)));
    out
}

/// Largest distance in a greedy nearest-neighbour matching of two
/// equally sized multisets; `∞` on a size mismatch.
pub fn multiset_distance(a: &[c64], b: &[c64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut a = a.to_vec();
    sort_complex(&mut a);
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for z in &a {
        let (idx, d) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, w)| (i, (w - z).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("sizes match");
        used[idx] = true;
        worst = worst.max(d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::DiscretizationConfig;
    use crate::twolevel::MethodParams;

    fn z(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    #[test]
    fn diagonal_eigenvalues() {
        let m = OperatorMatrix::new(
            Mat::from_fn(3, 3, |i, j| if i == j { (i + 1) as f64 } else { 0.0 }),
            OperatorRole::System,
        );
        let mut ev = eigenvalues_dense(&m).unwrap();
        sort_complex(&mut ev);
        for (e, x) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e - z(x)).norm() < 1e-14);
        }
    }

    #[test]
    fn rotation_has_complex_pair() {
        let m = Mat::from_fn(2, 2, |i, j| [[0.0, -1.0], [1.0, 0.0]][i][j]);
        let mut ev = eigenvalues_general(m.as_ref()).unwrap();
        sort_complex(&mut ev);
        assert!((ev[0] - c64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - c64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_square() {
        let m = Mat::<f64>::zeros(2, 3);
        assert!(matches!(eigenvalues_general(m.as_ref()), Err(Error::Dimension(_))));
    }

    #[test]
    fn clusters_three_groups() {
        let mut e = vec![z(0.19732); 16];
        e.extend(vec![z(-0.19732); 16]);
        e.extend(vec![z(0.0); 32]);
        let c = cluster_eigenvalues(&e, 1e-6);
        assert_eq!(c.iter().map(|c| c.count).collect::<Vec<_>>(), vec![16, 32, 16]);
        let total: usize = c.iter().map(|c| c.count).sum();
        assert_eq!(total, 64);
    }

    #[test]
    fn spaced_values_are_singletons() {
        let e: Vec<c64> = (0..10).map(|i| z(i as f64 * 1e-3)).collect();
        assert_eq!(cluster_eigenvalues(&e, 1e-4).len(), 10);
    }

    #[test]
    fn single_linkage_chains() {
        let e = [z(0.0), z(0.8e-6), z(1.6e-6), z(1.0)];
        let c = cluster_eigenvalues(&e, 1e-6);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].count, 3);
    }

    #[test]
    fn symmetric_route_matches_general_solve() {
        let cfg = DiscretizationConfig::one_d(8, 1.7, BoundaryCondition::Dirichlet).unwrap();
        let tl = TwoLevel::new(&cfg, &MethodParams::new(0.85, 1.7, 0.6).unwrap()).unwrap();
        let sym = error_spectrum(&tl).unwrap();
        let gen = eigenvalues_dense(&tl.error_operator()).unwrap();
        assert!(multiset_distance(&sym, &gen) < 1e-10);
    }

    #[test]
    fn lanczos_matches_dense_radius() {
        let cfg = DiscretizationConfig::one_d(32, 1.7, BoundaryCondition::Dirichlet).unwrap();
        let tl = TwoLevel::new(&cfg, &MethodParams::new(0.85, 1.7, 0.6).unwrap()).unwrap();
        let dense = spectral_radius_of(&error_spectrum(&tl).unwrap());
        let lz = lanczos_radius(&tl, LanczosOptions::default()).unwrap();
        assert!((dense - lz).abs() < 1e-8, "{dense} vs {lz}");
    }

    #[test]
    fn multiset_distance_detects_mismatch() {
        assert_eq!(multiset_distance(&[z(1.0)], &[z(1.0), z(2.0)]), f64::INFINITY);
        assert!((multiset_distance(&[z(1.0), z(2.0)], &[z(2.0), z(1.5)]) - 0.5).abs() < 1e-15);
    }
}
