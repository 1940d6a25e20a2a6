//! SIPG system matrices for the Poisson problem on the unit interval and the
//! unit square.
//!
//! Degrees of freedom are stored cell by cell: cell `m` owns the value at its
//! left end (index `2m`) and at its right end (index `2m + 1`). With `h = 1/J`
//! every interior row of the 1D matrix reads, in units of `1/h²`,
//!
//! ```text
//!   δ₀ on the diagonal,
//!   1 − δ₀ to the dof on the other side of the shared node,
//!   0 to the other dof of the same cell,
//!   −½ to the dofs two positions away.
//! ```
//!
//! Dirichlet closure: the two boundary faces are penalized by doubling the
//! diagonal of the boundary dof and couplings to dofs outside the domain are
//! dropped. With `n = 2J` the first and last 2×2 diagonal blocks are
//!
//! ```text
//!   rows 0, 1:        [ 2δ₀   0  ]     rows n−2, n−1:   [ δ₀   0  ]
//!                     [  0   δ₀  ]                      [  0  2δ₀ ]
//! ```
//!
//! and the remaining couplings of those rows (`−½` two positions inwards,
//! `1 − δ₀` across the first interior node) are the interior ones. The
//! resulting matrix is symmetric positive definite for `δ₀ > 1`.

use faer::Mat;

use crate::dense;
use crate::error::{Error, Result};

/// Default cap on the number of rows of any dense operator.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Environment variable overriding [`DEFAULT_DENSE_CAP`].
pub const DENSE_CAP_ENV: &str = "DGML_DENSE_CAP";

/// Reads the dense-size cap from the environment, falling back to the default.
pub fn dense_cap_from_env() -> usize {
    std::env::var(DENSE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&v: &usize| v > 0)
        .unwrap_or(DEFAULT_DENSE_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Periodic,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationConfig {
    /// Number of cells per dimension, `J`.
    pub cells: usize,
    /// Penalty parameter `δ₀`.
    pub penalty: f64,
    pub bc: BoundaryCondition,
    pub dim: Dimension,
    /// Maximum number of rows of a dense operator built from this config.
    pub dense_cap: usize,
}

impl DiscretizationConfig {
    pub fn new(cells: usize, penalty: f64, bc: BoundaryCondition, dim: Dimension) -> Result<Self> {
        let cfg = Self {
            cells,
            penalty,
            bc,
            dim,
            dense_cap: DEFAULT_DENSE_CAP,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn one_d(cells: usize, penalty: f64, bc: BoundaryCondition) -> Result<Self> {
        Self::new(cells, penalty, bc, Dimension::One)
    }

    pub fn two_d(cells: usize, penalty: f64, bc: BoundaryCondition) -> Result<Self> {
        Self::new(cells, penalty, bc, Dimension::Two)
    }

    pub fn with_dense_cap(mut self, cap: usize) -> Self {
        self.dense_cap = cap;
        self
    }

    pub fn with_penalty(mut self, penalty: f64) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 2 || !self.cells.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "cell count J must be even and at least 2, got {}",
                self.cells
            )));
        }
        if self.penalty.is_nan() || self.penalty <= 1.0 || !self.penalty.is_finite() {
            return Err(Error::Config(format!(
                "penalty δ₀ must be finite and > 1, got {}",
                self.penalty
            )));
        }
        Ok(())
    }

    /// Mesh size `h = 1/J`.
    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    /// Number of dofs along one direction, `2J`.
    pub fn dofs_1d(&self) -> usize {
        2 * self.cells
    }

    /// Total number of dofs: `2J` in 1D, `(2J)²` in 2D.
    pub fn dofs(&self) -> usize {
        match self.dim {
            Dimension::One => self.dofs_1d(),
            Dimension::Two => self.dofs_1d() * self.dofs_1d(),
        }
    }

    pub fn as_one_d(&self) -> Self {
        Self {
            dim: Dimension::One,
            ..*self
        }
    }

    pub(crate) fn check_cap(&self) -> Result<()> {
        let rows = self.dofs();
        if rows > self.dense_cap {
            return Err(Error::Size {
                rows,
                cap: self.dense_cap,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorRole {
    System,
    Prolongation,
    Restriction,
    Coarse,
    Smoother,
    Error,
    Preconditioned,
}

/// Dense real matrix tagged with the role it plays in the two-level method.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: Mat<f64>,
    pub role: OperatorRole,
}

impl OperatorMatrix {
    pub fn new(entries: Mat<f64>, role: OperatorRole) -> Self {
        Self { entries, role }
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        dense::matvec(self.entries.as_ref(), x)
    }

    /// `‖M − Mᵀ‖_max / ‖M‖_max`.
    pub fn asymmetry(&self) -> f64 {
        let scale = dense::max_abs(self.entries.as_ref());
        if scale == 0.0 {
            return 0.0;
        }
        dense::max_abs_diff(self.entries.as_ref(), self.entries.transpose()) / scale
    }
}

fn interior_1d(cfg: &DiscretizationConfig) -> Mat<f64> {
    let n = cfg.dofs_1d();
    let d = cfg.penalty;
    let s = 1.0 / (cfg.h() * cfg.h());
    let periodic = cfg.bc == BoundaryCondition::Periodic;
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        a[(i, i)] += d * s;
        // left dofs (even) pair with the right dof of the previous cell
        let partner = if i % 2 == 0 { i as isize - 1 } else { i as isize + 1 };
        let couplings = [
            (partner, (1.0 - d) * s),
            (i as isize - 2, -0.5 * s),
            (i as isize + 2, -0.5 * s),
        ];
        for (j, v) in couplings {
            if periodic {
                a[(i, j.rem_euclid(n as isize) as usize)] += v;
            } else if (0..n as isize).contains(&j) {
                a[(i, j as usize)] += v;
            }
        }
    }
    a
}

/// Assembles the 1D SIPG matrix of size `2J × 2J`.
pub fn assemble_1d(cfg: &DiscretizationConfig) -> Result<OperatorMatrix> {
    cfg.validate()?;
    if cfg.dim != Dimension::One {
        return Err(Error::Config("assemble_1d requires a 1D configuration".into()));
    }
    let mut a = interior_1d(cfg);
    if cfg.bc == BoundaryCondition::Dirichlet {
        let n = cfg.dofs_1d();
        let s = 1.0 / (cfg.h() * cfg.h());
        a[(0, 0)] = 2.0 * cfg.penalty * s;
        a[(n - 1, n - 1)] = 2.0 * cfg.penalty * s;
    }
    Ok(OperatorMatrix::new(a, OperatorRole::System))
}

/// Assembles the 2D matrix `A₁ ⊗ I + I ⊗ A₁` of size `(2J)² × (2J)²`.
pub fn assemble_2d(cfg: &DiscretizationConfig) -> Result<OperatorMatrix> {
    cfg.validate()?;
    if cfg.dim != Dimension::Two {
        return Err(Error::Config("assemble_2d requires a 2D configuration".into()));
    }
    cfg.check_cap()?;
    let a1 = assemble_1d(&cfg.as_one_d())?;
    Ok(OperatorMatrix::new(
        kron_sum(a1.entries.as_ref()),
        OperatorRole::System,
    ))
}

/// Assembles the system matrix for either dimension.
pub fn assemble(cfg: &DiscretizationConfig) -> Result<OperatorMatrix> {
    match cfg.dim {
        Dimension::One => assemble_1d(cfg),
        Dimension::Two => assemble_2d(cfg),
    }
}

/// `a ⊗ I + I ⊗ a`, filled directly to avoid two full Kronecker products.
pub(crate) fn kron_sum(a: faer::MatRef<'_, f64>) -> Mat<f64> {
    let n = a.nrows();
    let mut out = Mat::zeros(n * n, n * n);
    for i in 0..n {
        for k in 0..n {
            let v = a[(i, k)];
            if v == 0.0 {
                continue;
            }
            for j in 0..n {
                // (a ⊗ I): row (i, j), col (k, j)
                out[(i * n + j, k * n + j)] += v;
                // (I ⊗ a): row (j, i), col (j, k)
                out[(j * n + i, j * n + k)] += v;
            }
        }
    }
    out
}

/// Load vector for the constant source `f ≡ 1`.
pub fn source_vector(cfg: &DiscretizationConfig) -> Vec<f64> {
    vec![1.0; cfg.dofs()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::linalg::solvers::Solve;
    use crate::dense::{identity, kron, max_abs_diff};

    fn periodic(j: usize, d: f64) -> DiscretizationConfig {
        DiscretizationConfig::one_d(j, d, BoundaryCondition::Periodic).unwrap()
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(DiscretizationConfig::one_d(3, 2.0, BoundaryCondition::Periodic).is_err());
        assert!(DiscretizationConfig::one_d(0, 2.0, BoundaryCondition::Periodic).is_err());
        assert!(DiscretizationConfig::one_d(4, 1.0, BoundaryCondition::Periodic).is_err());
        assert!(DiscretizationConfig::one_d(4, 0.5, BoundaryCondition::Dirichlet).is_err());
        assert!(DiscretizationConfig::one_d(4, f64::NAN, BoundaryCondition::Dirichlet).is_err());
    }

    #[test]
    fn periodic_rows_sum_to_zero() {
        let a = assemble_1d(&periodic(4, 2.0)).unwrap();
        assert_eq!(a.rows(), 8);
        let r = a.apply(&[1.0; 8]);
        for v in r {
            assert!(v.abs() <= 1e-12 * 16.0);
        }
    }

    #[test]
    fn printed_row_pattern() {
        // row of a right dof (index 3 = right end of cell 1), J=4, δ₀=2
        let a = assemble_1d(&periodic(4, 2.0)).unwrap();
        let s = 16.0;
        let row: Vec<f64> = (0..8).map(|j| a.entries[(3, j)] / s).collect();
        assert_eq!(row, vec![0.0, -0.5, 0.0, 2.0, -1.0, -0.5, 0.0, 0.0]);
        // a left dof couples back across the node, and wraps periodically
        let row0: Vec<f64> = (0..8).map(|j| a.entries[(0, j)] / s).collect();
        assert_eq!(row0, vec![2.0, 0.0, -0.5, 0.0, 0.0, 0.0, -0.5, -1.0]);
    }

    #[test]
    fn dirichlet_boundary_blocks() {
        let cfg = DiscretizationConfig::one_d(4, 1.5, BoundaryCondition::Dirichlet).unwrap();
        let a = assemble_1d(&cfg).unwrap();
        let s = 16.0;
        let e = |i, j| a.entries[(i, j)] / s;
        assert_eq!((e(0, 0), e(0, 1), e(1, 0), e(1, 1)), (3.0, 0.0, 0.0, 1.5));
        assert_eq!((e(0, 2), e(1, 2), e(1, 3)), (-0.5, 1.0 - 1.5, -0.5));
        assert_eq!((e(7, 7), e(6, 6), e(7, 5), e(6, 5)), (3.0, 1.5, -0.5, -0.5));
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    fn dirichlet_is_positive_definite() {
        let cfg = DiscretizationConfig::one_d(32, 1.516980, BoundaryCondition::Dirichlet).unwrap();
        let a = assemble_1d(&cfg).unwrap();
        let ev = a
            .entries
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .unwrap();
        assert!(ev[0] > 0.0, "smallest eigenvalue {}", ev[0]);
    }

    #[test]
    fn doubling_j_scales_interior_by_four() {
        let a4 = assemble_1d(&periodic(4, 2.0)).unwrap();
        let a8 = assemble_1d(&periodic(8, 2.0)).unwrap();
        for (i, j) in [(3, 3), (3, 4), (3, 5), (2, 1)] {
            assert_eq!(a8.entries[(i, j)], 4.0 * a4.entries[(i, j)]);
        }
    }

    #[test]
    fn two_d_is_kronecker_sum() {
        for j in [2, 4] {
            for bc in [BoundaryCondition::Periodic, BoundaryCondition::Dirichlet] {
                let cfg = DiscretizationConfig::two_d(j, 2.0, bc).unwrap();
                let a2 = assemble_2d(&cfg).unwrap();
                let a1 = assemble_1d(&cfg.as_one_d()).unwrap();
                let n = a1.rows();
                let id = identity(n);
                let explicit = kron(a1.entries.as_ref(), id.as_ref())
                    + kron(id.as_ref(), a1.entries.as_ref());
                assert_eq!(max_abs_diff(a2.entries.as_ref(), explicit.as_ref()), 0.0);
            }
        }
    }

    #[test]
    fn two_d_spectrum_is_pairwise_sums() {
        let cfg = DiscretizationConfig::two_d(2, 2.0, BoundaryCondition::Periodic).unwrap();
        let a2 = assemble_2d(&cfg).unwrap();
        assert_eq!(a2.rows(), 16);
        let ev1 = assemble_1d(&cfg.as_one_d())
            .unwrap()
            .entries
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .unwrap();
        let mut sums: Vec<f64> = ev1
            .iter()
            .flat_map(|a| ev1.iter().map(move |b| a + b))
            .collect();
        sums.sort_by(f64::total_cmp);
        let ev2 = a2.entries.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        for (x, y) in sums.iter().zip(&ev2) {
            assert!((x - y).abs() < 1e-10 * 64.0);
        }
    }

    #[test]
    fn two_d_periodic_symmetric_with_zero_row_sums() {
        let cfg = DiscretizationConfig::two_d(4, 2.0, BoundaryCondition::Periodic).unwrap();
        let a2 = assemble_2d(&cfg).unwrap();
        assert!(a2.asymmetry() <= 1e-13);
        let r = a2.apply(&vec![1.0; a2.rows()]);
        assert!(r.iter().all(|v| v.abs() < 1e-12 * 16.0));
    }

    #[test]
    fn two_d_respects_dense_cap() {
        let cfg = DiscretizationConfig::two_d(34, 2.0, BoundaryCondition::Dirichlet).unwrap();
        assert!(matches!(assemble_2d(&cfg), Err(Error::Size { rows: 4624, cap: 4096 })));
        let small = DiscretizationConfig::two_d(4, 2.0, BoundaryCondition::Dirichlet)
            .unwrap()
            .with_dense_cap(32);
        assert!(matches!(assemble_2d(&small), Err(Error::Size { .. })));
    }

    #[test]
    fn source_vector_lengths() {
        assert_eq!(source_vector(&periodic(4, 2.0)), vec![1.0; 8]);
        let cfg = DiscretizationConfig::two_d(2, 2.0, BoundaryCondition::Periodic).unwrap();
        assert_eq!(source_vector(&cfg), vec![1.0; 16]);
    }

    #[test]
    fn dirichlet_solution_peak() {
        // Interior rows act like −½ u'' on smooth data, so A u = 1 approximates
        // −u'' = 2 with peak 2/8 = 1/4 at the midpoint.
        let cfg = DiscretizationConfig::one_d(32, 2.0, BoundaryCondition::Dirichlet).unwrap();
        let a = assemble_1d(&cfg).unwrap();
        let f = source_vector(&cfg);
        let u = a.entries.partial_piv_lu().solve(crate::dense::col_from_slice(&f));
        let peak = (0..u.nrows()).map(|i| u[i]).fold(f64::MIN, f64::max);
        assert!((peak - 0.25).abs() < 0.01, "peak {peak}");
    }
}
