//! Two-level preconditioner: cell block-Jacobi presmoothing followed by a
//! Galerkin coarse correction with a discontinuous interpolation.
//!
//! The prolongation maps the two dofs `(l, r)` of a coarse cell onto the four
//! dofs of its two fine cells with the stencil
//!
//! ```text
//!   [ 1      0   ]
//!   [ c    1 − c ]
//!   [ 1 − c  c   ]
//!   [ 0      1   ]
//! ```
//!
//! so `c = ½` is continuous linear interpolation. `R = ½ Pᵀ` and `A₀ = R A P`.
//! In 2D every transfer operator is the Kronecker square of the 1D one.

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, MatRef, Side};

use crate::dense;
use crate::discretization::{
    assemble, BoundaryCondition, Dimension, DiscretizationConfig, OperatorMatrix, OperatorRole,
};
use crate::error::{Error, Result};

/// Relaxation `α`, penalty `δ₀` and interpolation discontinuity `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodParams {
    pub alpha: f64,
    pub penalty: f64,
    pub discontinuity: f64,
}

impl MethodParams {
    pub fn new(alpha: f64, penalty: f64, discontinuity: f64) -> Result<Self> {
        let p = Self::unchecked(alpha, penalty, discontinuity);
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters without range checks (used by optimizers that probe
    /// the boundary of the admissible box).
    pub const fn unchecked(alpha: f64, penalty: f64, discontinuity: f64) -> Self {
        Self {
            alpha,
            penalty,
            discontinuity,
        }
    }

    /// Continuous interpolation with `δ₀ = 2` and `α = 8/9`.
    pub fn classical() -> Self {
        Self::unchecked(8.0 / 9.0, 2.0, 0.5)
    }

    pub fn in_box(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            alpha,
            penalty,
            discontinuity: c,
        } = *self;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Params(format!("α must lie in (0, 1], got {alpha}")));
        }
        if !(penalty > 1.0 && penalty.is_finite()) {
            return Err(Error::Params(format!("δ₀ must be > 1, got {penalty}")));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Params(format!("c must lie in (0, 1), got {c}")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.penalty, self.discontinuity]
    }
}

/// Inverse of the cell block-Jacobi smoother built from the interior cell
/// blocks: `(h²/δ₀) I` in 1D and `(h²/(2δ₀)) I` in 2D.
pub fn smoother_matrix(cfg: &DiscretizationConfig, params: &MethodParams) -> Result<OperatorMatrix> {
    check_consistent(cfg, params)?;
    let scale = smoother_scale(cfg);
    let n = cfg.dofs();
    Ok(OperatorMatrix::new(
        Mat::from_fn(n, n, |i, j| if i == j { scale } else { 0.0 }),
        OperatorRole::Smoother,
    ))
}

pub(crate) fn smoother_scale(cfg: &DiscretizationConfig) -> f64 {
    let h2 = cfg.h() * cfg.h();
    match cfg.dim {
        Dimension::One => h2 / cfg.penalty,
        Dimension::Two => h2 / (2.0 * cfg.penalty),
    }
}

fn check_consistent(cfg: &DiscretizationConfig, params: &MethodParams) -> Result<()> {
    if cfg.penalty != params.penalty {
        return Err(Error::Params(format!(
            "configuration penalty {} differs from method penalty {}",
            cfg.penalty, params.penalty
        )));
    }
    Ok(())
}

fn prolongation_1d(cells: usize, c: f64) -> Mat<f64> {
    let mut p = Mat::zeros(2 * cells, cells);
    let stencil = [[1.0, 0.0], [c, 1.0 - c], [1.0 - c, c], [0.0, 1.0]];
    for b in 0..cells / 2 {
        for (r, row) in stencil.iter().enumerate() {
            p[(4 * b + r, 2 * b)] = row[0];
            p[(4 * b + r, 2 * b + 1)] = row[1];
        }
    }
    p
}

/// Prolongation from the `J/2`-cell coarse mesh: `2J × J` in 1D, its
/// Kronecker square in 2D.
pub fn prolongation_matrix(cfg: &DiscretizationConfig, c: f64) -> Result<OperatorMatrix> {
    if cfg.cells < 2 || !cfg.cells.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "prolongation needs an even cell count, got {}",
            cfg.cells
        )));
    }
    let p1 = prolongation_1d(cfg.cells, c);
    let p = match cfg.dim {
        Dimension::One => p1,
        Dimension::Two => {
            cfg.check_cap()?;
            dense::kron(p1.as_ref(), p1.as_ref())
        }
    };
    Ok(OperatorMatrix::new(p, OperatorRole::Prolongation))
}

/// `R = ½ Pᵀ`.
pub fn restriction_matrix(p: &OperatorMatrix) -> OperatorMatrix {
    let pt = p.entries.transpose();
    OperatorMatrix::new(
        Mat::from_fn(pt.nrows(), pt.ncols(), |i, j| 0.5 * pt[(i, j)]),
        OperatorRole::Restriction,
    )
}

/// Galerkin coarse operator `A₀ = R A P`.
pub fn coarse_operator(
    a: &OperatorMatrix,
    r: &OperatorMatrix,
    p: &OperatorMatrix,
) -> Result<OperatorMatrix> {
    if r.cols() != a.rows() || a.cols() != p.rows() || r.rows() != p.cols() {
        return Err(Error::Dimension(format!(
            "R is {}x{}, A is {}x{}, P is {}x{}",
            r.rows(),
            r.cols(),
            a.rows(),
            a.cols(),
            p.rows(),
            p.cols()
        )));
    }
    let a_csr = dense::Csr::from_dense(a.entries.as_ref());
    let r_csr = dense::Csr::from_dense(r.entries.as_ref());
    let mut a0 = Mat::zeros(r.rows(), p.cols());
    let mut col = vec![0.0; p.rows()];
    for j in 0..p.cols() {
        for (i, v) in col.iter_mut().enumerate() {
            *v = p.entries[(i, j)];
        }
        for (i, v) in r_csr.apply(&a_csr.apply(&col)).into_iter().enumerate() {
            a0[(i, j)] = v;
        }
    }
    Ok(OperatorMatrix::new(a0, OperatorRole::Coarse))
}

/// Factorized coarse operator. For periodic problems the constant coarse
/// vector spans the kernel and solves act on its orthogonal complement.
#[derive(Debug, Clone)]
pub enum CoarseSolver {
    Definite(Llt<f64>),
    Deflated { factor: Llt<f64>, kernel: Vec<f64> },
}

impl CoarseSolver {
    pub fn new(a0: &OperatorMatrix, bc: BoundaryCondition) -> Result<Self> {
        let sym = symmetrized(a0.entries.as_ref());
        match bc {
            BoundaryCondition::Dirichlet => sym
                .llt(Side::Lower)
                .map(CoarseSolver::Definite)
                .map_err(|e| Error::SingularCoarse(format!("Cholesky failed: {e:?}"))),
            BoundaryCondition::Periodic => {
                let n = sym.nrows();
                let z = 1.0 / (n as f64).sqrt();
                let sigma = (0..n).map(|i| sym[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
                let shifted = Mat::from_fn(n, n, |i, j| sym[(i, j)] + sigma * z * z);
                let factor = shifted.llt(Side::Lower).map_err(|e| {
                    Error::SingularCoarse(format!("deflated Cholesky failed: {e:?}"))
                })?;
                Ok(CoarseSolver::Deflated {
                    factor,
                    kernel: vec![z; n],
                })
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut m = dense::col_from_slice(b).as_mat().to_owned();
        self.solve_in_place(&mut m);
        (0..b.len()).map(|i| m[(i, 0)]).collect()
    }

    /// Solves `A₀ X = B` column by column (pseudo-inverse when deflated).
    pub fn solve_mat(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        let mut m = b.to_owned();
        self.solve_in_place(&mut m);
        m
    }

    fn solve_in_place(&self, m: &mut Mat<f64>) {
        match self {
            CoarseSolver::Definite(f) => f.solve_in_place(m.as_mut()),
            CoarseSolver::Deflated { factor, kernel } => {
                project_out(m, kernel);
                factor.solve_in_place(m.as_mut());
                project_out(m, kernel);
            }
        }
    }
}

fn project_out(m: &mut Mat<f64>, z: &[f64]) {
    for j in 0..m.ncols() {
        let s: f64 = (0..m.nrows()).map(|i| z[i] * m[(i, j)]).sum();
        for i in 0..m.nrows() {
            m[(i, j)] -= s * z[i];
        }
    }
}

fn symmetrized(m: MatRef<'_, f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// All operators of the two-level method for one configuration.
#[derive(Debug, Clone)]
pub struct TwoLevel {
    pub config: DiscretizationConfig,
    pub params: MethodParams,
    pub a: OperatorMatrix,
    pub p: OperatorMatrix,
    pub r: OperatorMatrix,
    pub a0: OperatorMatrix,
    pub dinv: OperatorMatrix,
    pub coarse: CoarseSolver,
    a_csr: dense::Csr,
    p_csr: dense::Csr,
    r_csr: dense::Csr,
    smoother: f64,
}

impl TwoLevel {
    /// Assembles every operator; the configuration's penalty is replaced by
    /// `params.penalty`.
    pub fn new(config: &DiscretizationConfig, params: &MethodParams) -> Result<Self> {
        params.validate()?;
        let config = config.with_penalty(params.penalty);
        let a = assemble(&config)?;
        let p = prolongation_matrix(&config, params.discontinuity)?;
        let r = restriction_matrix(&p);
        let a0 = coarse_operator(&a, &r, &p)?;
        let dinv = smoother_matrix(&config, params)?;
        let coarse = CoarseSolver::new(&a0, config.bc)?;
        let a_csr = dense::Csr::from_dense(a.entries.as_ref());
        let p_csr = dense::Csr::from_dense(p.entries.as_ref());
        let r_csr = dense::Csr::from_dense(r.entries.as_ref());
        let smoother = smoother_scale(&config);
        Ok(Self {
            config,
            params: *params,
            a,
            p,
            r,
            a0,
            dinv,
            coarse,
            a_csr,
            p_csr,
            r_csr,
            smoother,
        })
    }

    pub fn dofs(&self) -> usize {
        self.a.rows()
    }

    pub fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        self.a_csr.apply(x)
    }

    /// `D⁻¹ x`
    pub fn apply_smoother(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v * self.smoother).collect()
    }

    /// `P A₀⁻¹ R g`
    pub fn coarse_correction(&self, g: &[f64]) -> Vec<f64> {
        let rc = self.r_csr.apply(g);
        let e0 = self.coarse.solve(&rc);
        self.p_csr.apply(&e0)
    }

    /// `x = α D⁻¹ g`, `y = x + P A₀⁻¹ R (g − A x)`.
    pub fn apply_preconditioner(&self, g: &[f64]) -> Vec<f64> {
        let mut x = self.apply_smoother(g);
        x.iter_mut().for_each(|v| *v *= self.params.alpha);
        let ax = self.apply_a(&x);
        let res: Vec<f64> = g.iter().zip(&ax).map(|(gi, ai)| gi - ai).collect();
        let corr = self.coarse_correction(&res);
        x.iter_mut().zip(&corr).for_each(|(xi, ci)| *xi += ci);
        x
    }

    /// `E e = (I − P A₀⁻¹ R A)(I − α D⁻¹ A) e`
    pub fn apply_error(&self, e: &[f64]) -> Vec<f64> {
        let mut s = self.apply_smoother(&self.apply_a(e));
        s.iter_mut()
            .zip(e)
            .for_each(|(si, ei)| *si = ei - self.params.alpha * *si);
        let corr = self.coarse_correction(&self.apply_a(&s));
        s.iter_mut().zip(&corr).for_each(|(si, ci)| *si -= ci);
        s
    }

    /// `P A₀⁻¹ R A` as a dense matrix.
    pub fn coarse_projection(&self) -> Mat<f64> {
        let ra = &self.r.entries * &self.a.entries;
        let sol = self.coarse.solve_mat(ra.as_ref());
        &self.p.entries * &sol
    }

    /// Dense `E = (I − P A₀⁻¹ R A)(I − α D⁻¹ A)`.
    pub fn error_operator(&self) -> OperatorMatrix {
        let n = self.dofs();
        let alpha = self.params.alpha;
        let da = &self.dinv.entries * &self.a.entries;
        let smooth = Mat::from_fn(n, n, |i, j| {
            (if i == j { 1.0 } else { 0.0 }) - alpha * da[(i, j)]
        });
        let pi = self.coarse_projection();
        let coarse = Mat::from_fn(n, n, |i, j| (if i == j { 1.0 } else { 0.0 }) - pi[(i, j)]);
        OperatorMatrix::new(&coarse * &smooth, OperatorRole::Error)
    }

    /// Dense `M⁻¹ = α D⁻¹ + P A₀⁻¹ R (I − α A D⁻¹)`.
    pub fn preconditioner_matrix(&self) -> Mat<f64> {
        let n = self.dofs();
        let alpha = self.params.alpha;
        let ad = &self.a.entries * &self.dinv.entries;
        let rhs = Mat::from_fn(n, n, |i, j| (if i == j { 1.0 } else { 0.0 }) - alpha * ad[(i, j)]);
        let rr = &self.r.entries * &rhs;
        let sol = self.coarse.solve_mat(rr.as_ref());
        let mut m = &self.p.entries * &sol;
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] += alpha * self.dinv.entries[(i, j)];
            }
        }
        m
    }

    /// Dense preconditioned operator `M⁻¹ A`.
    pub fn preconditioned_operator(&self) -> OperatorMatrix {
        OperatorMatrix::new(
            &self.preconditioner_matrix() * &self.a.entries,
            OperatorRole::Preconditioned,
        )
    }
}
