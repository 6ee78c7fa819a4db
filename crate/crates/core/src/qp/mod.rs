//! Dense convex QP:
//!
//! ```text
//!     minimize    1/2 u' H u + u' f
//!     subject to  C u + D  = 0
//!                 E u + F <= 0
//! ```
//!
//! [`solve`] runs a dual active-set method (Goldfarb-Idnani) on a Cholesky
//! factorisation of the Hessian, updated with Givens rotations as
//! constraints enter and leave. [`brute_force_solve`] enumerates active sets
//! and is kept as an independent check.

mod active_set;
mod oracle;

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub use oracle::brute_force_solve;

/// Eigenvalues of the (reduced) Hessian below this are treated as zero.
pub const REGULARIZATION: f64 = 1e-10;
pub const DEFAULT_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-10;
const PAIR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    /// `C`, one row per equality.
    pub eq_matrix: DMatrix<f64>,
    /// `D`
    pub eq_offset: DVector<f64>,
    /// `E`, one row per inequality.
    pub ineq_matrix: DMatrix<f64>,
    /// `F`
    pub ineq_offset: DVector<f64>,
}

impl QpProblem {
    /// Unconstrained problem in `n` variables.
    pub fn unconstrained(hessian: DMatrix<f64>, gradient: DVector<f64>) -> Self {
        let n = gradient.len();
        Self {
            hessian,
            gradient,
            eq_matrix: DMatrix::zeros(0, n),
            eq_offset: DVector::zeros(0),
            ineq_matrix: DMatrix::zeros(0, n),
            ineq_offset: DVector::zeros(0),
        }
    }

    pub fn with_equalities(mut self, c: DMatrix<f64>, d: DVector<f64>) -> Self {
        self.eq_matrix = c;
        self.eq_offset = d;
        self
    }

    pub fn with_inequalities(mut self, e: DMatrix<f64>, f: DVector<f64>) -> Self {
        self.ineq_matrix = e;
        self.ineq_offset = f;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.gradient.len()
    }

    pub fn num_eq(&self) -> usize {
        self.eq_offset.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.ineq_offset.len()
    }

    pub fn check_dimensions(&self) -> Result<(), QpError> {
        let n = self.num_vars();
        let ok = self.hessian.nrows() == n
            && self.hessian.ncols() == n
            && self.eq_matrix.ncols() == n
            && self.eq_matrix.nrows() == self.eq_offset.len()
            && self.ineq_matrix.ncols() == n
            && self.ineq_matrix.nrows() == self.ineq_offset.len();
        if ok {
            Ok(())
        } else {
            Err(QpError::DimensionMismatch)
        }
    }

    pub fn objective(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.hessian * u)) + u.dot(&self.gradient)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    Unbounded,
}

impl fmt::Display for QpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QpStatus::Optimal => "optimal",
            QpStatus::Infeasible => "infeasible",
            QpStatus::MaxIterations => "max_iterations",
            QpStatus::Unbounded => "unbounded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u: DVector<f64>,
    pub objective: f64,
    pub eq_multipliers: DVector<f64>,
    /// Non-negative at an optimum.
    pub ineq_multipliers: DVector<f64>,
    /// Inequality rows held as equalities at the returned point, ascending.
    pub active_set: Vec<usize>,
    pub status: QpStatus,
    pub iterations: usize,
    /// Set when `REGULARIZATION * I` had to be added to the Hessian.
    pub regularized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QpError {
    DimensionMismatch,
    NotSymmetric { asymmetry: f64 },
    /// The Hessian has a negative curvature direction inside the equality
    /// constraints' nullspace.
    NonConvex { min_eigenvalue: f64 },
    InvalidTolerance,
    TooManyConstraints { count: usize, limit: usize },
}

impl fmt::Display for QpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QpError::DimensionMismatch => f.write_str("QP dimensions are inconsistent"),
            QpError::NotSymmetric { asymmetry } => {
                write!(f, "Hessian is not symmetric (max asymmetry {asymmetry:e})")
            }
            QpError::NonConvex { min_eigenvalue } => write!(
                f,
                "Hessian is not positive semidefinite on the equality nullspace (eigenvalue {min_eigenvalue:e})"
            ),
            QpError::InvalidTolerance => f.write_str("tolerance must be positive and finite"),
            QpError::TooManyConstraints { count, limit } => {
                write!(f, "{count} inequalities exceed the enumeration limit of {limit}")
            }
        }
    }
}

impl core::error::Error for QpError {}

/// Infinity norms of the KKT conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `H u + f + C' l_eq + E' l_in`
    pub stationarity: f64,
    /// `C u + D`
    pub primal_eq: f64,
    /// `max(0, E u + F)`
    pub primal_ineq: f64,
    /// `l_in * (E u + F)`
    pub complementarity: f64,
    /// `max(0, -l_in)`
    pub dual_infeasibility: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_eq)
            .max(self.primal_ineq)
            .max(self.complementarity)
            .max(self.dual_infeasibility)
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn kkt_residuals(problem: &QpProblem, solution: &QpSolution) -> KktResiduals {
    let u = &solution.u;
    let grad = &problem.hessian * u
        + &problem.gradient
        + problem.eq_matrix.tr_mul(&solution.eq_multipliers)
        + problem.ineq_matrix.tr_mul(&solution.ineq_multipliers);
    let eq = &problem.eq_matrix * u + &problem.eq_offset;
    let ineq = &problem.ineq_matrix * u + &problem.ineq_offset;
    let primal_ineq = ineq.iter().fold(0.0, |m: f64, v| m.max(*v));
    let complementarity = ineq
        .iter()
        .zip(solution.ineq_multipliers.iter())
        .fold(0.0, |m: f64, (s, l)| m.max((s * l).abs()));
    let dual_infeasibility = solution
        .ineq_multipliers
        .iter()
        .fold(0.0, |m: f64, l| m.max(-l));
    KktResiduals {
        stationarity: inf_norm(&grad),
        primal_eq: inf_norm(&eq),
        primal_ineq,
        complementarity,
        dual_infeasibility,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    /// `None` means `50 (n + m_i)`.
    pub max_iter: Option<usize>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: None,
        }
    }
}

/// Solver with a warm-start hint carried between calls.
///
/// The hint is a set of inequality rows expected to be active. When several
/// rows are violated, hinted rows are added first; the optimum itself does
/// not depend on the hint.
#[derive(Debug, Clone, Default)]
pub struct QpSolver {
    pub settings: SolverSettings,
    hint: Vec<usize>,
}

impl QpSolver {
    pub fn new(settings: SolverSettings) -> Self {
        Self {
            settings,
            hint: Vec::new(),
        }
    }

    pub fn set_hint(&mut self, rows: Vec<usize>) {
        self.hint = rows;
    }

    pub fn hint(&self) -> &[usize] {
        &self.hint
    }

    pub fn solve(&mut self, problem: &QpProblem) -> Result<QpSolution, QpError> {
        let max_iter = self
            .settings
            .max_iter
            .unwrap_or(50 * (problem.num_vars() + problem.num_ineq()));
        let solution = solve_with_hint(problem, self.settings.tol, max_iter, &self.hint)?;
        self.hint = solution.active_set.clone();
        Ok(solution)
    }
}

/// Cold-start solve.
pub fn solve(problem: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution, QpError> {
    solve_with_hint(problem, tol, max_iter, &[])
}

/// Inequality rows `i < j` with `E_j = -E_i` and `F_j = -F_i` describe a
/// zero-width interval; they are solved as one equality row.
fn degenerate_pairs(e: &DMatrix<f64>, f: &DVector<f64>) -> Vec<(usize, usize)> {
    let m = e.nrows();
    let mut paired = alloc::vec![false; m];
    let mut pairs = Vec::new();
    for i in 0..m {
        if paired[i] {
            continue;
        }
        let row_scale = e.row(i).iter().fold(f[i].abs(), |s, v| s.max(v.abs()));
        if row_scale == 0.0 {
            continue;
        }
        for j in (i + 1)..m {
            if paired[j] {
                continue;
            }
            let tol = PAIR_TOL * row_scale;
            if (f[i] + f[j]).abs() > tol {
                continue;
            }
            if e.row(i).iter().zip(e.row(j).iter()).all(|(a, b)| (a + b).abs() <= tol) {
                paired[i] = true;
                paired[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    pairs
}

/// Equalities, then inequalities, in the `n' x >= b` convention the
/// active-set iteration works in.
pub(crate) struct ConstraintSet {
    pub normals: DMatrix<f64>,
    pub rhs: Vec<f64>,
    pub n_eq: usize,
    /// Original inequality row of each internal inequality.
    pub ineq_origin: Vec<usize>,
    /// Original inequality rows behind each extra equality.
    pub pair_origin: Vec<(usize, usize)>,
}

fn build_constraints(problem: &QpProblem) -> ConstraintSet {
    let n = problem.num_vars();
    let pairs = degenerate_pairs(&problem.ineq_matrix, &problem.ineq_offset);
    let mut in_pair = alloc::vec![false; problem.num_ineq()];
    for &(i, j) in &pairs {
        in_pair[i] = true;
        in_pair[j] = true;
    }
    let ineq_origin: Vec<usize> = (0..problem.num_ineq()).filter(|&i| !in_pair[i]).collect();
    let n_eq = problem.num_eq() + pairs.len();
    let total = n_eq + ineq_origin.len();

    // C u + D = 0  ->  (-C) u = D ;  E u + F <= 0  ->  (-E) u >= F
    let mut normals = DMatrix::zeros(n, total);
    let mut rhs = Vec::with_capacity(total);
    let mut col = 0;
    for r in 0..problem.num_eq() {
        for k in 0..n {
            normals[(k, col)] = -problem.eq_matrix[(r, k)];
        }
        rhs.push(problem.eq_offset[r]);
        col += 1;
    }
    for &(i, _) in &pairs {
        for k in 0..n {
            normals[(k, col)] = -problem.ineq_matrix[(i, k)];
        }
        rhs.push(problem.ineq_offset[i]);
        col += 1;
    }
    for &i in &ineq_origin {
        for k in 0..n {
            normals[(k, col)] = -problem.ineq_matrix[(i, k)];
        }
        rhs.push(problem.ineq_offset[i]);
        col += 1;
    }
    ConstraintSet {
        normals,
        rhs,
        n_eq,
        ineq_origin,
        pair_origin: pairs,
    }
}

struct Curvature {
    hessian: DMatrix<f64>,
    /// Weight of the `||C u + D||^2` term folded into `hessian`.
    penalty: f64,
    regularized: bool,
    /// Zero-curvature directions inside the equality nullspace.
    flat_directions: Vec<DVector<f64>>,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |s: f64, v| s.max(v.abs()))
}

/// Makes the Hessian handed to the active-set iteration positive definite.
///
/// Trying a Cholesky factorisation first keeps the common, well-conditioned
/// case free of eigendecompositions: `1 / ||L^-1||_F^2` is a lower bound on
/// the smallest eigenvalue.
fn prepare_hessian(problem: &QpProblem, constraints: &ConstraintSet) -> Result<Curvature, QpError> {
    let h = &problem.hessian;
    let n = h.nrows();
    let asymmetry = (h - h.transpose()).iter().fold(0.0, |s: f64, v| s.max(v.abs()));
    if !(asymmetry <= SYMMETRY_TOL * max_abs(h).max(1.0)) {
        return Err(QpError::NotSymmetric { asymmetry });
    }
    let sym = (h + h.transpose()) * 0.5;

    if let Some(chol) = sym.clone().cholesky() {
        let l_inv = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .unwrap_or_else(|| DMatrix::zeros(n, n));
        let frob2 = l_inv.norm_squared();
        if frob2.is_finite() && frob2 > 0.0 && 1.0 / frob2 >= REGULARIZATION {
            return Ok(Curvature {
                hessian: sym,
                penalty: 0.0,
                regularized: false,
                flat_directions: Vec::new(),
            });
        }
    }
    if n == 0 {
        return Ok(Curvature {
            hessian: sym,
            penalty: 0.0,
            regularized: false,
            flat_directions: Vec::new(),
        });
    }

    // Nullspace of the equality normals (including collapsed pairs).
    let eq_normals = constraints.normals.columns(0, constraints.n_eq);
    let gram = &eq_normals * eq_normals.transpose();
    let gram_eig = SymmetricEigen::new(gram.clone());
    let gram_scale = gram_eig.eigenvalues.iter().fold(0.0, |s: f64, v| s.max(v.abs()));
    let null_cols: Vec<usize> = (0..n)
        .filter(|&k| gram_eig.eigenvalues[k] <= 1e-12 * gram_scale.max(1e-300))
        .collect();
    let z = DMatrix::from_fn(n, null_cols.len(), |r, c| gram_eig.eigenvectors[(r, null_cols[c])]);

    let scale = max_abs(&sym).max(1.0);
    let mut flat_directions = Vec::new();
    let mut reduced_min = f64::INFINITY;
    if z.ncols() > 0 {
        let reduced = z.transpose() * &sym * &z;
        let eig = SymmetricEigen::new(reduced);
        for k in 0..eig.eigenvalues.len() {
            let lambda = eig.eigenvalues[k];
            reduced_min = reduced_min.min(lambda);
            if lambda < REGULARIZATION {
                flat_directions.push(&z * eig.eigenvectors.column(k));
            }
        }
    }
    if reduced_min < -1e-8 * scale {
        return Err(QpError::NonConvex {
            min_eigenvalue: reduced_min,
        });
    }

    // Penalising ||C u + D||^2 leaves the problem unchanged on the feasible
    // set and lifts the curvature orthogonal to it.
    let rho = scale;
    let mut hessian = sym + gram * rho;
    let regularized = !flat_directions.is_empty();
    if regularized {
        for k in 0..n {
            hessian[(k, k)] += REGULARIZATION;
        }
    }
    Ok(Curvature {
        hessian,
        penalty: rho,
        regularized,
        flat_directions,
    })
}

pub(crate) fn solve_with_hint(
    problem: &QpProblem,
    tol: f64,
    max_iter: usize,
    hint: &[usize],
) -> Result<QpSolution, QpError> {
    problem.check_dimensions()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(QpError::InvalidTolerance);
    }
    let constraints = build_constraints(problem);
    let curvature = prepare_hessian(problem, &constraints)?;

    // The penalty 1/2 rho ||b - N'u||^2 over the equality normals N adds
    // -rho N b to the gradient.
    let linear = if curvature.penalty > 0.0 && constraints.n_eq > 0 {
        let eq_normals = constraints.normals.columns(0, constraints.n_eq);
        let b = DVector::from_column_slice(&constraints.rhs[..constraints.n_eq]);
        &problem.gradient - eq_normals * b * curvature.penalty
    } else {
        problem.gradient.clone()
    };

    let mut hint_mask = alloc::vec![false; constraints.ineq_origin.len()];
    for (k, &orig) in constraints.ineq_origin.iter().enumerate() {
        if hint.contains(&orig) {
            hint_mask[k] = true;
        }
    }

    let outcome = active_set::run(&curvature.hessian, &linear, &constraints, tol, max_iter, &hint_mask);

    let n = problem.num_vars();
    let mut eq_multipliers = DVector::zeros(problem.num_eq());
    let mut ineq_multipliers = DVector::zeros(problem.num_ineq());
    let mut active = Vec::new();
    for (&c, &lambda) in outcome.active.iter().zip(outcome.multipliers.iter()) {
        if c < problem.num_eq() {
            eq_multipliers[c] = lambda;
        } else if c < constraints.n_eq {
            let (i, j) = constraints.pair_origin[c - problem.num_eq()];
            if lambda >= 0.0 {
                ineq_multipliers[i] = lambda;
            } else {
                ineq_multipliers[j] = -lambda;
            }
            active.push(i);
            active.push(j);
        } else {
            let orig = constraints.ineq_origin[c - constraints.n_eq];
            ineq_multipliers[orig] = lambda;
            active.push(orig);
        }
    }
    // Collapsed pairs hold with equality even when redundant.
    for &(i, j) in &constraints.pair_origin {
        if !active.contains(&i) {
            active.push(i);
            active.push(j);
        }
    }
    active.sort_unstable();

    let u = outcome.x;
    let mut status = outcome.status;
    if status == QpStatus::Optimal && !curvature.flat_directions.is_empty() {
        let grad = &problem.hessian * &u + &problem.gradient;
        let e = &problem.ineq_matrix;
        for d in &curvature.flat_directions {
            let slope = grad.dot(d);
            if slope.abs() <= tol {
                continue;
            }
            let dir = if slope > 0.0 { -d } else { d.clone() };
            let ray_feasible = (0..e.nrows()).all(|r| e.row(r).transpose().dot(&dir) <= 1e-12);
            if ray_feasible {
                status = QpStatus::Unbounded;
                break;
            }
        }
    }
    debug_assert_eq!(u.len(), n);
    Ok(QpSolution {
        objective: problem.objective(&u),
        u,
        eq_multipliers,
        ineq_multipliers,
        active_set: active,
        status,
        iterations: outcome.iterations,
        regularized: curvature.regularized,
    })
}

#[cfg(test)]
mod tests;
