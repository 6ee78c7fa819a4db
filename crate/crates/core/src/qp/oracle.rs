//! Active-set enumeration. Exponential in the number of inequalities; used to
//! cross-check [`super::solve`] on small problems.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{QpError, QpProblem, QpSolution, QpStatus};

pub const ENUMERATION_LIMIT: usize = 20;
const ACCEPT_TOL: f64 = 1e-9;

/// Solves the equality-constrained KKT system for every subset of
/// inequalities taken as active, keeps the primal and dual feasible candidates
/// and returns the one with the least objective.
pub fn brute_force_solve(problem: &QpProblem) -> Result<QpSolution, QpError> {
    problem.check_dimensions()?;
    let n = problem.num_vars();
    let me = problem.num_eq();
    let mi = problem.num_ineq();
    if mi > ENUMERATION_LIMIT {
        return Err(QpError::TooManyConstraints {
            count: mi,
            limit: ENUMERATION_LIMIT,
        });
    }

    let mut best: Option<QpSolution> = None;
    for mask in 0u32..(1u32 << mi) {
        let rows: Vec<usize> = (0..mi).filter(|i| mask & (1 << i) != 0).collect();
        let k = me + rows.len();
        if k > n {
            continue;
        }
        let dim = n + k;
        let mut kkt = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&problem.hessian);
        for i in 0..n {
            rhs[i] = -problem.gradient[i];
        }
        for r in 0..me {
            for c in 0..n {
                kkt[(n + r, c)] = problem.eq_matrix[(r, c)];
                kkt[(c, n + r)] = problem.eq_matrix[(r, c)];
            }
            rhs[n + r] = -problem.eq_offset[r];
        }
        for (s, &row) in rows.iter().enumerate() {
            let at = n + me + s;
            for c in 0..n {
                kkt[(at, c)] = problem.ineq_matrix[(row, c)];
                kkt[(c, at)] = problem.ineq_matrix[(row, c)];
            }
            rhs[at] = -problem.ineq_offset[row];
        }

        let lu = kkt.clone().lu();
        let Some(sol) = lu.solve(&rhs) else {
            continue;
        };
        // reject near-singular systems whose solve is numerically meaningless
        let residual = (&kkt * &sol - &rhs).amax();
        if !sol.iter().all(|v| v.is_finite()) || residual > 1e-8 * (1.0 + rhs.amax()) {
            continue;
        }

        let u = sol.rows(0, n).into_owned();
        let slack = &problem.ineq_matrix * &u + &problem.ineq_offset;
        if slack.iter().any(|s| *s > ACCEPT_TOL) {
            continue;
        }
        let mut ineq_multipliers = DVector::zeros(mi);
        for (s, &row) in rows.iter().enumerate() {
            ineq_multipliers[row] = sol[n + me + s];
        }
        if ineq_multipliers.iter().any(|l| *l < -ACCEPT_TOL) {
            continue;
        }
        let objective = problem.objective(&u);
        if best.as_ref().is_some_and(|b| b.objective <= objective) {
            continue;
        }
        best = Some(QpSolution {
            u,
            objective,
            eq_multipliers: sol.rows(n, me).into_owned(),
            ineq_multipliers,
            active_set: rows,
            status: QpStatus::Optimal,
            iterations: 0,
            regularized: false,
        });
    }

    Ok(best.unwrap_or_else(|| QpSolution {
        u: DVector::zeros(n),
        objective: f64::NAN,
        eq_multipliers: DVector::zeros(me),
        ineq_multipliers: DVector::zeros(mi),
        active_set: Vec::new(),
        status: QpStatus::Infeasible,
        iterations: 0,
        regularized: false,
    }))
}
