use super::*;
use alloc::vec;
use approx::assert_relative_eq;
use nalgebra::{dmatrix, dvector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solve_default(p: &QpProblem) -> QpSolution {
    let max_iter = 50 * (p.num_vars() + p.num_ineq());
    solve(p, DEFAULT_TOL, max_iter).unwrap()
}

fn unit_box() -> QpProblem {
    QpProblem::unconstrained(DMatrix::identity(2, 2), dvector![-1.0, -1.0])
}

#[test]
fn unconstrained_minimum() {
    let s = solve_default(&unit_box());
    assert_eq!(s.status, QpStatus::Optimal);
    assert_relative_eq!(s.u, dvector![1.0, 1.0], epsilon = 1e-12);
    assert_relative_eq!(s.objective, -1.0, epsilon = 1e-12);
    assert!(s.active_set.is_empty());
}

#[test]
fn single_upper_bound() {
    let p = QpProblem::unconstrained(dmatrix![1.0], dvector![-1.0])
        .with_inequalities(dmatrix![1.0], dvector![-0.5]);
    let s = solve_default(&p);
    assert_eq!(s.status, QpStatus::Optimal);
    assert_relative_eq!(s.u[0], 0.5, epsilon = 1e-12);
    assert_relative_eq!(s.ineq_multipliers[0], 0.5, epsilon = 1e-12);
    assert_eq!(s.active_set, vec![0]);
}

#[test]
fn equality_on_a_line() {
    let p = QpProblem::unconstrained(DMatrix::identity(2, 2), dvector![0.0, 0.0])
        .with_equalities(dmatrix![1.0, 1.0], dvector![-2.0]);
    let s = solve_default(&p);
    assert_eq!(s.status, QpStatus::Optimal);
    assert_relative_eq!(s.u, dvector![1.0, 1.0], epsilon = 1e-12);
    // H u + C' l = 0  ->  l = -1
    assert_relative_eq!(s.eq_multipliers[0], -1.0, epsilon = 1e-12);
}

#[test]
fn examples_agree_with_enumeration() {
    let problems = [
        unit_box(),
        QpProblem::unconstrained(dmatrix![1.0], dvector![-1.0]).with_inequalities(dmatrix![1.0], dvector![-0.5]),
        QpProblem::unconstrained(DMatrix::identity(2, 2), dvector![0.0, 0.0])
            .with_equalities(dmatrix![1.0, 1.0], dvector![-2.0]),
    ];
    for p in &problems {
        let a = solve_default(p);
        let b = brute_force_solve(p).unwrap();
        assert!((a.u.clone() - b.u).amax() < 1e-8);
        let k = kkt_residuals(p, &a);
        assert!(k.max() < 1e-8, "{k:?}");
    }
}

#[test]
fn perturbed_point_has_stationarity_error() {
    let p = unit_box();
    let mut s = solve_default(&p);
    s.u[1] += 0.1;
    // lambda_min(H) = 1
    assert!(kkt_residuals(&p, &s).stationarity >= 0.1 - 1e-8);
}

#[test]
fn zero_problem_has_zero_residuals() {
    let p = QpProblem::unconstrained(DMatrix::zeros(2, 2), DVector::zeros(2));
    let sol = QpSolution {
        u: DVector::zeros(2),
        objective: 0.0,
        eq_multipliers: DVector::zeros(0),
        ineq_multipliers: DVector::zeros(0),
        active_set: Vec::new(),
        status: QpStatus::Optimal,
        iterations: 0,
        regularized: false,
    };
    let k = kkt_residuals(&p, &sol);
    assert_eq!(k.max(), 0.0);

    let s = solve_default(&p);
    assert_eq!(s.status, QpStatus::Optimal);
    assert!(s.regularized);
    assert_eq!(s.u.amax(), 0.0);
}

#[test]
fn empty_feasible_set() {
    // u <= 0 and -u <= -1
    let p = QpProblem::unconstrained(dmatrix![1.0], dvector![0.0])
        .with_inequalities(dmatrix![1.0; -1.0], dvector![0.0, 1.0]);
    assert_eq!(solve_default(&p).status, QpStatus::Infeasible);
    assert_eq!(brute_force_solve(&p).unwrap().status, QpStatus::Infeasible);
}

#[test]
fn inconsistent_equalities() {
    let p = QpProblem::unconstrained(DMatrix::identity(2, 2), dvector![0.0, 0.0])
        .with_equalities(dmatrix![1.0, 1.0; 2.0, 2.0], dvector![-1.0, -1.0]);
    assert_eq!(solve_default(&p).status, QpStatus::Infeasible);
}

#[test]
fn redundant_equalities_are_skipped() {
    let p = QpProblem::unconstrained(DMatrix::identity(2, 2), dvector![0.0, 0.0])
        .with_equalities(dmatrix![1.0, 1.0; 2.0, 2.0], dvector![-2.0, -4.0]);
    let s = solve_default(&p);
    assert_eq!(s.status, QpStatus::Optimal);
    assert_relative_eq!(s.u, dvector![1.0, 1.0], epsilon = 1e-12);
    assert!(kkt_residuals(&p, &s).max() < 1e-10);
}

#[test]
fn zero_width_interval_becomes_equality() {
    // 0.3 <= u0 <= 0.3 written as two inequalities
    let p = QpProblem::unconstrained(DMatrix::identity(2, 2), dvector![-1.0, -1.0])
        .with_inequalities(dmatrix![1.0, 0.0; -1.0, 0.0], dvector![-0.3, 0.3]);
    let s = solve_default(&p);
    assert_eq!(s.status, QpStatus::Optimal);
    assert_relative_eq!(s.u, dvector![0.3, 1.0], epsilon = 1e-12);
    assert_eq!(s.active_set, vec![0, 1]);
    // pulled upwards, so the upper row carries the multiplier
    assert_relative_eq!(s.ineq_multipliers[0], 0.7, epsilon = 1e-12);
    assert_eq!(s.ineq_multipliers[1], 0.0);
    assert!(kkt_residuals(&p, &s).max() < 1e-10);

    let q = QpProblem { gradient: dvector![1.0, -1.0], ..p };
    let s = solve_default(&q);
    assert_relative_eq!(s.ineq_multipliers[1], 1.3, epsilon = 1e-12);
    assert!(kkt_residuals(&q, &s).max() < 1e-10);
}

#[test]
fn unbounded_direction() {
    let p = QpProblem::unconstrained(dmatrix![1.0, 0.0; 0.0, 0.0], dvector![0.0, 1.0]);
    assert_eq!(solve_default(&p).status, QpStatus::Unbounded);

    // bounded below by u1 >= -1
    let p = p.with_inequalities(dmatrix![0.0, -1.0], dvector![-1.0]);
    let s = solve_default(&p);
    assert_eq!(s.status, QpStatus::Optimal);
    assert_relative_eq!(s.u[1], -1.0, epsilon = 1e-8);
}

#[test]
fn singular_hessian_made_definite_by_equalities() {
    // only u0 is penalised, u1 is fixed by the equality u0 - u1 = 0
    let p = QpProblem::unconstrained(dmatrix![1.0, 0.0; 0.0, 0.0], dvector![-1.0, 0.0])
        .with_equalities(dmatrix![1.0, -1.0], dvector![0.0]);
    let s = solve_default(&p);
    assert_eq!(s.status, QpStatus::Optimal);
    assert!(!s.regularized);
    assert_relative_eq!(s.u, dvector![1.0, 1.0], epsilon = 1e-10);
    assert!(kkt_residuals(&p, &s).max() < 1e-8);
}

#[test]
fn rejects_bad_input() {
    let p = QpProblem::unconstrained(dmatrix![1.0, 2.0; 0.0, 1.0], dvector![0.0, 0.0]);
    assert!(matches!(solve(&p, 1e-8, 10), Err(QpError::NotSymmetric { .. })));

    let p = QpProblem::unconstrained(dmatrix![-1.0], dvector![0.0]);
    assert!(matches!(solve(&p, 1e-8, 10), Err(QpError::NonConvex { .. })));

    let p = QpProblem::unconstrained(DMatrix::identity(2, 2), dvector![0.0]);
    assert_eq!(solve(&p, 1e-8, 10), Err(QpError::DimensionMismatch));

    assert_eq!(solve(&unit_box(), 0.0, 10), Err(QpError::InvalidTolerance));

    let many = QpProblem::unconstrained(dmatrix![1.0], dvector![0.0])
        .with_inequalities(DMatrix::zeros(21, 1), DVector::zeros(21));
    assert!(matches!(brute_force_solve(&many), Err(QpError::TooManyConstraints { .. })));
}

#[test]
fn iteration_budget_is_reported() {
    let p = QpProblem::unconstrained(DMatrix::identity(2, 2), dvector![-1.0, -1.0])
        .with_inequalities(dmatrix![1.0, 0.0; 0.0, 1.0], dvector![0.0, 0.0]);
    assert_eq!(solve(&p, 1e-8, 1).unwrap().status, QpStatus::MaxIterations);
    assert_eq!(solve(&p, 1e-8, 10).unwrap().status, QpStatus::Optimal);
}

/// Random strictly convex problem that is feasible at a random point.
fn random_problem(rng: &mut ChaCha8Rng) -> QpProblem {
    let n = rng.gen_range(1..=8);
    let me = rng.gen_range(0..=3.min(n - 1));
    let mi = rng.gen_range(0..=6);
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let h = m.transpose() * &m + DMatrix::identity(n, n) * 1e-3;
    let f = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
    let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let c = DMatrix::from_fn(me, n, |_, _| rng.gen_range(-1.0..1.0));
    let d = -(&c * &x0);
    let e = DMatrix::from_fn(mi, n, |_, _| rng.gen_range(-1.0..1.0));
    let slack = DVector::from_fn(mi, |_, _| rng.gen_range(0.0..0.5));
    let g = -(&e * &x0) - slack;
    QpProblem::unconstrained(h, f).with_equalities(c, d).with_inequalities(e, g)
}

#[test]
fn agrees_with_enumeration_on_random_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let p = random_problem(&mut rng);
        let a = solve_default(&p);
        let b = brute_force_solve(&p).unwrap();
        assert_eq!(a.status, QpStatus::Optimal);
        assert_eq!(b.status, QpStatus::Optimal);
        assert!((a.objective - b.objective).abs() < 1e-6);
        assert!((a.u.clone() - &b.u).amax() < 1e-5);
        assert!(kkt_residuals(&p, &a).max() < 1e-8);
    }
}

#[test]
fn hessian_scaling_keeps_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let p = random_problem(&mut rng);
        let s = rng.gen_range(0.1..10.0);
        let scaled = QpProblem {
            hessian: &p.hessian * s,
            gradient: &p.gradient * s,
            ..p.clone()
        };
        let a = solve_default(&p);
        let b = solve_default(&scaled);
        assert!((a.u.clone() - &b.u).amax() < 1e-8);
        assert!((b.objective - s * a.objective).abs() < 1e-8 * (1.0 + b.objective.abs()));
    }
}

#[test]
fn extra_inequality_never_lowers_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let p = random_problem(&mut rng);
        let base = solve_default(&p);
        let n = p.num_vars();
        let row = DMatrix::from_fn(1, n, |_, _| rng.gen_range(-1.0..1.0));
        let off = rng.gen_range(-1.0..1.0);
        let e = DMatrix::from_fn(p.num_ineq() + 1, n, |r, c| {
            if r < p.num_ineq() {
                p.ineq_matrix[(r, c)]
            } else {
                row[(0, c)]
            }
        });
        let f = DVector::from_fn(p.num_ineq() + 1, |r, _| if r < p.num_ineq() { p.ineq_offset[r] } else { off });
        let tighter = p.clone().with_inequalities(e, f);
        let t = solve_default(&tighter);
        if t.status == QpStatus::Optimal {
            assert!(t.objective >= base.objective - 1e-9);
        } else {
            assert_eq!(t.status, QpStatus::Infeasible);
        }
    }
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let p = random_problem(&mut rng);
    let a = solve_default(&p);
    let b = solve_default(&p);
    assert_eq!(a, b);
}

#[test]
fn warm_hint_does_not_change_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..50 {
        let p = random_problem(&mut rng);
        let cold = solve_default(&p);
        let mut solver = QpSolver::default();
        solver.set_hint((0..p.num_ineq()).rev().collect());
        let warm = solver.solve(&p).unwrap();
        assert_eq!(warm.status, QpStatus::Optimal);
        assert!((warm.u.clone() - &cold.u).amax() < 1e-8);
        assert_eq!(solver.hint(), warm.active_set.as_slice());
    }
}
