//! Goldfarb-Idnani dual active-set iteration.
//!
//! Works on `min 1/2 x'Gx + a'x` subject to `n_i'x = b_i` (the first `n_eq`
//! columns of `normals`) and `n_i'x >= b_i` (the rest), with `G` positive
//! definite. Keeps `J = L^-T Q` and an upper triangular `R` such that the
//! active normals satisfy `J' N_A = [R; 0]`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{ConstraintSet, QpStatus};

/// Relative size below which a new normal is taken to be linearly dependent
/// on the active ones.
const DEPENDENCE_TOL: f64 = 1e-10;

pub(crate) struct Outcome {
    pub x: DVector<f64>,
    /// Internal constraint indices, equalities first.
    pub active: Vec<usize>,
    pub multipliers: Vec<f64>,
    pub status: QpStatus,
    pub iterations: usize,
}

struct Factor {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    q: usize,
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = libm::hypot(a, b);
    if h == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / h, b / h, h)
    }
}

impl Factor {
    fn rotate_j(&mut self, k0: usize, k1: usize, c: f64, s: f64) {
        for row in 0..self.j.nrows() {
            let a = self.j[(row, k0)];
            let b = self.j[(row, k1)];
            self.j[(row, k0)] = c * a + s * b;
            self.j[(row, k1)] = -s * a + c * b;
        }
    }

    /// Step direction in the primal (`z`) and dual (`r`) spaces for normal `np`.
    fn directions(&self, np: &DVector<f64>) -> (DVector<f64>, DVector<f64>, Vec<f64>) {
        let n = self.j.nrows();
        let d = self.j.tr_mul(np);
        let mut z = DVector::zeros(n);
        for k in self.q..n {
            z.axpy(d[k], &self.j.column(k), 1.0);
        }
        let mut r = alloc::vec![0.0; self.q];
        for i in (0..self.q).rev() {
            let mut acc = d[i];
            for k in (i + 1)..self.q {
                acc -= self.r[(i, k)] * r[k];
            }
            r[i] = acc / self.r[(i, i)];
        }
        (d, z, r)
    }

    /// True when `d[q..]` is negligible, i.e. the normal lies in the span of
    /// the active normals.
    fn dependent(&self, d: &DVector<f64>) -> bool {
        let tail = d.rows(self.q, d.len() - self.q).norm();
        tail <= DEPENDENCE_TOL * d.norm()
    }

    /// Appends the normal whose `d = J' n` is given.
    fn add(&mut self, mut d: DVector<f64>) {
        let n = self.j.nrows();
        for k in ((self.q + 1)..n).rev() {
            let (c, s, h) = givens(d[k - 1], d[k]);
            if s == 0.0 {
                continue;
            }
            d[k - 1] = h;
            d[k] = 0.0;
            self.rotate_j(k - 1, k, c, s);
        }
        for i in 0..=self.q {
            self.r[(i, self.q)] = d[i];
        }
        self.q += 1;
    }

    /// Removes the active constraint at position `l`.
    fn drop(&mut self, l: usize) {
        let q = self.q;
        for col in l..(q - 1) {
            for row in 0..q {
                self.r[(row, col)] = self.r[(row, col + 1)];
            }
        }
        for row in 0..q {
            self.r[(row, q - 1)] = 0.0;
        }
        for j in l..(q - 1) {
            let (c, s, h) = givens(self.r[(j, j)], self.r[(j + 1, j)]);
            if s == 0.0 {
                continue;
            }
            self.r[(j, j)] = h;
            self.r[(j + 1, j)] = 0.0;
            for col in (j + 1)..(q - 1) {
                let a = self.r[(j, col)];
                let b = self.r[(j + 1, col)];
                self.r[(j, col)] = c * a + s * b;
                self.r[(j + 1, col)] = -s * a + c * b;
            }
            self.rotate_j(j, j + 1, c, s);
        }
        self.q -= 1;
    }
}

pub(crate) fn run(
    hessian: &DMatrix<f64>,
    linear: &DVector<f64>,
    cons: &ConstraintSet,
    tol: f64,
    max_iter: usize,
    hint: &[bool],
) -> Outcome {
    let n = hessian.nrows();
    let m = cons.rhs.len();

    let chol = hessian
        .clone()
        .cholesky()
        .expect("hessian is made positive definite before the iteration");
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .expect("cholesky factor has a nonzero diagonal");
    let mut fac = Factor {
        j: l_inv.transpose(),
        r: DMatrix::zeros(n, n),
        q: 0,
    };

    // unconstrained minimum -G^-1 a = -J J' a
    let mut x = -(&fac.j * fac.j.tr_mul(linear));
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let mut is_active = alloc::vec![false; m];
    let mut iterations = 0;

    let normal = |i: usize| cons.normals.column(i).into_owned();
    let slack = |x: &DVector<f64>, i: usize| cons.normals.column(i).dot(x) - cons.rhs[i];

    let outcome = |x: DVector<f64>, active: Vec<usize>, mult: Vec<f64>, status, iterations| Outcome {
        x,
        active,
        multipliers: mult,
        status,
        iterations,
    };

    for i in 0..cons.n_eq {
        let np = normal(i);
        let s = slack(&x, i);
        let (d, z, r) = fac.directions(&np);
        if fac.dependent(&d) {
            if s.abs() <= tol {
                continue;
            }
            return outcome(x, active, mult, QpStatus::Infeasible, iterations);
        }
        let t = -s / z.dot(&np);
        x.axpy(t, &z, 1.0);
        for (k, rk) in r.iter().enumerate() {
            mult[k] -= t * rk;
        }
        fac.add(d);
        active.push(i);
        mult.push(t);
        is_active[i] = true;
        iterations += 1;
    }
    let n_eq_active = active.len();

    loop {
        // pick the most violated inequality, hinted rows first, lowest index on ties
        let mut pick: Option<(usize, f64, bool)> = None;
        for i in cons.n_eq..m {
            if is_active[i] {
                continue;
            }
            let s = slack(&x, i);
            if s >= -tol {
                continue;
            }
            let hinted = hint.get(i - cons.n_eq).copied().unwrap_or(false);
            let better = match pick {
                None => true,
                Some((_, best, best_hinted)) => (hinted && !best_hinted) || (hinted == best_hinted && s < best),
            };
            if better {
                pick = Some((i, s, hinted));
            }
        }
        let Some((p, mut s_p, _)) = pick else {
            return outcome(x, active, mult, QpStatus::Optimal, iterations);
        };
        let np = normal(p);
        let mut u_p = 0.0;

        loop {
            if iterations >= max_iter {
                return outcome(x, active, mult, QpStatus::MaxIterations, iterations);
            }
            iterations += 1;

            let (d, z, r) = fac.directions(&np);

            // largest dual step keeping active inequality multipliers >= 0
            let mut t1 = f64::INFINITY;
            let mut leave = None;
            for k in n_eq_active..fac.q {
                if r[k] > 0.0 {
                    let ratio = mult[k] / r[k];
                    if ratio < t1 {
                        t1 = ratio;
                        leave = Some(k);
                    }
                }
            }
            let t2 = if fac.dependent(&d) {
                f64::INFINITY
            } else {
                -s_p / z.dot(&np)
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return outcome(x, active, mult, QpStatus::Infeasible, iterations);
            }

            if !t2.is_finite() {
                // dual-only step, then release the blocking constraint
                for (k, rk) in r.iter().enumerate() {
                    mult[k] -= t * rk;
                }
                u_p += t;
                let l = leave.expect("finite t1 has a blocking constraint");
                is_active[active[l]] = false;
                active.remove(l);
                mult.remove(l);
                fac.drop(l);
                continue;
            }

            x.axpy(t, &z, 1.0);
            for (k, rk) in r.iter().enumerate() {
                mult[k] -= t * rk;
            }
            u_p += t;

            if t2 <= t1 {
                fac.add(d);
                active.push(p);
                mult.push(u_p);
                is_active[p] = true;
                break;
            }
            let l = leave.expect("partial step has a blocking constraint");
            is_active[active[l]] = false;
            active.remove(l);
            mult.remove(l);
            fac.drop(l);
            s_p = slack(&x, p);
        }
    }
}
