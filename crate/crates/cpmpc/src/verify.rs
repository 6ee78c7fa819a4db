//! Seeded property checks behind the `verify` command.

use std::fmt;
use std::time::{Duration, Instant};

use cpmpc_core::dynamics::{analytic_cp, continuous_step, discrete_step, system_matrices, AxisInput, CONTINUOUS_DT};
use cpmpc_core::model::{validate_params, Axis, AxisState, Contact, RobotParams, ValidatedParams};
use cpmpc_core::mpc::{build_cost, build_prediction, simulate_inputs, MpcWeights};
use cpmpc_core::qp::{self, brute_force_solve, kkt_residuals, QpProblem, QpStatus, DEFAULT_TOL};
use cpmpc_core::sim::{run_scenario, Scenario};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 2017;
pub const DEFAULT_COUNT: usize = 1000;

pub const OBJECTIVE_TOL: f64 = 1e-6;
pub const SOLUTION_TOL: f64 = 1e-5;
pub const KKT_TOL: f64 = 1e-8;
pub const CONDENSING_TOL: f64 = 1e-10;
pub const COST_TOL: f64 = 1e-9;
pub const DISCRETE_CP_TOL: f64 = 0.02;
pub const CONTINUOUS_CP_TOL: f64 = 1e-4;
pub const REST_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} {} ({:.3} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed(name: &'static str, check: impl FnOnce() -> (bool, String)) -> PropertyResult {
    let start = Instant::now();
    let (passed, detail) = check();
    PropertyResult {
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

fn reference_params() -> ValidatedParams {
    validate_params(RobotParams::default()).expect("default parameters are valid")
}

/// Strictly convex QP with up to 8 variables, 3 equalities and 6
/// inequalities, feasible by construction.
pub fn random_qp(rng: &mut impl Rng) -> QpProblem {
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

pub fn qp_oracle(seed: u64, count: usize) -> PropertyResult {
    timed("qp_oracle", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut worst_obj, mut worst_u, mut worst_kkt) = (0.0f64, 0.0f64, 0.0f64);
        let mut failures = 0;
        for _ in 0..count {
            let p = random_qp(&mut rng);
            let max_iter = 50 * (p.num_vars() + p.num_ineq());
            let (Ok(a), Ok(b)) = (qp::solve(&p, DEFAULT_TOL, max_iter), brute_force_solve(&p)) else {
                failures += 1;
                continue;
            };
            if a.status != QpStatus::Optimal || b.status != QpStatus::Optimal {
                failures += 1;
                continue;
            }
            worst_obj = worst_obj.max((a.objective - b.objective).abs());
            worst_u = worst_u.max((&a.u - &b.u).amax());
            worst_kkt = worst_kkt.max(kkt_residuals(&p, &a).max());
        }
        let passed = failures == 0 && worst_obj < OBJECTIVE_TOL && worst_u < SOLUTION_TOL && worst_kkt < KKT_TOL;
        (
            passed,
            format!("{count} problems, {failures} non-optimal, objective gap {worst_obj:.2e}, solution gap {worst_u:.2e}, KKT {worst_kkt:.2e}"),
        )
    })
}

fn random_state(rng: &mut impl Rng) -> AxisState {
    AxisState {
        com: rng.gen_range(-0.1..0.1),
        cp: rng.gen_range(-0.1..0.1),
        zmp: rng.gen_range(-0.1..0.1),
        hdot: rng.gen_range(-50.0..50.0),
        f_ext: rng.gen_range(-300.0..300.0),
    }
}

fn random_inputs(rng: &mut impl Rng, n: usize) -> Vec<AxisInput> {
    (0..n)
        .map(|_| AxisInput::new(rng.gen_range(-1.0..1.0), rng.gen_range(-100.0..100.0)))
        .collect()
}

fn stack(inputs: &[AxisInput]) -> DVector<f64> {
    DVector::from_iterator(2 * inputs.len(), inputs.iter().flat_map(|u| [u.zmp_rate, u.hddot]))
}

pub fn condensing(seed: u64, count: usize, horizon: usize) -> PropertyResult {
    timed("condensing", || {
        let p = reference_params();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for i in 0..count {
            let axis = Axis::BOTH[i % 2];
            let model = system_matrices(&p, axis, true);
            let x0 = random_state(&mut rng);
            let us = random_inputs(&mut rng, horizon);
            let mu: Vec<bool> = (0..horizon).map(|_| rng.gen_bool(0.3)).collect();
            let plan = build_prediction(&model, &x0, horizon, &mu).expect("valid horizon");
            let stacked = plan.predict(&stack(&us));
            let iterated = simulate_inputs(&model, &x0, &us, &mu);
            for (a, b) in stacked.iter().zip(&iterated) {
                for (x, y) in a.to_array().iter().zip(b.to_array().iter()) {
                    worst = worst.max((x - y).abs() / y.abs().max(1.0));
                }
            }
        }
        (worst < CONDENSING_TOL, format!("{count} pairs at N = {horizon}, max gap {worst:.2e}"))
    })
}

/// Term-by-term evaluation of the MPC cost by stepping the model.
pub fn literal_cost(
    params: &ValidatedParams,
    x0: (AxisState, AxisState),
    inputs: (&[AxisInput], &[AxisInput]),
    weights: &MpcWeights,
    cp_ref: (f64, f64),
) -> f64 {
    let mut total = 0.0;
    for (axis, x0, us, target) in [
        (Axis::Sagittal, x0.0, inputs.0, cp_ref.0),
        (Axis::Frontal, x0.1, inputs.1, cp_ref.1),
    ] {
        let w = weights.axis(axis);
        let m = system_matrices(params, axis, false);
        let mut x = x0;
        for u in us {
            x = discrete_step(&x, u, &m);
            total += w.cp * (x.cp - target).powi(2)
                + w.hddot * u.hddot.powi(2)
                + w.zmp_rate * u.zmp_rate.powi(2)
                + w.hdot * x.hdot.powi(2);
        }
    }
    total
}

pub fn cost_fidelity(seed: u64, count: usize, horizon: usize) -> PropertyResult {
    timed("cost_fidelity", || {
        let p = reference_params();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..count {
            let alphas: [f64; 8] = std::array::from_fn(|_| rng.gen_range(0.01..5.0));
            let weights = MpcWeights::from_alphas(alphas);
            let cp_ref = (rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
            let x0 = (random_state(&mut rng), random_state(&mut rng));
            let ux = random_inputs(&mut rng, horizon);
            let uy = random_inputs(&mut rng, horizon);
            let plans: Vec<_> = [(Axis::Sagittal, &x0.0), (Axis::Frontal, &x0.1)]
                .into_iter()
                .map(|(a, x)| build_prediction(&system_matrices(&p, a, false), x, horizon, &[]).expect("valid horizon"))
                .collect();
            let cost = build_cost(&plans[0], &plans[1], &weights, cp_ref).expect("matching plans");
            let u = DVector::from_iterator(4 * horizon, stack(&ux).iter().chain(stack(&uy).iter()).copied());
            let quadratic = cost.evaluate(&u);
            let literal = literal_cost(&p, x0, (&ux, &uy), &weights, cp_ref);
            worst = worst.max((quadratic - literal).abs() / literal.abs().max(1e-300));
        }
        (worst < COST_TOL, format!("{count} sequences at N = {horizon}, max relative gap {worst:.2e}"))
    })
}

/// Relative error of the propagated deviation `xi - cmp` against the
/// exponential solution, over one period with the CMP held.
fn cp_error(step: impl Fn(&AxisState, Axis) -> AxisState, period: f64, omega: f64, params: &ValidatedParams) -> f64 {
    let mut worst = 0.0f64;
    for axis in Axis::BOTH {
        for (cp, zmp, hdot) in [(0.05, 0.0, 0.0), (0.2, 0.1, 0.0), (-0.08, 0.02, 40.0), (0.01, -0.03, -120.0)] {
            let x = AxisState {
                com: 0.0,
                cp,
                zmp,
                hdot,
                f_ext: 0.0,
            };
            let cmp = zmp + axis.cmp_sign() * hdot / params.normal_force();
            let exact = analytic_cp(cp, cmp, period, omega);
            let got = step(&x, axis).cp;
            worst = worst.max(((got - cmp) - (exact - cmp)).abs() / (exact - cmp).abs());
        }
    }
    worst
}

pub fn discrete_cp() -> PropertyResult {
    timed("cp_discrete", || {
        let p = reference_params();
        let worst = cp_error(
            |x, axis| discrete_step(x, &AxisInput::ZERO, &system_matrices(&p, axis, false)),
            p.period(),
            p.omega(),
            &p,
        );
        (worst < DISCRETE_CP_TOL, format!("T = {} s, max relative error {:.3}%", p.period(), 100.0 * worst))
    })
}

pub fn continuous_cp() -> PropertyResult {
    timed("cp_continuous", || {
        let p = reference_params();
        let w = p.omega();
        let one_ms = cp_error(
            |x, axis| continuous_step(x, &AxisInput::ZERO, axis, &p, CONTINUOUS_DT, CONTINUOUS_DT, false),
            CONTINUOUS_DT,
            w,
            &p,
        );
        let period = cp_error(
            |x, axis| continuous_step(x, &AxisInput::ZERO, axis, &p, p.period(), CONTINUOUS_DT, false),
            p.period(),
            w,
            &p,
        );
        let worst = one_ms.max(period);
        (
            worst < CONTINUOUS_CP_TOL,
            format!("dt = 1 ms, max relative error {:.2e}% (one step), {:.2e}% (one period)", 100.0 * one_ms, 100.0 * period),
        )
    })
}

pub fn equilibrium() -> PropertyResult {
    timed("equilibrium", || {
        let contact = Contact::DoubleSupport {
            center: (0.0, 0.0),
            foot_length: 0.25,
            foot_width: 0.15,
            stance_width: 0.2,
        };
        let scenario = Scenario::new(RobotParams::default(), contact, Vec::new()).expect("valid scenario");
        let Ok((log, report)) = run_scenario(&scenario) else {
            return (false, "episode failed to run".into());
        };
        let (inputs, variation) = rest_metrics(&log);
        (
            report.success && inputs == 0.0 && variation < REST_TOL,
            format!("max |input| {inputs:.1e}, state total variation {variation:.1e}"),
        )
    })
}

/// Largest input magnitude and summed state variation over a log.
pub fn rest_metrics(log: &cpmpc_core::sim::TrajectoryLog) -> (f64, f64) {
    let mut inputs = 0.0f64;
    let mut variation = 0.0;
    for w in log.rows.windows(2) {
        for axis in Axis::BOTH {
            let (a, b) = (w[0].axis(axis), w[1].axis(axis));
            variation += (b.com - a.com).abs() + (b.cp - a.cp).abs() + (b.zmp - a.zmp).abs() + (b.hdot - a.hdot).abs();
        }
    }
    for r in &log.rows {
        for axis in Axis::BOTH {
            let a = r.axis(axis);
            inputs = inputs.max(a.zmp_rate.abs()).max(a.hddot.abs());
        }
    }
    (inputs, variation)
}

/// Runs every property; `count` sizes the random QP suite.
pub fn run_all(seed: u64, count: usize) -> Vec<PropertyResult> {
    vec![
        qp_oracle(seed, count),
        condensing(seed.wrapping_add(1), 100, 30),
        cost_fidelity(seed.wrapping_add(2), 10, 30),
        discrete_cp(),
        continuous_cp(),
        equilibrium(),
    ]
}
