//! Capture point and CMP relations, and the discrete LIPM + flywheel model.

use core::fmt;

use nalgebra::{SMatrix, SVector};

use crate::model::{Axis, AxisState, ValidatedParams};

pub type StateMatrix = SMatrix<f64, 5, 5>;
pub type InputMatrix = SMatrix<f64, 5, 2>;
pub type StateVector = SVector<f64, 5>;

/// Per-period input of one axis: ZMP rate and angular momentum acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisInput {
    /// m/s
    pub zmp_rate: f64,
    /// N m / s
    pub hddot: f64,
}

impl AxisInput {
    pub const ZERO: AxisInput = AxisInput {
        zmp_rate: 0.0,
        hddot: 0.0,
    };

    pub fn new(zmp_rate: f64, hddot: f64) -> Self {
        Self { zmp_rate, hddot }
    }
}

/// `xi = x_c + x_dot / omega`.
pub fn capture_point(com: f64, com_velocity: f64, omega: f64) -> f64 {
    com + com_velocity / omega
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonPositiveNormalForce(pub f64);

impl fmt::Display for NonPositiveNormalForce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "normal force must be positive, got {}", self.0)
    }
}

impl core::error::Error for NonPositiveNormalForce {}

/// CMP from the ZMP and the angular momentum rate about the CoM.
///
/// Sagittal: `p + Hdot_y / F_z`. Frontal: `p - Hdot_x / F_z`.
pub fn cmp_from_zmp(
    zmp: f64,
    hdot: f64,
    normal_force: f64,
    axis: Axis,
) -> Result<f64, NonPositiveNormalForce> {
    if !(normal_force > 0.0) {
        return Err(NonPositiveNormalForce(normal_force));
    }
    Ok(zmp + axis.cmp_sign() * hdot / normal_force)
}

/// `xi_dot = omega (xi - cmp) + f_ext / (m omega)`.
pub fn cp_derivative(cp: f64, cmp: f64, f_ext: f64, mass: f64, omega: f64) -> f64 {
    omega * (cp - cmp) + f_ext / (mass * omega)
}

/// Closed-form CP under a constant CMP and no external force.
pub fn analytic_cp(cp0: f64, cmp: f64, t: f64, omega: f64) -> f64 {
    (cp0 - cmp) * libm::exp(omega * t) + cmp
}

/// `X_{t+1} = A X_t + B u_t` for one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteModel {
    pub a: StateMatrix,
    pub b: InputMatrix,
    pub period: f64,
    /// Whether the disturbance state persists to the next step.
    pub mu: bool,
    pub axis: Axis,
}

/// Builds the Euler-discretised model for one axis.
///
/// Row 2 is the CP update. The Hdot coefficient is `-sign * omega T / (m g)`,
/// with `sign` the axis' CMP sign, and the disturbance enters as
/// `T F / (m omega)`.
pub fn system_matrices(params: &ValidatedParams, axis: Axis, mu: bool) -> DiscreteModel {
    let w = params.omega();
    let t = params.period();
    let m = params.mass;
    let g = params.gravity;
    let wt = w * t;

    #[rustfmt::skip]
    let a = StateMatrix::new(
        1.0 - wt, wt,       0.0, 0.0,                             0.0,
        0.0,      1.0 + wt, -wt, -axis.cmp_sign() * wt / (m * g), t / (m * w),
        0.0,      0.0,      1.0, 0.0,                             0.0,
        0.0,      0.0,      0.0, 1.0,                             0.0,
        0.0,      0.0,      0.0, 0.0,                             if mu { 1.0 } else { 0.0 },
    );
    #[rustfmt::skip]
    let b = InputMatrix::new(
        0.0, 0.0,
        0.0, 0.0,
        t,   0.0,
        0.0, t,
        0.0, 0.0,
    );
    DiscreteModel {
        a,
        b,
        period: t,
        mu,
        axis,
    }
}

impl DiscreteModel {
    pub fn step_vector(&self, x: &StateVector, u: &AxisInput) -> StateVector {
        self.a * x + self.b * SVector::<f64, 2>::new(u.zmp_rate, u.hddot)
    }
}

pub fn state_vector(state: &AxisState) -> StateVector {
    StateVector::from(state.to_array())
}

pub fn state_from_vector(v: &StateVector) -> AxisState {
    AxisState::from_array([v[0], v[1], v[2], v[3], v[4]])
}

/// Exactly `A X + B u`.
pub fn discrete_step(state: &AxisState, input: &AxisInput, model: &DiscreteModel) -> AxisState {
    state_from_vector(&model.step_vector(&state_vector(state), input))
}

/// Step size of the fine integrator used by the continuous plant.
pub const CONTINUOUS_DT: f64 = 1e-3;

/// Continuous plant state of one axis: `[x, x_dot, p, Hdot]`.
type ContinuousState = SVector<f64, 4>;

fn continuous_rhs(
    s: &ContinuousState,
    input: &AxisInput,
    f_ext: f64,
    axis: Axis,
    params: &ValidatedParams,
) -> ContinuousState {
    let w2 = params.omega() * params.omega();
    let cmp = s[2] + axis.cmp_sign() * s[3] / params.normal_force();
    ContinuousState::new(
        s[1],
        w2 * (s[0] - cmp) + f_ext / params.mass,
        input.zmp_rate,
        input.hddot,
    )
}

/// Propagates the continuous LIPM + flywheel dynamics over `duration` with a
/// fixed-step RK4 at `dt`, inputs and external force held constant.
///
/// The returned state's `f_ext` field is `f_ext` if `mu` is set, else zero,
/// matching the discrete model's gating.
pub fn continuous_step(
    state: &AxisState,
    input: &AxisInput,
    axis: Axis,
    params: &ValidatedParams,
    duration: f64,
    dt: f64,
    mu: bool,
) -> AxisState {
    let w = params.omega();
    let f_ext = state.f_ext;
    let mut s = ContinuousState::new(state.com, state.com_velocity(w), state.zmp, state.hdot);
    let steps = libm::round(duration / dt).max(1.0) as usize;
    let h = duration / steps as f64;
    for _ in 0..steps {
        let k1 = continuous_rhs(&s, input, f_ext, axis, params);
        let k2 = continuous_rhs(&(s + k1 * (0.5 * h)), input, f_ext, axis, params);
        let k3 = continuous_rhs(&(s + k2 * (0.5 * h)), input, f_ext, axis, params);
        let k4 = continuous_rhs(&(s + k3 * h), input, f_ext, axis, params);
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    AxisState {
        com: s[0],
        cp: capture_point(s[0], s[1], w),
        zmp: s[2],
        hdot: s[3],
        f_ext: if mu { f_ext } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_params, RobotParams};
    use approx::assert_relative_eq;

    fn reference_params() -> ValidatedParams {
        validate_params(RobotParams::default()).unwrap()
    }

    const MG: f64 = 98.0 * 9.81;

    #[test]
    fn capture_point_examples() {
        assert_eq!(capture_point(0.1, 0.0, 3.6166), 0.1);
        assert_relative_eq!(capture_point(0.0, 0.18367, 3.6166), 0.05078, epsilon = 1e-5);
        assert_relative_eq!(capture_point(0.05, -0.18083, 3.6166), 0.0, epsilon = 1e-5);
    }

    #[test]
    fn cmp_examples() {
        assert_eq!(cmp_from_zmp(0.02, 0.0, 123.0, Axis::Sagittal).unwrap(), 0.02);
        assert_eq!(cmp_from_zmp(0.02, 0.0, 123.0, Axis::Frontal).unwrap(), 0.02);
        assert_relative_eq!(cmp_from_zmp(0.0, 50.0, MG, Axis::Sagittal).unwrap(), 0.05201, epsilon = 1e-5);
        assert_relative_eq!(cmp_from_zmp(0.0, 50.0, MG, Axis::Frontal).unwrap(), -0.05201, epsilon = 1e-5);
        assert!(cmp_from_zmp(0.0, 1.0, 0.0, Axis::Sagittal).is_err());
        assert!(cmp_from_zmp(0.0, 1.0, f64::NAN, Axis::Sagittal).is_err());
    }

    #[test]
    fn cp_derivative_examples() {
        assert_eq!(cp_derivative(0.3, 0.3, 0.0, 98.0, 3.6166), 0.0);
        assert_relative_eq!(cp_derivative(0.05, 0.0, 0.0, 98.0, 3.6166), 0.18083, epsilon = 1e-5);
        // 360 / (98 * 3.6166)
        assert_relative_eq!(cp_derivative(0.0, 0.0, 360.0, 98.0, 3.6166), 1.015725, epsilon = 1e-6);
    }

    #[test]
    fn analytic_cp_examples() {
        assert_eq!(analytic_cp(0.2, 0.2, 3.0, 3.6166), 0.2);
        assert_relative_eq!(analytic_cp(0.01, 0.0, 0.1, 3.6166), 0.0143571, epsilon = 1e-7);
        assert_eq!(analytic_cp(0.07, 0.01, 0.0, 3.6166), 0.07);
    }

    #[test]
    fn matrix_entries() {
        let p = reference_params();
        let m = system_matrices(&p, Axis::Sagittal, true);
        assert_relative_eq!(m.a[(1, 1)], 1.18083, epsilon = 1e-5);
        assert_relative_eq!(m.a[(0, 1)], 0.18083, epsilon = 1e-5);
        assert_relative_eq!(m.a[(1, 3)], -p.omega() * 0.05 / MG, max_relative = 1e-14);
        assert_eq!(m.a[(4, 4)], 1.0);
        let f = system_matrices(&p, Axis::Frontal, false);
        assert_eq!(f.a[(1, 3)], -m.a[(1, 3)]);
        assert_eq!(f.a[(4, 4)], 0.0);

        let mut nonzero = 0;
        for (i, v) in m.b.iter().enumerate() {
            if *v != 0.0 {
                nonzero += 1;
                assert!(i == 2 || i == 8, "unexpected B entry {i}");
                assert_eq!(*v, 0.05);
            }
        }
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn small_period_tends_to_identity() {
        let p = validate_params(RobotParams {
            control_period: 1e-7,
            recovery_time: 1e-7,
            ..RobotParams::default()
        })
        .unwrap();
        let m = system_matrices(&p, Axis::Sagittal, true);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((m.a[(i, j)] - expected).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn disturbance_vanishes_without_mu() {
        let p = reference_params();
        let m = system_matrices(&p, Axis::Sagittal, false);
        let s = AxisState {
            f_ext: 360.0,
            ..AxisState::default()
        };
        let next = discrete_step(&s, &AxisInput::ZERO, &m);
        assert_relative_eq!(next.cp, 0.0507858, epsilon = 1e-7);
        assert_eq!(next.f_ext, 0.0);
        let after = discrete_step(&next, &AxisInput::ZERO, &m);
        assert_relative_eq!(after.cp, next.cp * m.a[(1, 1)], max_relative = 1e-15);
    }

    #[test]
    fn step_examples() {
        let p = reference_params();
        let m = system_matrices(&p, Axis::Sagittal, true);
        assert_eq!(discrete_step(&AxisState::default(), &AxisInput::ZERO, &m), AxisState::default());

        let s = AxisState {
            cp: 0.05,
            ..AxisState::default()
        };
        let next = discrete_step(&s, &AxisInput::ZERO, &m);
        assert_relative_eq!(next.com, 0.0090415, epsilon = 1e-7);
        assert_relative_eq!(next.cp, 0.0590415, epsilon = 1e-7);
        assert_eq!((next.zmp, next.hdot, next.f_ext), (0.0, 0.0, 0.0));

        let s = AxisState {
            f_ext: 360.0,
            ..AxisState::default()
        };
        let next = discrete_step(&s, &AxisInput::ZERO, &m);
        assert_relative_eq!(next.cp, 360.0 * 0.05 / (98.0 * p.omega()), max_relative = 1e-14);
        assert_eq!(next.f_ext, 360.0);
    }

    #[test]
    fn positive_hdot_moves_cmp_outward_by_axis() {
        let fz = MG;
        assert!(cmp_from_zmp(0.0, 10.0, fz, Axis::Sagittal).unwrap() > 0.0);
        assert!(cmp_from_zmp(0.0, 10.0, fz, Axis::Frontal).unwrap() < 0.0);
    }

    #[test]
    fn one_period_cp_error_against_closed_form() {
        let p = reference_params();
        let w = p.omega();
        let m = system_matrices(&p, Axis::Sagittal, false);
        for &(cp0, cmp) in &[(0.2, 0.0), (0.0, 0.2), (-0.1, 0.1), (0.05, 0.04)] {
            let s = AxisState {
                cp: cp0,
                zmp: cmp,
                ..AxisState::default()
            };
            let next = discrete_step(&s, &AxisInput::ZERO, &m);
            let exact = analytic_cp(cp0, cmp, 0.05, w);
            let rel = ((next.cp - cmp) - (exact - cmp)).abs() / (exact - cmp).abs();
            assert!(rel < 0.02, "rel error {rel}");
        }
    }

    #[test]
    fn continuous_step_tracks_closed_form() {
        let p = reference_params();
        let w = p.omega();
        let s = AxisState {
            com: 0.0,
            cp: 0.1,
            zmp: 0.02,
            ..AxisState::default()
        };
        let next = continuous_step(&s, &AxisInput::ZERO, Axis::Frontal, &p, 0.05, CONTINUOUS_DT, false);
        let exact = analytic_cp(0.1, 0.02, 0.05, w);
        assert_relative_eq!(next.cp, exact, max_relative = 1e-9);
    }

    #[test]
    fn continuous_step_matches_impulse_of_push() {
        let p = reference_params();
        let s = AxisState {
            f_ext: 360.0,
            ..AxisState::default()
        };
        let next = continuous_step(&s, &AxisInput::ZERO, Axis::Sagittal, &p, 0.05, CONTINUOUS_DT, false);
        // integral of F e^{w(T-t)} / (m w) over one period
        let w = p.omega();
        let expected = 360.0 / (98.0 * w * w) * (libm::exp(w * 0.05) - 1.0);
        assert_relative_eq!(next.cp, expected, max_relative = 1e-9);
        assert_eq!(next.f_ext, 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_state() -> impl Strategy<Value = AxisState> {
            prop::array::uniform5(-100.0f64..100.0).prop_map(AxisState::from_array)
        }

        proptest! {
            #[test]
            fn step_is_linear(
                x1 in arb_state(), x2 in arb_state(),
                u1 in (-5.0f64..5.0, -500.0f64..500.0), u2 in (-5.0f64..5.0, -500.0f64..500.0),
                a in -3.0f64..3.0, b in -3.0f64..3.0, mu in any::<bool>(),
            ) {
                let p = reference_params();
                let m = system_matrices(&p, Axis::Sagittal, mu);
                let combo = AxisState::from_array(core::array::from_fn(|i| a * x1.to_array()[i] + b * x2.to_array()[i]));
                let u = AxisInput::new(a * u1.0 + b * u2.0, a * u1.1 + b * u2.1);
                let lhs = discrete_step(&combo, &u, &m).to_array();
                let r1 = discrete_step(&x1, &AxisInput::new(u1.0, u1.1), &m).to_array();
                let r2 = discrete_step(&x2, &AxisInput::new(u2.0, u2.1), &m).to_array();
                let mag = |x: &AxisState, u: (f64, f64)| {
                    x.to_array().iter().fold(u.0.abs().max(u.1.abs()), |m, v| m.max(v.abs()))
                };
                let scale = 1.0 + a.abs() * mag(&x1, u1) + b.abs() * mag(&x2, u2);
                for i in 0..5 {
                    let rhs = a * r1[i] + b * r2[i];
                    prop_assert!((lhs[i] - rhs).abs() <= 1e-12 * scale,
                        "component {}: {} vs {}", i, lhs[i], rhs);
                }
            }

            #[test]
            fn zero_hdot_cmp_is_zmp(p in -1.0f64..1.0, fz in 1.0f64..5000.0) {
                prop_assert_eq!(cmp_from_zmp(p, 0.0, fz, Axis::Sagittal).unwrap(), p);
                prop_assert_eq!(cmp_from_zmp(p, 0.0, fz, Axis::Frontal).unwrap(), p);
            }

            #[test]
            fn one_step_cp_error_below_two_percent(cp0 in -0.3f64..0.3, offset in -0.2f64..0.2) {
                prop_assume!(offset.abs() > 1e-6);
                let p = reference_params();
                let cmp = cp0 - offset;
                let m = system_matrices(&p, Axis::Frontal, false);
                let s = AxisState { cp: cp0, zmp: cmp, ..AxisState::default() };
                let next = discrete_step(&s, &AxisInput::ZERO, &m);
                let exact = analytic_cp(cp0, cmp, p.period(), p.omega());
                let rel = ((next.cp - cmp) - (exact - cmp)).abs() / (exact - cmp).abs();
                prop_assert!(rel < 0.02);
            }
        }
    }
}
