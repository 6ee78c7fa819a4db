//! Robot parameters, per-axis state and the ZMP support region.
//!
//! Everything is SI: metres, kilograms, seconds, radians.

use alloc::vec::Vec;
use core::fmt;

/// Standard gravity used by the default parameter set.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Tolerance used when checking that the recovery window is a whole number
/// of control periods.
const HORIZON_TOLERANCE: f64 = 1e-9;

/// Physical and controller parameters of the biped.
///
/// The defaults are the SURENA III abstraction: 98 kg, CoM at 0.75 m,
/// a 0.25 m x 0.15 m foot, 8 kg m^2 trunk and 3 kg m^2 arm inertia,
/// a 0.05 s control period and a 1.5 s recovery window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    pub mass: f64,
    pub com_height: f64,
    pub gravity: f64,
    pub foot_length: f64,
    pub foot_width: f64,
    pub trunk_inertia: f64,
    pub arm_inertia: f64,
    /// Bound on |Hdot| per axis, N m.
    pub hdot_max: f64,
    pub hip_angle_max: f64,
    pub control_period: f64,
    pub recovery_time: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            mass: 98.0,
            com_height: 0.75,
            gravity: STANDARD_GRAVITY,
            foot_length: 0.25,
            foot_width: 0.15,
            trunk_inertia: 8.0,
            arm_inertia: 3.0,
            hdot_max: 190.0,
            hip_angle_max: 1.5,
            control_period: 0.05,
            recovery_time: 1.5,
        }
    }
}

impl RobotParams {
    /// Trunk and arms treated as one flywheel.
    pub fn flywheel_inertia(&self) -> f64 {
        self.trunk_inertia + self.arm_inertia
    }

    /// Vertical ground reaction force, taken constant at m g.
    pub fn normal_force(&self) -> f64 {
        self.mass * self.gravity
    }
}

/// Names a [`RobotParams`] field in validation errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamField {
    Mass,
    ComHeight,
    Gravity,
    FootLength,
    FootWidth,
    TrunkInertia,
    ArmInertia,
    HdotMax,
    HipAngleMax,
    ControlPeriod,
    RecoveryTime,
}

impl fmt::Display for ParamField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ParamField::Mass => "mass",
            ParamField::ComHeight => "com_height",
            ParamField::Gravity => "gravity",
            ParamField::FootLength => "foot_length",
            ParamField::FootWidth => "foot_width",
            ParamField::TrunkInertia => "trunk_inertia",
            ParamField::ArmInertia => "arm_inertia",
            ParamField::HdotMax => "hdot_max",
            ParamField::HipAngleMax => "hip_angle_max",
            ParamField::ControlPeriod => "control_period",
            ParamField::RecoveryTime => "recovery_time",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamError {
    NonPositive(ParamField),
    NonFinite(ParamField),
    /// `recovery_time` shorter than one control period.
    RecoveryShorterThanPeriod,
    /// `recovery_time / control_period` is not a whole number.
    NonIntegralHorizon { ratio: f64 },
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::NonPositive(field) => write!(f, "{field} must be positive"),
            ParamError::NonFinite(field) => write!(f, "{field} must be finite"),
            ParamError::RecoveryShorterThanPeriod => {
                f.write_str("recovery_time must be at least one control period")
            }
            ParamError::NonIntegralHorizon { ratio } => write!(
                f,
                "recovery_time / control_period = {ratio} is not a whole number of periods"
            ),
        }
    }
}

impl core::error::Error for ParamError {}

/// Parameters that passed [`validate_params`], with the natural frequency and
/// the horizon length cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams {
    params: RobotParams,
    omega: f64,
    horizon: usize,
}

impl ValidatedParams {
    pub fn params(&self) -> &RobotParams {
        &self.params
    }

    /// Natural frequency of the pendulum, 1/s.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Number of control periods in the recovery window.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn period(&self) -> f64 {
        self.params.control_period
    }
}

impl core::ops::Deref for ValidatedParams {
    type Target = RobotParams;

    fn deref(&self) -> &RobotParams {
        &self.params
    }
}

/// `sqrt(g / z_c)`.
pub fn natural_frequency(params: &ValidatedParams) -> f64 {
    params.omega
}

fn omega_of(gravity: f64, com_height: f64) -> f64 {
    libm::sqrt(gravity / com_height)
}

/// Checks every parameter invariant and reports all violations at once.
pub fn validate_params(params: RobotParams) -> Result<ValidatedParams, Vec<ParamError>> {
    let mut errors = Vec::new();

    let positive = [
        (ParamField::Mass, params.mass),
        (ParamField::ComHeight, params.com_height),
        (ParamField::Gravity, params.gravity),
        (ParamField::FootLength, params.foot_length),
        (ParamField::FootWidth, params.foot_width),
        (ParamField::TrunkInertia, params.trunk_inertia),
        (ParamField::ArmInertia, params.arm_inertia),
        (ParamField::HdotMax, params.hdot_max),
        (ParamField::HipAngleMax, params.hip_angle_max),
        (ParamField::ControlPeriod, params.control_period),
        (ParamField::RecoveryTime, params.recovery_time),
    ];
    for (field, value) in positive {
        if !value.is_finite() {
            errors.push(ParamError::NonFinite(field));
        } else if value <= 0.0 {
            errors.push(ParamError::NonPositive(field));
        }
    }

    let mut horizon = 0;
    let period = params.control_period;
    let recovery = params.recovery_time;
    if period.is_finite() && period > 0.0 && recovery.is_finite() && recovery > 0.0 {
        let ratio = recovery / period;
        let whole = libm::round(ratio);
        if recovery < period - HORIZON_TOLERANCE {
            errors.push(ParamError::RecoveryShorterThanPeriod);
        } else if libm::fabs(whole * period - recovery) > HORIZON_TOLERANCE {
            errors.push(ParamError::NonIntegralHorizon { ratio });
        } else {
            horizon = whole as usize;
        }
    }

    if errors.is_empty() {
        let omega = omega_of(params.gravity, params.com_height);
        if !(omega.is_finite() && omega > 0.0) {
            errors.push(ParamError::NonFinite(ParamField::ComHeight));
        } else {
            return Ok(ValidatedParams {
                params,
                omega,
                horizon,
            });
        }
    }
    Err(errors)
}

/// Which horizontal direction an axis model describes.
///
/// The sagittal axis carries x and the pitch rate Hdot_y, the frontal axis
/// carries y and the roll rate Hdot_x. The two differ only in the sign with
/// which Hdot shifts the CMP away from the ZMP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Sagittal,
    Frontal,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::Sagittal, Axis::Frontal];

    /// `cmp = p + sign * Hdot / F_z`.
    pub fn cmp_sign(self) -> f64 {
        match self {
            Axis::Sagittal => 1.0,
            Axis::Frontal => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Axis::Sagittal => 0,
            Axis::Frontal => 1,
        }
    }
}

/// One axis of the discrete model: `[x_c, xi, p, Hdot, F_ext]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisState {
    pub com: f64,
    pub cp: f64,
    pub zmp: f64,
    pub hdot: f64,
    pub f_ext: f64,
}

impl AxisState {
    pub const DIM: usize = 5;

    /// Builds the state from CoM position and velocity; the capture point is
    /// derived, not stored independently.
    pub fn from_com(com: f64, com_velocity: f64, zmp: f64, hdot: f64, omega: f64) -> Self {
        Self {
            com,
            cp: com + com_velocity / omega,
            zmp,
            hdot,
            f_ext: 0.0,
        }
    }

    /// Rest at `point`: CoM, CP and ZMP coincide, no angular momentum rate.
    pub fn at_rest(point: f64) -> Self {
        Self {
            com: point,
            cp: point,
            zmp: point,
            hdot: 0.0,
            f_ext: 0.0,
        }
    }

    /// `x_dot = omega (xi - x_c)`.
    pub fn com_velocity(&self, omega: f64) -> f64 {
        omega * (self.cp - self.com)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.com, self.cp, self.zmp, self.hdot, self.f_ext]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            com: v[0],
            cp: v[1],
            zmp: v[2],
            hdot: v[3],
            f_ext: v[4],
        }
    }
}

/// Both axes plus the flywheel diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarState {
    pub sagittal: AxisState,
    pub frontal: AxisState,
    /// Hip pitch equivalent, driven by Hdot_y.
    pub flywheel_angle_pitch: f64,
    /// Hip roll equivalent, driven by Hdot_x.
    pub flywheel_angle_roll: f64,
    pub flywheel_rate_pitch: f64,
    pub flywheel_rate_roll: f64,
    pub time: f64,
}

impl PlanarState {
    pub fn at_rest(point: (f64, f64)) -> Self {
        Self {
            sagittal: AxisState::at_rest(point.0),
            frontal: AxisState::at_rest(point.1),
            ..Self::default()
        }
    }

    pub fn axis(&self, axis: Axis) -> &AxisState {
        match axis {
            Axis::Sagittal => &self.sagittal,
            Axis::Frontal => &self.frontal,
        }
    }

    pub fn axis_mut(&mut self, axis: Axis) -> &mut AxisState {
        match axis {
            Axis::Sagittal => &mut self.sagittal,
            Axis::Frontal => &mut self.frontal,
        }
    }
}

/// Axis-aligned box the ZMP has to stay in. Zero width is allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl SupportRegion {
    /// Orders each pair of bounds, so construction order does not matter.
    pub fn new(x_a: f64, x_b: f64, y_a: f64, y_b: f64) -> Self {
        Self {
            x_min: x_a.min(x_b),
            x_max: x_a.max(x_b),
            y_min: y_a.min(y_b),
            y_max: y_a.max(y_b),
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn bounds(&self, axis: Axis) -> (f64, f64) {
        match axis {
            Axis::Sagittal => (self.x_min, self.x_max),
            Axis::Frontal => (self.y_min, self.y_max),
        }
    }

    pub fn contains(&self, point: (f64, f64), tol: f64) -> bool {
        point.0 >= self.x_min - tol
            && point.0 <= self.x_max + tol
            && point.1 >= self.y_min - tol
            && point.1 <= self.y_max + tol
    }

    /// Distance by which `value` lies outside the interval on `axis`; zero inside.
    pub fn excursion(&self, axis: Axis, value: f64) -> f64 {
        let (lo, hi) = self.bounds(axis);
        if value < lo {
            lo - value
        } else if value > hi {
            value - hi
        } else {
            0.0
        }
    }
}

/// Direction a line contact runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineAxis {
    X,
    Y,
}

/// Ground contact description used to derive a [`SupportRegion`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contact {
    /// Two feet side by side; `stance_width` is the lateral distance between
    /// foot centers.
    DoubleSupport {
        center: (f64, f64),
        foot_length: f64,
        foot_width: f64,
        stance_width: f64,
    },
    SingleFoot {
        center: (f64, f64),
        foot_length: f64,
        foot_width: f64,
    },
    Line {
        center: (f64, f64),
        axis: LineAxis,
        length: f64,
    },
    Point {
        at: (f64, f64),
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvalidGeometry(pub &'static str);

impl fmt::Display for InvalidGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid contact geometry: {}", self.0)
    }
}

impl core::error::Error for InvalidGeometry {}

fn finite_point(p: (f64, f64)) -> bool {
    p.0.is_finite() && p.1.is_finite()
}

/// Axis-aligned box for a contact; double support takes the convex hull of
/// both foot rectangles.
pub fn region_from_contact(contact: &Contact) -> Result<SupportRegion, InvalidGeometry> {
    match *contact {
        Contact::DoubleSupport {
            center,
            foot_length,
            foot_width,
            stance_width,
        } => {
            if !finite_point(center) {
                return Err(InvalidGeometry("center must be finite"));
            }
            if !(foot_length > 0.0 && foot_width > 0.0) || !foot_length.is_finite() || !foot_width.is_finite() {
                return Err(InvalidGeometry("foot dimensions must be positive"));
            }
            if !(stance_width >= 0.0) || !stance_width.is_finite() {
                return Err(InvalidGeometry("stance width must be non-negative"));
            }
            let half_y = 0.5 * stance_width + 0.5 * foot_width;
            let half_x = 0.5 * foot_length;
            Ok(SupportRegion::new(
                center.0 - half_x,
                center.0 + half_x,
                center.1 - half_y,
                center.1 + half_y,
            ))
        }
        Contact::SingleFoot {
            center,
            foot_length,
            foot_width,
        } => {
            if !finite_point(center) {
                return Err(InvalidGeometry("center must be finite"));
            }
            if !(foot_length > 0.0 && foot_width > 0.0) || !foot_length.is_finite() || !foot_width.is_finite() {
                return Err(InvalidGeometry("foot dimensions must be positive"));
            }
            Ok(SupportRegion::new(
                center.0 - 0.5 * foot_length,
                center.0 + 0.5 * foot_length,
                center.1 - 0.5 * foot_width,
                center.1 + 0.5 * foot_width,
            ))
        }
        Contact::Line {
            center,
            axis,
            length,
        } => {
            if !finite_point(center) {
                return Err(InvalidGeometry("center must be finite"));
            }
            if !(length > 0.0) || !length.is_finite() {
                return Err(InvalidGeometry("line length must be positive"));
            }
            let half = 0.5 * length;
            Ok(match axis {
                LineAxis::X => SupportRegion::new(center.0 - half, center.0 + half, center.1, center.1),
                LineAxis::Y => SupportRegion::new(center.0, center.0, center.1 - half, center.1 + half),
            })
        }
        Contact::Point { at } => {
            if !finite_point(at) {
                return Err(InvalidGeometry("point must be finite"));
            }
            Ok(SupportRegion::new(at.0, at.0, at.1, at.1))
        }
    }
}

/// A constant force on the CoM over `[start_time, start_time + duration)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbance {
    pub start_time: f64,
    pub duration: f64,
    pub force_x: f64,
    pub force_y: f64,
}

/// Slack on the activity window so that period-aligned sample times computed
/// as `k * T` land on the intended side of each edge.
const ACTIVITY_EPS: f64 = 1e-9;

impl Disturbance {
    pub fn active(&self, t: f64) -> bool {
        t >= self.start_time - ACTIVITY_EPS && t < self.start_time + self.duration - ACTIVITY_EPS
    }

    pub fn is_valid(&self) -> bool {
        self.duration > 0.0
            && self.start_time.is_finite()
            && self.duration.is_finite()
            && self.force_x.is_finite()
            && self.force_y.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_params() -> ValidatedParams {
        validate_params(RobotParams::default()).unwrap()
    }

    #[test]
    fn natural_frequency_examples() {
        assert_relative_eq!(natural_frequency(&reference_params()), 3.6166, epsilon = 1e-4);

        let mut p = RobotParams::default();
        p.com_height = p.gravity;
        assert_relative_eq!(natural_frequency(&validate_params(p).unwrap()), 1.0, epsilon = 1e-15);

        p.com_height = 1.0;
        p.gravity = 9.0;
        assert_relative_eq!(natural_frequency(&validate_params(p).unwrap()), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn reference_horizon_is_thirty() {
        let v = reference_params();
        assert_eq!(v.horizon(), 30);
        assert_eq!(v.flywheel_inertia(), 11.0);
    }

    #[test]
    fn zero_mass_is_rejected() {
        let p = RobotParams {
            mass: 0.0,
            ..RobotParams::default()
        };
        assert_eq!(
            validate_params(p).unwrap_err(),
            alloc::vec![ParamError::NonPositive(ParamField::Mass)]
        );
    }

    #[test]
    fn fractional_horizon_is_rejected() {
        let p = RobotParams {
            recovery_time: 1.52,
            ..RobotParams::default()
        };
        let errs = validate_params(p).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(matches!(errs[0], ParamError::NonIntegralHorizon { .. }));
    }

    #[test]
    fn every_violation_is_reported() {
        let p = RobotParams {
            mass: -1.0,
            gravity: 0.0,
            control_period: f64::NAN,
            ..RobotParams::default()
        };
        let errs = validate_params(p).unwrap_err();
        assert!(errs.contains(&ParamError::NonPositive(ParamField::Mass)));
        assert!(errs.contains(&ParamError::NonPositive(ParamField::Gravity)));
        assert!(errs.contains(&ParamError::NonFinite(ParamField::ControlPeriod)));
    }

    #[test]
    fn recovery_shorter_than_period() {
        let p = RobotParams {
            recovery_time: 0.01,
            ..RobotParams::default()
        };
        assert_eq!(
            validate_params(p).unwrap_err(),
            alloc::vec![ParamError::RecoveryShorterThanPeriod]
        );
    }

    #[test]
    fn single_foot_region() {
        let r = region_from_contact(&Contact::SingleFoot {
            center: (0.0, 0.0),
            foot_length: 0.25,
            foot_width: 0.15,
        })
        .unwrap();
        assert_eq!(r, SupportRegion::new(-0.125, 0.125, -0.075, 0.075));
        assert_eq!(r.center(), (0.0, 0.0));
    }

    #[test]
    fn point_and_line_regions() {
        let r = region_from_contact(&Contact::Point { at: (0.0, 0.0) }).unwrap();
        assert_eq!((r.x_min, r.x_max, r.y_min, r.y_max), (0.0, 0.0, 0.0, 0.0));

        let r = region_from_contact(&Contact::Line {
            center: (0.0, 0.0),
            axis: LineAxis::X,
            length: 0.25,
        })
        .unwrap();
        assert_eq!((r.x_min, r.x_max, r.y_min, r.y_max), (-0.125, 0.125, 0.0, 0.0));
    }

    #[test]
    fn double_support_hull() {
        let r = region_from_contact(&Contact::DoubleSupport {
            center: (0.0, 0.0),
            foot_length: 0.25,
            foot_width: 0.15,
            stance_width: 0.20,
        })
        .unwrap();
        assert_relative_eq!(r.x_max, 0.125);
        assert_relative_eq!(r.y_max, 0.175);
        assert_relative_eq!(r.y_min, -0.175);
    }

    #[test]
    fn invalid_geometry() {
        assert!(region_from_contact(&Contact::Line {
            center: (0.0, 0.0),
            axis: LineAxis::Y,
            length: 0.0,
        })
        .is_err());
        assert!(region_from_contact(&Contact::SingleFoot {
            center: (f64::NAN, 0.0),
            foot_length: 0.25,
            foot_width: 0.15,
        })
        .is_err());
        assert!(region_from_contact(&Contact::DoubleSupport {
            center: (0.0, 0.0),
            foot_length: 0.25,
            foot_width: 0.15,
            stance_width: -0.1,
        })
        .is_err());
    }

    #[test]
    fn disturbance_window_is_half_open() {
        let d = Disturbance {
            start_time: 0.1,
            duration: 0.05,
            force_x: 360.0,
            force_y: 140.0,
        };
        assert!(!d.active(0.05));
        assert!(d.active(2.0 * 0.05));
        assert!(!d.active(3.0 * 0.05));
    }

    #[test]
    fn axis_state_from_com() {
        let omega = reference_params().omega();
        let s = AxisState::from_com(0.02, 0.3, 0.0, 0.0, omega);
        assert_eq!(s.cp, 0.02 + 0.3 / omega);
        assert_relative_eq!(s.com_velocity(omega), 0.3, max_relative = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn omega_squared_times_height_is_gravity(z in 0.05f64..5.0, g in 0.5f64..30.0) {
                let p = RobotParams { com_height: z, gravity: g, ..RobotParams::default() };
                let v = validate_params(p).unwrap();
                let w = natural_frequency(&v);
                prop_assert!((w * w * z - g).abs() <= 4.0 * f64::EPSILON * g);
            }

            #[test]
            fn center_ignores_bound_order(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0) {
                prop_assert_eq!(SupportRegion::new(a, b, c, d).center(), SupportRegion::new(b, a, d, c).center());
            }

            #[test]
            fn com_velocity_round_trip(x in -0.5f64..0.5, v in -2.0f64..2.0) {
                let omega = reference_params().omega();
                let s = AxisState::from_com(x, v, 0.0, 0.0, omega);
                let back = s.com_velocity(omega);
                prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }
}
