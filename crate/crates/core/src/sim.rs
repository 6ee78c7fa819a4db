//! Closed-loop episodes: plant propagation, push injection, per-period control
//! and the success verdict.

use alloc::vec::Vec;
use core::fmt;

use crate::dynamics::{capture_point, cmp_from_zmp, continuous_step, discrete_step, system_matrices, AxisInput, CONTINUOUS_DT};
use crate::model::{region_from_contact, Axis, AxisState, Contact, Disturbance, InvalidGeometry, ParamError, PlanarState, RobotParams, SupportRegion, ValidatedParams, validate_params};
use crate::mpc::{ControlOutput, Forecast, Foreknowledge, MpcConfig, MpcController, MpcError};
use crate::qp::QpStatus;

pub const CP_TOLERANCE: f64 = 5e-3;
pub const HDOT_TOLERANCE: f64 = 1.0;
pub const ZMP_VIOLATION_TOLERANCE: f64 = 1e-3;

/// Time after the recovery window that a default episode keeps running.
pub const DEFAULT_SETTLE_TIME: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlantMode {
    /// The plant is the controller's own discrete model.
    #[default]
    Matched,
    /// RK4 at 1 ms with inputs held over each period.
    Continuous,
}

/// Source of wall time for solve timing. Returns seconds from any origin.
pub trait Clock {
    fn now(&self) -> f64;
}

/// Reports zero for every reading.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    Params(Vec<ParamError>),
    Geometry(InvalidGeometry),
    Mpc(MpcError),
    EpisodeTooShort { episode: f64, required: f64 },
    InvalidDisturbance(usize),
    DisturbanceOutsideEpisode(usize),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Params(errs) => {
                write!(f, "invalid robot parameters:")?;
                for e in errs {
                    write!(f, " {e};")?;
                }
                Ok(())
            }
            ScenarioError::Geometry(e) => write!(f, "{e}"),
            ScenarioError::Mpc(e) => write!(f, "{e}"),
            ScenarioError::EpisodeTooShort { episode, required } => {
                write!(f, "episode of {episode} s is shorter than the required {required} s")
            }
            ScenarioError::InvalidDisturbance(i) => write!(f, "disturbance {i} has a non-positive duration or non-finite values"),
            ScenarioError::DisturbanceOutsideEpisode(i) => write!(f, "disturbance {i} does not lie within the episode"),
        }
    }
}

impl core::error::Error for ScenarioError {}

impl From<MpcError> for ScenarioError {
    fn from(e: MpcError) -> Self {
        ScenarioError::Mpc(e)
    }
}

/// A validated episode description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ValidatedParams,
    pub contact: Contact,
    pub mpc: MpcConfig,
    pub disturbances: Vec<Disturbance>,
    pub episode_duration: f64,
    pub plant_mode: PlantMode,
    /// Start of the recovery window; the first push start when unset.
    pub recovery_start: Option<f64>,
}

impl Scenario {
    /// Default controller settings for `contact` and an episode running
    /// [`DEFAULT_SETTLE_TIME`] past the end of the recovery window.
    pub fn new(params: RobotParams, contact: Contact, disturbances: Vec<Disturbance>) -> Result<Self, ScenarioError> {
        let params = validate_params(params).map_err(ScenarioError::Params)?;
        let region = region_from_contact(&contact).map_err(ScenarioError::Geometry)?;
        let mut scenario = Self {
            params,
            contact,
            mpc: MpcConfig::new(region),
            disturbances,
            episode_duration: 0.0,
            plant_mode: PlantMode::Matched,
            recovery_start: None,
        };
        scenario.episode_duration = scenario.window_end_time() + DEFAULT_SETTLE_TIME;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn region(&self) -> SupportRegion {
        self.mpc.region
    }

    pub fn period(&self) -> f64 {
        self.params.period()
    }

    /// Number of plant steps; the log holds one more row than this.
    pub fn num_periods(&self) -> usize {
        libm::round(self.episode_duration / self.period()) as usize
    }

    pub fn window_start_time(&self) -> f64 {
        self.recovery_start.unwrap_or_else(|| {
            self.disturbances
                .iter()
                .map(|d| d.start_time)
                .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))))
                .unwrap_or(0.0)
        })
    }

    pub fn window_start(&self) -> usize {
        libm::round(self.window_start_time() / self.period()).max(0.0) as usize
    }

    /// Period index at which the recovery window closes.
    pub fn window_end(&self) -> usize {
        self.window_start() + self.params.horizon()
    }

    pub fn window_end_time(&self) -> f64 {
        self.window_end() as f64 * self.period()
    }

    /// Steps left to the terminal time at period `k`.
    pub fn steps_remaining(&self, k: usize) -> usize {
        if k < self.window_start() {
            self.params.horizon()
        } else {
            self.window_end().saturating_sub(k)
        }
    }

    pub fn initial_state(&self) -> PlanarState {
        PlanarState::at_rest(self.mpc.cp_ref)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.mpc.validate()?;
        let required = self.params.recovery_time.max(self.window_end_time());
        if !(self.episode_duration >= required - 1e-9) {
            return Err(ScenarioError::EpisodeTooShort {
                episode: self.episode_duration,
                required,
            });
        }
        for (i, d) in self.disturbances.iter().enumerate() {
            if !d.is_valid() {
                return Err(ScenarioError::InvalidDisturbance(i));
            }
            if d.start_time < -1e-9 || d.start_time + d.duration > self.episode_duration + 1e-9 {
                return Err(ScenarioError::DisturbanceOutsideEpisode(i));
            }
        }
        Ok(())
    }

    /// Vector sum of the pushes active at `t`.
    pub fn force_at(&self, t: f64) -> (f64, f64) {
        total_force(&self.disturbances, t)
    }
}

fn total_force(disturbances: &[Disturbance], t: f64) -> (f64, f64) {
    disturbances
        .iter()
        .filter(|d| d.active(t))
        .fold((0.0, 0.0), |acc, d| (acc.0 + d.force_x, acc.1 + d.force_y))
}

/// State with the push forces at `t` applied, plus whether any push is active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Injected {
    pub state: PlanarState,
    pub active: bool,
}

/// Sets `f_ext` on both axes to the vector sum of pushes active at `t`.
pub fn apply_disturbance(state: &PlanarState, disturbances: &[Disturbance], t: f64) -> Injected {
    let force = total_force(disturbances, t);
    let mut out = *state;
    out.sagittal.f_ext = force.0;
    out.frontal.f_ext = force.1;
    Injected {
        state: out,
        active: disturbances.iter().any(|d| d.active(t)),
    }
}

/// One axis at one period.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisSample {
    pub com: f64,
    pub com_velocity: f64,
    pub cp: f64,
    pub zmp: f64,
    pub hdot: f64,
    pub cmp: f64,
    /// Push force acting over this period.
    pub f_ext: f64,
    pub zmp_rate: f64,
    pub hddot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub time: f64,
    pub sagittal: AxisSample,
    pub frontal: AxisSample,
    /// Flywheel angle driven by the sagittal `Hdot`.
    pub theta_pitch: f64,
    pub theta_rate_pitch: f64,
    /// Flywheel angle driven by the frontal `Hdot`.
    pub theta_roll: f64,
    pub theta_rate_roll: f64,
    pub status: QpStatus,
    pub iterations: usize,
    pub horizon: usize,
    pub objective: f64,
    /// Infinity norm of the controller's one-step prediction miss.
    pub prediction_error: f64,
    /// Set when the force acting this period differed from what the
    /// controller assumed.
    pub unforeseen_force: bool,
    pub solve_time: f64,
}

impl LogRow {
    pub fn axis(&self, axis: Axis) -> &AxisSample {
        match axis {
            Axis::Sagittal => &self.sagittal,
            Axis::Frontal => &self.frontal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub period: f64,
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, f: impl Fn(&LogRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FailureReason {
    CapturePointOffReference { axis: Axis, error: f64 },
    ZmpOffReference { axis: Axis, error: f64 },
    ComOffReference { axis: Axis, error: f64 },
    AngularMomentumRate { axis: Axis, hdot: f64 },
    ZmpOutsideRegion { violation: f64 },
    HipAngleExceeded { theta: f64 },
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::CapturePointOffReference { axis, error } => {
                write!(f, "{axis:?} capture point {error:.6} m from reference at recovery end")
            }
            FailureReason::ZmpOffReference { axis, error } => {
                write!(f, "{axis:?} ZMP {error:.6} m from reference at recovery end")
            }
            FailureReason::ComOffReference { axis, error } => {
                write!(f, "{axis:?} CoM {error:.6} m from reference at recovery end")
            }
            FailureReason::AngularMomentumRate { axis, hdot } => {
                write!(f, "{axis:?} angular momentum rate {hdot:.6} N m at recovery end")
            }
            FailureReason::ZmpOutsideRegion { violation } => {
                write!(f, "ZMP left the support region by {violation:.6} m")
            }
            FailureReason::HipAngleExceeded { theta } => write!(f, "flywheel angle reached {theta:.6} rad"),
        }
    }
}

/// Absolute terminal errors of one axis at the recovery end.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TerminalError {
    pub cp: f64,
    pub zmp: f64,
    pub com: f64,
    pub hdot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverStats {
    pub solves: usize,
    pub optimal: usize,
    pub infeasible: usize,
    pub max_iterations: usize,
    pub unbounded: usize,
    pub total_iterations: usize,
    pub peak_iterations: usize,
    pub total_solve_time: f64,
    pub peak_solve_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    pub success: bool,
    pub failures: Vec<FailureReason>,
    pub recovery_end_time: f64,
    pub terminal_sagittal: TerminalError,
    pub terminal_frontal: TerminalError,
    /// Peak `|Hdot|` per axis, N m.
    pub peak_hdot_sagittal: f64,
    pub peak_hdot_frontal: f64,
    /// Peak hip pitch angle over the recovery window, rad.
    pub theta_max: f64,
    /// Peak roll angle over the recovery window, rad; reported only.
    pub theta_roll_max: f64,
    pub peak_cp_excursion: (f64, f64),
    pub peak_cmp_excursion: (f64, f64),
    pub max_zmp_violation: f64,
    /// Largest one-step prediction miss over periods without an unforeseen force.
    pub max_prediction_error: f64,
    pub solver: SolverStats,
}

impl SummaryReport {
    pub fn terminal(&self, axis: Axis) -> &TerminalError {
        match axis {
            Axis::Sagittal => &self.terminal_sagittal,
            Axis::Frontal => &self.terminal_frontal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlywheelDiagnostics {
    pub theta_pitch: Vec<f64>,
    pub rate_pitch: Vec<f64>,
    pub theta_roll: Vec<f64>,
    pub rate_roll: Vec<f64>,
    pub theta_max: f64,
    pub torque_max: f64,
}

/// Advances `(theta, rate)` over `dt` with `theta_ddot = hdot / inertia`,
/// trapezoid rule on both integrals.
pub fn flywheel_step(theta: f64, rate: f64, hdot_start: f64, hdot_end: f64, dt: f64, inertia: f64) -> (f64, f64) {
    let next_rate = rate + 0.5 * dt * (hdot_start + hdot_end) / inertia;
    let next_theta = theta + 0.5 * dt * (rate + next_rate);
    (next_theta, next_rate)
}

/// Angle and rate series from uniformly sampled `hdot`, starting at rest.
pub fn integrate_flywheel(hdot: &[f64], dt: f64, inertia: f64) -> (Vec<f64>, Vec<f64>) {
    let mut theta = Vec::with_capacity(hdot.len());
    let mut rate = Vec::with_capacity(hdot.len());
    let (mut th, mut r) = (0.0, 0.0);
    for (k, &h) in hdot.iter().enumerate() {
        if k > 0 {
            (th, r) = flywheel_step(th, r, hdot[k - 1], h, dt, inertia);
        }
        theta.push(th);
        rate.push(r);
    }
    (theta, rate)
}

/// Recomputes the flywheel angles from the logged `Hdot` columns.
pub fn flywheel_diagnostics(log: &TrajectoryLog, inertia: f64) -> FlywheelDiagnostics {
    let hy = log.column(|r| r.sagittal.hdot);
    let hx = log.column(|r| r.frontal.hdot);
    let (theta_pitch, rate_pitch) = integrate_flywheel(&hy, log.period, inertia);
    let (theta_roll, rate_roll) = integrate_flywheel(&hx, log.period, inertia);
    let theta_max = theta_pitch.iter().chain(&theta_roll).fold(0.0f64, |m, v| m.max(v.abs()));
    let torque_max = hy.iter().chain(&hx).fold(0.0f64, |m, v| m.max(v.abs()));
    FlywheelDiagnostics {
        theta_pitch,
        rate_pitch,
        theta_roll,
        rate_roll,
        theta_max,
        torque_max,
    }
}

fn sample(state: &AxisState, input: AxisInput, f_ext: f64, axis: Axis, params: &ValidatedParams) -> AxisSample {
    let cmp = cmp_from_zmp(state.zmp, state.hdot, params.normal_force(), axis).expect("validated mass and gravity are positive");
    AxisSample {
        com: state.com,
        com_velocity: state.com_velocity(params.omega()),
        cp: state.cp,
        zmp: state.zmp,
        hdot: state.hdot,
        cmp,
        f_ext,
        zmp_rate: input.zmp_rate,
        hddot: input.hddot,
    }
}

fn forecast_at(scenario: &Scenario, k: usize) -> Forecast {
    let t = scenario.period();
    let force = scenario.force_at(k as f64 * t);
    let mut periods = 1;
    while k + periods <= scenario.num_periods() + scenario.params.horizon()
        && scenario.force_at((k + periods) as f64 * t) == force
        && (force.0 != 0.0 || force.1 != 0.0)
    {
        periods += 1;
    }
    Forecast { force, periods }
}

fn prediction_miss(output: &ControlOutput, next: &PlanarState) -> f64 {
    let mut worst = 0.0f64;
    for axis in Axis::BOTH {
        let predicted = match axis {
            Axis::Sagittal => output.predicted_sagittal.first(),
            Axis::Frontal => output.predicted_frontal.first(),
        };
        let Some(p) = predicted else { continue };
        let a = next.axis(axis);
        for (x, y) in p.to_array().iter().zip(a.to_array().iter()) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

/// Runs the episode with solve times left at zero.
pub fn run_scenario(scenario: &Scenario) -> Result<(TrajectoryLog, SummaryReport), ScenarioError> {
    run_scenario_with_clock(scenario, &NullClock)
}

pub fn run_scenario_with_clock(scenario: &Scenario, clock: &dyn Clock) -> Result<(TrajectoryLog, SummaryReport), ScenarioError> {
    scenario.validate()?;
    let log = simulate(scenario, clock)?;
    let report = evaluate_success(&log, scenario);
    Ok((log, report))
}

fn simulate(scenario: &Scenario, clock: &dyn Clock) -> Result<TrajectoryLog, ScenarioError> {
    let params = &scenario.params;
    let t_period = scenario.period();
    let inertia = params.flywheel_inertia();
    let known = scenario.mpc.foreknowledge == Foreknowledge::Known;
    let mut controller = MpcController::new(scenario.mpc, *params)?;
    let models = [
        system_matrices(params, Axis::Sagittal, false),
        system_matrices(params, Axis::Sagittal, true),
        system_matrices(params, Axis::Frontal, false),
        system_matrices(params, Axis::Frontal, true),
    ];

    let periods = scenario.num_periods();
    let mut state = scenario.initial_state();
    let mut rows = Vec::with_capacity(periods + 1);

    for k in 0..=periods {
        let t = k as f64 * t_period;
        state.time = t;
        let forecast = known.then(|| forecast_at(scenario, k));
        let before = clock.now();
        let output = controller.control_step(&state, scenario.steps_remaining(k), forecast.as_ref())?;
        let solve_time = clock.now() - before;

        let injected = apply_disturbance(&state, &scenario.disturbances, t);
        let assumed = match forecast {
            Some(fc) => fc.force,
            None => (state.sagittal.f_ext, state.frontal.f_ext),
        };
        let acting = (injected.state.sagittal.f_ext, injected.state.frontal.f_ext);

        let mut row = LogRow {
            time: t,
            sagittal: sample(&state.sagittal, output.sagittal, acting.0, Axis::Sagittal, params),
            frontal: sample(&state.frontal, output.frontal, acting.1, Axis::Frontal, params),
            theta_pitch: state.flywheel_angle_pitch,
            theta_rate_pitch: state.flywheel_rate_pitch,
            theta_roll: state.flywheel_angle_roll,
            theta_rate_roll: state.flywheel_rate_roll,
            status: output.status,
            iterations: output.iterations,
            horizon: output.horizon,
            objective: output.objective,
            prediction_error: 0.0,
            unforeseen_force: assumed != acting,
            solve_time,
        };

        if k < periods {
            // the force state carries over only while the push continues
            let persist = scenario.disturbances.iter().any(|d| d.active(t + t_period));
            let mut next = injected.state;
            for axis in Axis::BOTH {
                let x = injected.state.axis(axis);
                let u = output.input(axis);
                *next.axis_mut(axis) = match scenario.plant_mode {
                    PlantMode::Matched => discrete_step(x, &u, &models[2 * axis.index() + usize::from(persist)]),
                    PlantMode::Continuous => continuous_step(x, &u, axis, params, t_period, CONTINUOUS_DT, persist),
                };
            }
            (next.flywheel_angle_pitch, next.flywheel_rate_pitch) = flywheel_step(
                state.flywheel_angle_pitch,
                state.flywheel_rate_pitch,
                state.sagittal.hdot,
                next.sagittal.hdot,
                t_period,
                inertia,
            );
            (next.flywheel_angle_roll, next.flywheel_rate_roll) = flywheel_step(
                state.flywheel_angle_roll,
                state.flywheel_rate_roll,
                state.frontal.hdot,
                next.frontal.hdot,
                t_period,
                inertia,
            );
            row.prediction_error = prediction_miss(&output, &next);
            state = next;
        }
        rows.push(row);
    }

    Ok(TrajectoryLog {
        period: t_period,
        rows,
    })
}

/// Success verdict and peak statistics for a finished episode.
pub fn evaluate_success(log: &TrajectoryLog, scenario: &Scenario) -> SummaryReport {
    let region = scenario.region();
    let mut failures = Vec::new();

    let end = scenario.window_end().min(log.len().saturating_sub(1));
    let mut terminal = [TerminalError::default(); 2];
    if let Some(row) = log.rows.get(end) {
        for axis in Axis::BOTH {
            let s = row.axis(axis);
            let r = scenario.mpc.reference(axis);
            let e = TerminalError {
                cp: (s.cp - r).abs(),
                zmp: (s.zmp - r).abs(),
                com: (s.com - r).abs(),
                hdot: s.hdot.abs(),
            };
            if !(e.cp < CP_TOLERANCE) {
                failures.push(FailureReason::CapturePointOffReference { axis, error: e.cp });
            }
            if !(e.zmp < CP_TOLERANCE) {
                failures.push(FailureReason::ZmpOffReference { axis, error: e.zmp });
            }
            if !(e.com < CP_TOLERANCE) {
                failures.push(FailureReason::ComOffReference { axis, error: e.com });
            }
            if !(e.hdot < HDOT_TOLERANCE) {
                failures.push(FailureReason::AngularMomentumRate { axis, hdot: e.hdot });
            }
            terminal[axis.index()] = e;
        }
    }

    let mut max_zmp_violation = 0.0f64;
    let mut peak_cp = (0.0f64, 0.0f64);
    let mut peak_cmp = (0.0f64, 0.0f64);
    let mut peak_hdot = (0.0f64, 0.0f64);
    let mut theta_max = 0.0f64;
    let mut theta_roll_max = 0.0f64;
    let mut max_prediction_error = 0.0f64;
    let mut solver = SolverStats::default();
    for (k, row) in log.rows.iter().enumerate() {
        for axis in Axis::BOTH {
            let s = row.axis(axis);
            max_zmp_violation = max_zmp_violation.max(region.excursion(axis, s.zmp));
        }
        peak_cp.0 = peak_cp.0.max(region.excursion(Axis::Sagittal, row.sagittal.cp));
        peak_cp.1 = peak_cp.1.max(region.excursion(Axis::Frontal, row.frontal.cp));
        peak_cmp.0 = peak_cmp.0.max(region.excursion(Axis::Sagittal, row.sagittal.cmp));
        peak_cmp.1 = peak_cmp.1.max(region.excursion(Axis::Frontal, row.frontal.cmp));
        peak_hdot.0 = peak_hdot.0.max(row.sagittal.hdot.abs());
        peak_hdot.1 = peak_hdot.1.max(row.frontal.hdot.abs());
        // the flywheel keeps its final rate after the window, so angles past it
        // only measure how long the episode runs
        if k <= end {
            theta_max = theta_max.max(row.theta_pitch.abs());
            theta_roll_max = theta_roll_max.max(row.theta_roll.abs());
        }
        if !row.unforeseen_force {
            max_prediction_error = max_prediction_error.max(row.prediction_error);
        }

        solver.solves += 1;
        match row.status {
            QpStatus::Optimal => solver.optimal += 1,
            QpStatus::Infeasible => solver.infeasible += 1,
            QpStatus::MaxIterations => solver.max_iterations += 1,
            QpStatus::Unbounded => solver.unbounded += 1,
        }
        solver.total_iterations += row.iterations;
        solver.peak_iterations = solver.peak_iterations.max(row.iterations);
        solver.total_solve_time += row.solve_time;
        solver.peak_solve_time = solver.peak_solve_time.max(row.solve_time);
    }

    if max_zmp_violation > ZMP_VIOLATION_TOLERANCE {
        failures.push(FailureReason::ZmpOutsideRegion {
            violation: max_zmp_violation,
        });
    }
    if !(theta_max < scenario.params.hip_angle_max) {
        failures.push(FailureReason::HipAngleExceeded { theta: theta_max });
    }

    SummaryReport {
        success: failures.is_empty() && !log.is_empty(),
        failures,
        recovery_end_time: end as f64 * log.period,
        terminal_sagittal: terminal[0],
        terminal_frontal: terminal[1],
        peak_hdot_sagittal: peak_hdot.0,
        peak_hdot_frontal: peak_hdot.1,
        theta_max,
        theta_roll_max,
        peak_cp_excursion: peak_cp,
        peak_cmp_excursion: peak_cmp,
        max_zmp_violation,
        max_prediction_error,
        solver,
    }
}

/// Checks the derived log columns against their defining relations; returns
/// the largest discrepancy.
pub fn log_consistency(log: &TrajectoryLog, params: &ValidatedParams) -> f64 {
    let mut worst = 0.0f64;
    for row in &log.rows {
        for axis in Axis::BOTH {
            let s = row.axis(axis);
            let cmp = cmp_from_zmp(s.zmp, s.hdot, params.normal_force(), axis).unwrap_or(f64::NAN);
            let cp = capture_point(s.com, s.com_velocity, params.omega());
            worst = worst.max((cmp - s.cmp).abs()).max((cp - s.cp).abs());
        }
    }
    worst
}
