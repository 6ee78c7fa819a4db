//! Push-recovery MPC: condensed prediction, quadratic cost, terminal and ZMP
//! constraints, and the per-period controller.
//!
//! Decision vector layout: `[U_x; U_y]`, each axis block interleaving
//! `(p_dot_k, Hddot_k)` for `k = 0..N`.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{state_from_vector, state_vector, system_matrices, AxisInput, DiscreteModel};
use crate::model::{Axis, AxisState, PlanarState, SupportRegion, ValidatedParams};
use crate::qp::{QpError, QpProblem, QpSolution, QpSolver, QpStatus, SolverSettings};

const NX: usize = AxisState::DIM;
const NU: usize = 2;

const COM: usize = 0;
const CP: usize = 1;
const ZMP: usize = 2;
const HDOT: usize = 3;
const FEXT: usize = 4;

/// Cost weights of one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisWeights {
    /// CP tracking, 1/m.
    pub cp: f64,
    /// Angular momentum acceleration effort, s/(N m).
    pub hddot: f64,
    /// ZMP rate, s/m.
    pub zmp_rate: f64,
    /// Angular momentum rate magnitude, 1/(N m).
    pub hdot: f64,
}

/// The eight cost weights, grouped by axis.
///
/// Sagittal takes `alpha1..alpha4` (CP x, Hddot_y, p_dot x, Hdot_y) and
/// frontal `alpha5..alpha8` (CP y, Hddot_x, p_dot y, Hdot_x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcWeights {
    pub sagittal: AxisWeights,
    pub frontal: AxisWeights,
}

impl MpcWeights {
    pub fn from_alphas(a: [f64; 8]) -> Self {
        Self {
            sagittal: AxisWeights {
                cp: a[0],
                hddot: a[1],
                zmp_rate: a[2],
                hdot: a[3],
            },
            frontal: AxisWeights {
                cp: a[4],
                hddot: a[5],
                zmp_rate: a[6],
                hdot: a[7],
            },
        }
    }

    pub fn alphas(&self) -> [f64; 8] {
        let (s, f) = (self.sagittal, self.frontal);
        [s.cp, s.hddot, s.zmp_rate, s.hdot, f.cp, f.hddot, f.zmp_rate, f.hdot]
    }

    pub fn axis(&self, axis: Axis) -> &AxisWeights {
        match axis {
            Axis::Sagittal => &self.sagittal,
            Axis::Frontal => &self.frontal,
        }
    }

    pub fn validate(&self) -> Result<(), MpcError> {
        let a = self.alphas();
        if a.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(MpcError::InvalidWeights);
        }
        if !(self.sagittal.cp > 0.0 && self.frontal.cp > 0.0) {
            return Err(MpcError::InvalidWeights);
        }
        Ok(())
    }
}

impl Default for MpcWeights {
    fn default() -> Self {
        Self::from_alphas([1.0, 3.0, 1e-6, 1e-3, 1.0, 1.0, 1e-6, 1e-3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HorizonMode {
    /// Terminal time fixed at the end of the recovery window.
    #[default]
    Shrinking,
    Receding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Foreknowledge {
    /// Only the force measured now enters the prediction, for one step.
    #[default]
    Reactive,
    /// The scheduled push is known for as long as it stays constant.
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcConfig {
    pub weights: MpcWeights,
    pub region: SupportRegion,
    pub cp_ref: (f64, f64),
    pub horizon_mode: HorizonMode,
    pub hdot_bound_enabled: bool,
    pub foreknowledge: Foreknowledge,
    pub solver: SolverSettings,
}

impl MpcConfig {
    /// Reference at the region center, everything else default.
    pub fn new(region: SupportRegion) -> Self {
        Self {
            weights: MpcWeights::default(),
            region,
            cp_ref: region.center(),
            horizon_mode: HorizonMode::default(),
            hdot_bound_enabled: true,
            foreknowledge: Foreknowledge::default(),
            solver: SolverSettings::default(),
        }
    }

    pub fn reference(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Sagittal => self.cp_ref.0,
            Axis::Frontal => self.cp_ref.1,
        }
    }

    pub fn validate(&self) -> Result<(), MpcError> {
        self.weights.validate()?;
        if !self.region.contains(self.cp_ref, 0.0) {
            return Err(MpcError::ReferenceOutsideRegion);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MpcError {
    InvalidWeights,
    ReferenceOutsideRegion,
    HorizonTooShort(usize),
    DimensionMismatch,
    Qp(QpError),
}

impl fmt::Display for MpcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MpcError::InvalidWeights => {
                f.write_str("weights must be finite and non-negative, CP weights positive")
            }
            MpcError::ReferenceOutsideRegion => f.write_str("CP reference lies outside the support region"),
            MpcError::HorizonTooShort(n) => write!(f, "horizon of {n} steps is too short"),
            MpcError::DimensionMismatch => f.write_str("prediction horizons differ between axes"),
            MpcError::Qp(e) => write!(f, "QP: {e}"),
        }
    }
}

impl core::error::Error for MpcError {}

impl From<QpError> for MpcError {
    fn from(e: QpError) -> Self {
        MpcError::Qp(e)
    }
}

/// Stacked prediction `X_hat = state_map x0 + input_map U_hat` over `N` steps,
/// with `X_hat = [X_1; ...; X_N]` and `U_hat = [U_0; ...; U_{N-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonPlan {
    pub horizon: usize,
    /// `5N x 5`
    pub state_map: DMatrix<f64>,
    /// `5N x 2N`
    pub input_map: DMatrix<f64>,
    pub mu_schedule: Vec<bool>,
    pub x0: AxisState,
    /// `state_map x0`
    pub free_response: DVector<f64>,
}

impl HorizonPlan {
    /// Row of the input map for `component` of state `X_{k+1}`.
    fn input_row(&self, k: usize, component: usize) -> DVector<f64> {
        self.input_map.row(NX * k + component).transpose()
    }

    fn free(&self, k: usize, component: usize) -> f64 {
        self.free_response[NX * k + component]
    }

    /// Predicted states for the given axis input block.
    pub fn predict(&self, inputs: &DVector<f64>) -> Vec<AxisState> {
        let x = &self.free_response + &self.input_map * inputs;
        (0..self.horizon)
            .map(|k| AxisState::from_array(core::array::from_fn(|c| x[NX * k + c])))
            .collect()
    }
}

fn model_with_mu(model: &DiscreteModel, mu: bool) -> nalgebra::SMatrix<f64, 5, 5> {
    let mut a = model.a;
    a[(FEXT, FEXT)] = if mu { 1.0 } else { 0.0 };
    a
}

/// Condenses `N` steps of the model into one affine map of the inputs.
///
/// Step `k` uses the model's `A` with the disturbance gate set to
/// `mu_schedule[k]`; missing entries count as `false`.
pub fn build_prediction(
    model: &DiscreteModel,
    x0: &AxisState,
    horizon: usize,
    mu_schedule: &[bool],
) -> Result<HorizonPlan, MpcError> {
    if horizon == 0 {
        return Err(MpcError::HorizonTooShort(horizon));
    }
    let mu: Vec<bool> = (0..horizon).map(|k| mu_schedule.get(k).copied().unwrap_or(false)).collect();
    let mut state_map = DMatrix::zeros(NX * horizon, NX);
    let mut input_map = DMatrix::zeros(NX * horizon, NU * horizon);

    let mut power = nalgebra::SMatrix::<f64, 5, 5>::identity();
    for k in 0..horizon {
        let a_k = model_with_mu(model, mu[k]);
        power = a_k * power;
        state_map.view_mut((NX * k, 0), (NX, NX)).copy_from(&power);
        if k > 0 {
            for i in 0..k {
                let prev = input_map.view((NX * (k - 1), NU * i), (NX, NU)).into_owned();
                input_map.view_mut((NX * k, NU * i), (NX, NU)).copy_from(&(a_k * prev));
            }
        }
        input_map.view_mut((NX * k, NU * k), (NX, NU)).copy_from(&model.b);
    }
    let free_response = &state_map * DVector::from_column_slice(state_vector(x0).as_slice());
    Ok(HorizonPlan {
        horizon,
        state_map,
        input_map,
        mu_schedule: mu,
        x0: *x0,
        free_response,
    })
}

/// Quadratic form `1/2 U'HU + U'f + constant` of the cost over both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    pub constant: f64,
}

impl QuadraticCost {
    pub fn evaluate(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.hessian * u)) + u.dot(&self.gradient) + self.constant
    }
}

fn axis_offset(axis: Axis, horizon: usize) -> usize {
    axis.index() * NU * horizon
}

fn add_tracking_term(
    cost: &mut QuadraticCost,
    plan: &HorizonPlan,
    offset: usize,
    component: usize,
    weight: f64,
    target: f64,
) {
    if weight == 0.0 {
        return;
    }
    let n = NU * plan.horizon;
    let mut hess = DMatrix::zeros(n, n);
    let mut grad = DVector::zeros(n);
    for k in 0..plan.horizon {
        let g = plan.input_row(k, component);
        let r = plan.free(k, component) - target;
        hess.ger(1.0, &g, &g, 1.0);
        grad.axpy(r, &g, 1.0);
        cost.constant += weight * r * r;
    }
    let mut block = cost.hessian.view_mut((offset, offset), (n, n));
    block += hess * (2.0 * weight);
    let mut g = cost.gradient.rows_mut(offset, n);
    g += grad * (2.0 * weight);
}

/// Sum over the horizon of CP tracking, Hddot effort, ZMP rate and Hdot
/// magnitude terms for both axes, as a quadratic form in the inputs.
pub fn build_cost(
    plan_x: &HorizonPlan,
    plan_y: &HorizonPlan,
    weights: &MpcWeights,
    cp_ref: (f64, f64),
) -> Result<QuadraticCost, MpcError> {
    if plan_x.horizon != plan_y.horizon {
        return Err(MpcError::DimensionMismatch);
    }
    let horizon = plan_x.horizon;
    let n = 2 * NU * horizon;
    let mut cost = QuadraticCost {
        hessian: DMatrix::zeros(n, n),
        gradient: DVector::zeros(n),
        constant: 0.0,
    };
    for (axis, plan, target) in [(Axis::Sagittal, plan_x, cp_ref.0), (Axis::Frontal, plan_y, cp_ref.1)] {
        let w = weights.axis(axis);
        let off = axis_offset(axis, horizon);
        add_tracking_term(&mut cost, plan, off, CP, w.cp, target);
        add_tracking_term(&mut cost, plan, off, HDOT, w.hdot, 0.0);
        for k in 0..horizon {
            cost.hessian[(off + NU * k, off + NU * k)] += 2.0 * w.zmp_rate;
            cost.hessian[(off + NU * k + 1, off + NU * k + 1)] += 2.0 * w.hddot;
        }
    }
    // exact symmetry for the solver's check
    let sym = (&cost.hessian + cost.hessian.transpose()) * 0.5;
    cost.hessian = sym;
    Ok(cost)
}

/// Inequality row layout: `[ZMP x, ZMP y, Hdot x, Hdot y]`, each block
/// `2N` rows ordered by step then `(upper, lower)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowLayout {
    pub horizon: usize,
    pub hdot_bounds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Zmp,
    Hdot,
}

impl RowLayout {
    pub fn num_rows(&self) -> usize {
        let per_kind = 2 * 2 * self.horizon;
        if self.hdot_bounds {
            2 * per_kind
        } else {
            per_kind
        }
    }

    pub fn index(&self, kind: BoundKind, axis: Axis, step: usize, lower: bool) -> usize {
        let kind_off = match kind {
            BoundKind::Zmp => 0,
            BoundKind::Hdot => 4 * self.horizon,
        };
        kind_off + axis.index() * 2 * self.horizon + 2 * step + usize::from(lower)
    }

    pub fn decode(&self, row: usize) -> Option<(BoundKind, Axis, usize, bool)> {
        if row >= self.num_rows() {
            return None;
        }
        let per_kind = 4 * self.horizon;
        let kind = if row < per_kind { BoundKind::Zmp } else { BoundKind::Hdot };
        let r = row % per_kind;
        let axis = if r < 2 * self.horizon { Axis::Sagittal } else { Axis::Frontal };
        let r = r % (2 * self.horizon);
        Some((kind, axis, r / 2, r % 2 == 1))
    }

    /// Maps active rows of a previous solve one step forward onto `next`.
    pub fn shift_rows(&self, rows: &[usize], next: &RowLayout) -> Vec<usize> {
        rows.iter()
            .filter_map(|&row| {
                let (kind, axis, step, lower) = self.decode(row)?;
                if step == 0 || (kind == BoundKind::Hdot && !next.hdot_bounds) {
                    return None;
                }
                let step = step - 1;
                (step < next.horizon).then(|| next.index(kind, axis, step, lower))
            })
            .collect()
    }
}

/// `C U + D = 0` and `E U + F <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraints {
    pub eq_matrix: DMatrix<f64>,
    pub eq_offset: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_offset: DVector<f64>,
    pub layout: RowLayout,
}

/// Terminal equalities (CP, CoM and ZMP at the reference, Hdot zero; rows
/// `4 * axis + [cp, com, zmp, hdot]`) and per-step ZMP and Hdot bounds.
pub fn build_constraints(
    plan_x: &HorizonPlan,
    plan_y: &HorizonPlan,
    config: &MpcConfig,
    hdot_max: f64,
) -> Result<LinearConstraints, MpcError> {
    if plan_x.horizon != plan_y.horizon {
        return Err(MpcError::DimensionMismatch);
    }
    let horizon = plan_x.horizon;
    let n = 2 * NU * horizon;
    let layout = RowLayout {
        horizon,
        hdot_bounds: config.hdot_bound_enabled,
    };

    let mut eq_matrix = DMatrix::zeros(8, n);
    let mut eq_offset = DVector::zeros(8);
    let mut ineq_matrix = DMatrix::zeros(layout.num_rows(), n);
    let mut ineq_offset = DVector::zeros(layout.num_rows());

    for (axis, plan) in [(Axis::Sagittal, plan_x), (Axis::Frontal, plan_y)] {
        let off = axis_offset(axis, horizon);
        let target = config.reference(axis);
        let last = horizon - 1;
        for (slot, (component, value)) in [(CP, target), (COM, target), (ZMP, target), (HDOT, 0.0)]
            .into_iter()
            .enumerate()
        {
            let row = 4 * axis.index() + slot;
            eq_matrix
                .view_mut((row, off), (1, NU * horizon))
                .copy_from(&plan.input_row(last, component).transpose());
            eq_offset[row] = plan.free(last, component) - value;
        }

        let (lo, hi) = config.region.bounds(axis);
        let mut bound = |kind: BoundKind, component: usize, lo: f64, hi: f64| {
            for k in 0..horizon {
                let g = plan.input_row(k, component).transpose();
                let free = plan.free(k, component);
                let up = layout.index(kind, axis, k, false);
                let dn = layout.index(kind, axis, k, true);
                ineq_matrix.view_mut((up, off), (1, NU * horizon)).copy_from(&g);
                ineq_offset[up] = free - hi;
                ineq_matrix.view_mut((dn, off), (1, NU * horizon)).copy_from(&(-g));
                ineq_offset[dn] = -free + lo;
            }
        };
        bound(BoundKind::Zmp, ZMP, lo, hi);
        if config.hdot_bound_enabled {
            bound(BoundKind::Hdot, HDOT, -hdot_max, hdot_max);
        }
    }

    Ok(LinearConstraints {
        eq_matrix,
        eq_offset,
        ineq_matrix,
        ineq_offset,
        layout,
    })
}

/// Horizon length for this solve.
pub fn shrink_horizon(steps_remaining: usize, mode: HorizonMode, full_horizon: usize) -> usize {
    match mode {
        HorizonMode::Shrinking => steps_remaining.max(2),
        HorizonMode::Receding => full_horizon,
    }
}

/// Force the controller is told about, in [`Foreknowledge::Known`] mode.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Forecast {
    pub force: (f64, f64),
    /// Periods, counting the current one, over which `force` stays applied.
    pub periods: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub sagittal: AxisInput,
    pub frontal: AxisInput,
    /// Predicted `X_1..X_N` per axis under the optimal inputs.
    pub predicted_sagittal: Vec<AxisState>,
    pub predicted_frontal: Vec<AxisState>,
    pub status: QpStatus,
    pub objective: f64,
    pub iterations: usize,
    pub horizon: usize,
}

impl ControlOutput {
    pub fn input(&self, axis: Axis) -> AxisInput {
        match axis {
            Axis::Sagittal => self.sagittal,
            Axis::Frontal => self.frontal,
        }
    }
}

/// Everything assembled for one solve; exposed for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledProblem {
    pub plan_x: HorizonPlan,
    pub plan_y: HorizonPlan,
    pub cost: QuadraticCost,
    pub constraints: LinearConstraints,
    pub qp: QpProblem,
}

/// Builds the full QP for `state` over `horizon` steps.
pub fn assemble(
    state: &PlanarState,
    config: &MpcConfig,
    params: &ValidatedParams,
    horizon: usize,
    forecast: Option<&Forecast>,
) -> Result<AssembledProblem, MpcError> {
    if horizon < 1 {
        return Err(MpcError::HorizonTooShort(horizon));
    }
    let mut plans = Vec::with_capacity(2);
    for axis in Axis::BOTH {
        let model = system_matrices(params, axis, true);
        let mut x0 = *state.axis(axis);
        let mu: Vec<bool> = match (config.foreknowledge, forecast) {
            (Foreknowledge::Known, Some(fc)) => {
                x0.f_ext = match axis {
                    Axis::Sagittal => fc.force.0,
                    Axis::Frontal => fc.force.1,
                };
                (0..horizon).map(|k| k + 1 < fc.periods).collect()
            }
            _ => alloc::vec![false; horizon],
        };
        plans.push(build_prediction(&model, &x0, horizon, &mu)?);
    }
    let plan_y = plans.pop().expect("two plans");
    let plan_x = plans.pop().expect("two plans");
    let cost = build_cost(&plan_x, &plan_y, &config.weights, config.cp_ref)?;
    let constraints = build_constraints(&plan_x, &plan_y, config, params.hdot_max)?;
    let qp = QpProblem {
        hessian: cost.hessian.clone(),
        gradient: cost.gradient.clone(),
        eq_matrix: constraints.eq_matrix.clone(),
        eq_offset: constraints.eq_offset.clone(),
        ineq_matrix: constraints.ineq_matrix.clone(),
        ineq_offset: constraints.ineq_offset.clone(),
    };
    Ok(AssembledProblem {
        plan_x,
        plan_y,
        cost,
        constraints,
        qp,
    })
}

/// Stateful controller; carries the previous active set for warm starts.
#[derive(Debug, Clone)]
pub struct MpcController {
    config: MpcConfig,
    params: ValidatedParams,
    solver: QpSolver,
    last_layout: Option<RowLayout>,
}

impl MpcController {
    pub fn new(config: MpcConfig, params: ValidatedParams) -> Result<Self, MpcError> {
        config.validate()?;
        Ok(Self {
            solver: QpSolver::new(config.solver),
            config,
            params,
            last_layout: None,
        })
    }

    pub fn config(&self) -> &MpcConfig {
        &self.config
    }

    pub fn params(&self) -> &ValidatedParams {
        &self.params
    }

    /// Solves one period and returns the first input pair of each axis.
    ///
    /// A non-optimal QP yields zero inputs with the status reported; the
    /// constraints are never softened.
    pub fn control_step(
        &mut self,
        state: &PlanarState,
        steps_remaining: usize,
        forecast: Option<&Forecast>,
    ) -> Result<ControlOutput, MpcError> {
        let horizon = shrink_horizon(steps_remaining, self.config.horizon_mode, self.params.horizon());
        if horizon < 2 {
            return Err(MpcError::HorizonTooShort(horizon));
        }
        let problem = assemble(state, &self.config, &self.params, horizon, forecast)?;

        let layout = problem.constraints.layout;
        let hint = match self.last_layout {
            Some(prev) => prev.shift_rows(self.solver.hint(), &layout),
            None => Vec::new(),
        };
        self.solver.set_hint(hint);
        let solution = self.solver.solve(&problem.qp)?;
        self.last_layout = Some(layout);

        Ok(output_from(&problem, &solution))
    }
}

fn output_from(problem: &AssembledProblem, solution: &QpSolution) -> ControlOutput {
    let horizon = problem.plan_x.horizon;
    let n = NU * horizon;
    let optimal = solution.status == QpStatus::Optimal;
    let u = if optimal {
        solution.u.clone()
    } else {
        DVector::zeros(2 * n)
    };
    let ux = u.rows(0, n).into_owned();
    let uy = u.rows(n, n).into_owned();
    ControlOutput {
        sagittal: AxisInput::new(ux[0], ux[1]),
        frontal: AxisInput::new(uy[0], uy[1]),
        predicted_sagittal: problem.plan_x.predict(&ux),
        predicted_frontal: problem.plan_y.predict(&uy),
        status: solution.status,
        objective: solution.objective + if optimal { problem.cost.constant } else { 0.0 },
        iterations: solution.iterations,
        horizon,
    }
}

/// Convenience wrapper for one-shot use.
pub fn control_step(
    state: &PlanarState,
    config: &MpcConfig,
    params: &ValidatedParams,
    steps_remaining: usize,
) -> Result<ControlOutput, MpcError> {
    MpcController::new(*config, *params)?.control_step(state, steps_remaining, None)
}

/// Iterated single steps, for cross-checking the condensed map.
pub fn simulate_inputs(model: &DiscreteModel, x0: &AxisState, inputs: &[AxisInput], mu_schedule: &[bool]) -> Vec<AxisState> {
    let mut x = state_vector(x0);
    let mut out = Vec::with_capacity(inputs.len());
    for (k, u) in inputs.iter().enumerate() {
        let mut m = *model;
        m.a = model_with_mu(model, mu_schedule.get(k).copied().unwrap_or(false));
        x = m.step_vector(&x, u);
        out.push(state_from_vector(&x));
    }
    out
}
