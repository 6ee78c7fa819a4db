//! `summary.json`.

use cpmpc_core::sim::{SolverStats, SummaryReport, TerminalError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: Option<String>,
    pub plant: String,
    pub success: bool,
    pub failures: Vec<String>,
    pub periods: usize,
    pub recovery_end_time: f64,
    pub terminal: PerAxis<Terminal>,
    pub peak_hdot: PerAxis<f64>,
    pub theta_max: f64,
    pub theta_roll_max: f64,
    pub peak_cp_excursion: PerAxis<f64>,
    pub peak_cmp_excursion: PerAxis<f64>,
    pub max_zmp_violation: f64,
    pub max_prediction_error: f64,
    pub solver: Solver,
    /// Wall time of the whole episode, s.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerAxis<T> {
    pub sagittal: T,
    pub frontal: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub cp: f64,
    pub zmp: f64,
    pub com: f64,
    pub hdot: f64,
}

impl From<TerminalError> for Terminal {
    fn from(e: TerminalError) -> Self {
        Self {
            cp: e.cp,
            zmp: e.zmp,
            com: e.com,
            hdot: e.hdot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solver {
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

impl From<SolverStats> for Solver {
    fn from(s: SolverStats) -> Self {
        Self {
            solves: s.solves,
            optimal: s.optimal,
            infeasible: s.infeasible,
            max_iterations: s.max_iterations,
            unbounded: s.unbounded,
            total_iterations: s.total_iterations,
            peak_iterations: s.peak_iterations,
            total_solve_time: s.total_solve_time,
            peak_solve_time: s.peak_solve_time,
        }
    }
}

impl Summary {
    pub fn new(report: &SummaryReport, scenario: Option<String>, plant: &str, periods: usize, wall_time: f64) -> Self {
        Self {
            scenario,
            plant: plant.to_string(),
            success: report.success,
            failures: report.failures.iter().map(ToString::to_string).collect(),
            periods,
            recovery_end_time: report.recovery_end_time,
            terminal: PerAxis {
                sagittal: report.terminal_sagittal.into(),
                frontal: report.terminal_frontal.into(),
            },
            peak_hdot: PerAxis {
                sagittal: report.peak_hdot_sagittal,
                frontal: report.peak_hdot_frontal,
            },
            theta_max: report.theta_max,
            theta_roll_max: report.theta_roll_max,
            peak_cp_excursion: PerAxis {
                sagittal: report.peak_cp_excursion.0,
                frontal: report.peak_cp_excursion.1,
            },
            peak_cmp_excursion: PerAxis {
                sagittal: report.peak_cmp_excursion.0,
                frontal: report.peak_cmp_excursion.1,
            },
            max_zmp_violation: report.max_zmp_violation,
            max_prediction_error: report.max_prediction_error,
            solver: report.solver.into(),
            wall_time,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary always serializes")
    }
}
