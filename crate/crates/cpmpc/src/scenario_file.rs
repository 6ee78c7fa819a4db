//! Versioned JSON scenario documents.
//!
//! Every section is optional and falls back to the defaults of
//! [`RobotParams::default`] and [`MpcConfig::new`]; unknown keys are errors.

use std::fmt;
use std::path::Path;

use cpmpc_core::model::{region_from_contact, Contact, Disturbance, LineAxis, RobotParams};
use cpmpc_core::mpc::{Foreknowledge, HorizonMode, MpcWeights};
use cpmpc_core::qp::SolverSettings;
use cpmpc_core::sim::{PlantMode, Scenario, ScenarioError};
use serde::{Deserialize, Serialize};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(serde_json::Error),
    Version(u32),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read scenario: {e}"),
            ConfigError::Parse(e) => write!(f, "malformed scenario: {e}"),
            ConfigError::Version(v) => write!(f, "unsupported scenario version {v}, expected {SCENARIO_VERSION}"),
            ConfigError::Invalid(msg) => write!(f, "invalid scenario: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<ScenarioError> for ConfigError {
    fn from(e: ScenarioError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub robot: RobotSection,
    #[serde(default)]
    pub contact: ContactSection,
    #[serde(default)]
    pub weights: WeightsSection,
    #[serde(default)]
    pub disturbances: Vec<DisturbanceSection>,
    #[serde(default)]
    pub mpc: MpcSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotSection {
    pub mass: f64,
    pub com_height: f64,
    pub gravity: f64,
    pub foot_length: f64,
    pub foot_width: f64,
    pub trunk_inertia: f64,
    pub arm_inertia: f64,
    pub hdot_max: f64,
    pub hip_angle_max: f64,
    pub control_period: f64,
    pub recovery_time: f64,
}

impl Default for RobotSection {
    fn default() -> Self {
        RobotParams::default().into()
    }
}

impl From<RobotParams> for RobotSection {
    fn from(p: RobotParams) -> Self {
        Self {
            mass: p.mass,
            com_height: p.com_height,
            gravity: p.gravity,
            foot_length: p.foot_length,
            foot_width: p.foot_width,
            trunk_inertia: p.trunk_inertia,
            arm_inertia: p.arm_inertia,
            hdot_max: p.hdot_max,
            hip_angle_max: p.hip_angle_max,
            control_period: p.control_period,
            recovery_time: p.recovery_time,
        }
    }
}

impl From<RobotSection> for RobotParams {
    fn from(r: RobotSection) -> Self {
        Self {
            mass: r.mass,
            com_height: r.com_height,
            gravity: r.gravity,
            foot_length: r.foot_length,
            foot_width: r.foot_width,
            trunk_inertia: r.trunk_inertia,
            arm_inertia: r.arm_inertia,
            hdot_max: r.hdot_max,
            hip_angle_max: r.hip_angle_max,
            control_period: r.control_period,
            recovery_time: r.recovery_time,
        }
    }
}

pub const DEFAULT_STANCE_WIDTH: f64 = 0.2;

fn default_stance_width() -> f64 {
    DEFAULT_STANCE_WIDTH
}

/// Foot dimensions left out are taken from the robot section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContactSection {
    DoubleSupport {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "default_stance_width")]
        stance_width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        foot_length: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        foot_width: Option<f64>,
    },
    SingleFoot {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        foot_length: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        foot_width: Option<f64>,
    },
    Line {
        #[serde(default)]
        center: [f64; 2],
        axis: LineAxisName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<f64>,
    },
    Point {
        #[serde(default)]
        at: [f64; 2],
    },
}

impl Default for ContactSection {
    fn default() -> Self {
        ContactSection::DoubleSupport {
            center: [0.0, 0.0],
            stance_width: DEFAULT_STANCE_WIDTH,
            foot_length: None,
            foot_width: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineAxisName {
    X,
    Y,
}

impl ContactSection {
    pub fn to_contact(&self, robot: &RobotParams) -> Contact {
        let pt = |p: [f64; 2]| (p[0], p[1]);
        match *self {
            ContactSection::DoubleSupport {
                center,
                stance_width,
                foot_length,
                foot_width,
            } => Contact::DoubleSupport {
                center: pt(center),
                foot_length: foot_length.unwrap_or(robot.foot_length),
                foot_width: foot_width.unwrap_or(robot.foot_width),
                stance_width,
            },
            ContactSection::SingleFoot {
                center,
                foot_length,
                foot_width,
            } => Contact::SingleFoot {
                center: pt(center),
                foot_length: foot_length.unwrap_or(robot.foot_length),
                foot_width: foot_width.unwrap_or(robot.foot_width),
            },
            ContactSection::Line { center, axis, length } => Contact::Line {
                center: pt(center),
                axis: match axis {
                    LineAxisName::X => LineAxis::X,
                    LineAxisName::Y => LineAxis::Y,
                },
                length: length.unwrap_or(match axis {
                    LineAxisName::X => robot.foot_length,
                    LineAxisName::Y => robot.foot_width,
                }),
            },
            ContactSection::Point { at } => Contact::Point { at: pt(at) },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsSection {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub alpha5: f64,
    pub alpha6: f64,
    pub alpha7: f64,
    pub alpha8: f64,
}

impl Default for WeightsSection {
    fn default() -> Self {
        let [alpha1, alpha2, alpha3, alpha4, alpha5, alpha6, alpha7, alpha8] = MpcWeights::default().alphas();
        Self {
            alpha1,
            alpha2,
            alpha3,
            alpha4,
            alpha5,
            alpha6,
            alpha7,
            alpha8,
        }
    }
}

impl WeightsSection {
    pub fn to_weights(&self) -> MpcWeights {
        MpcWeights::from_alphas([
            self.alpha1,
            self.alpha2,
            self.alpha3,
            self.alpha4,
            self.alpha5,
            self.alpha6,
            self.alpha7,
            self.alpha8,
        ])
    }
}

pub const DEFAULT_PUSH_START: f64 = 0.1;
pub const DEFAULT_PUSH_DURATION: f64 = 0.05;

fn default_push_start() -> f64 {
    DEFAULT_PUSH_START
}

fn default_push_duration() -> f64 {
    DEFAULT_PUSH_DURATION
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    /// N, applied at the CoM.
    pub force: [f64; 2],
    #[serde(default = "default_push_start")]
    pub start_time: f64,
    #[serde(default = "default_push_duration")]
    pub duration: f64,
}

impl From<DisturbanceSection> for Disturbance {
    fn from(d: DisturbanceSection) -> Self {
        Disturbance {
            start_time: d.start_time,
            duration: d.duration,
            force_x: d.force[0],
            force_y: d.force[1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PlantName {
    #[default]
    Matched,
    Continuous,
}

impl From<PlantName> for PlantMode {
    fn from(p: PlantName) -> Self {
        match p {
            PlantName::Matched => PlantMode::Matched,
            PlantName::Continuous => PlantMode::Continuous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HorizonName {
    #[default]
    Shrinking,
    Receding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForeknowledgeName {
    #[default]
    Reactive,
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcSection {
    pub horizon_mode: HorizonName,
    pub foreknowledge: ForeknowledgeName,
    pub hdot_bound: bool,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    /// Defaults to the support region center.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cp_ref: Option<[f64; 2]>,
    pub plant: PlantName,
    /// Defaults to the end of the recovery window plus half a second.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episode_duration: Option<f64>,
    /// Defaults to the first push start.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovery_start: Option<f64>,
}

impl Default for MpcSection {
    fn default() -> Self {
        let solver = SolverSettings::default();
        Self {
            horizon_mode: HorizonName::default(),
            foreknowledge: ForeknowledgeName::default(),
            hdot_bound: true,
            tolerance: solver.tol,
            max_iterations: solver.max_iter,
            cp_ref: None,
            plant: PlantName::default(),
            episode_duration: None,
            recovery_start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            formats: default_formats(),
        }
    }
}

impl ScenarioFile {
    /// Reference robot in double support, no pushes.
    pub fn new() -> Self {
        Self {
            version: SCENARIO_VERSION,
            name: None,
            robot: RobotSection::default(),
            contact: ContactSection::default(),
            weights: WeightsSection::default(),
            disturbances: Vec::new(),
            mpc: MpcSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(ConfigError::Parse)?;
        if file.version != SCENARIO_VERSION {
            return Err(ConfigError::Version(file.version));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario documents always serialize")
    }

    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        let robot: RobotParams = self.robot.into();
        let contact = self.contact.to_contact(&robot);
        let disturbances = self.disturbances.iter().map(|d| Disturbance::from(*d)).collect();
        let mut scenario = Scenario::new(robot, contact, Vec::new())?;
        scenario.disturbances = disturbances;
        scenario.recovery_start = self.mpc.recovery_start;
        scenario.plant_mode = self.mpc.plant.into();

        let region = region_from_contact(&contact).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let mpc = &mut scenario.mpc;
        mpc.weights = self.weights.to_weights();
        if let Some([x, y]) = self.mpc.cp_ref {
            mpc.cp_ref = (x, y);
        } else {
            mpc.cp_ref = region.center();
        }
        mpc.horizon_mode = match self.mpc.horizon_mode {
            HorizonName::Shrinking => HorizonMode::Shrinking,
            HorizonName::Receding => HorizonMode::Receding,
        };
        mpc.foreknowledge = match self.mpc.foreknowledge {
            ForeknowledgeName::Reactive => Foreknowledge::Reactive,
            ForeknowledgeName::Known => Foreknowledge::Known,
        };
        mpc.hdot_bound_enabled = self.mpc.hdot_bound;
        if !(self.mpc.tolerance > 0.0 && self.mpc.tolerance.is_finite()) {
            return Err(ConfigError::Invalid(format!("mpc.tolerance must be positive, got {}", self.mpc.tolerance)));
        }
        mpc.solver.tol = self.mpc.tolerance;
        mpc.solver.max_iter = self.mpc.max_iterations;

        scenario.episode_duration = self
            .mpc
            .episode_duration
            .unwrap_or_else(|| scenario.window_end_time() + cpmpc_core::sim::DEFAULT_SETTLE_TIME);
        scenario.validate()?;
        Ok(scenario)
    }
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self::new()
    }
}
