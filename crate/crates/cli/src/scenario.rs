//! Scenario files: TOML with `[plant]`, `[controller]`, `[trajectory]`,
//! `[scheduling]` and `[sim]` sections. Angles are in degrees. Missing keys
//! take the reference values and are listed in [`Scenario::defaults_applied`].

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use qsrgs_core::robot_sim::{Trajectory, LINEARIZATION_POINTS_DEG, WAYPOINT_ANGLES_DEG, WAYPOINT_TIMES};
use qsrgs_core::synthesis::{LqrWeights, PlantModel, JOINTS};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    plant: RawPlant,
    #[serde(default)]
    controller: RawController,
    #[serde(default)]
    trajectory: RawTrajectory,
    #[serde(default)]
    scheduling: RawScheduling,
    #[serde(default)]
    sim: RawSim,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlant {
    length: Option<[f64; JOINTS]>,
    measured_length: Option<[f64; JOINTS]>,
    mass: Option<[f64; JOINTS]>,
    measured_mass: Option<[f64; JOINTS]>,
    damping_coefficient: Option<[f64; JOINTS]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawController {
    proportional_gain: Option<[f64; JOINTS]>,
    linearization_points_deg: Option<Vec<[f64; JOINTS]>>,
    lqr_state_weight_bryson: Option<[f64; 2 * JOINTS]>,
    lqr_input_weight_bryson: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrajectory {
    discrete_time_points: Option<Vec<f64>>,
    desired_joint_angles_deg: Option<Vec<[f64; JOINTS]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheduling {
    mode: Option<Mode>,
    family_files: Option<Vec<PathBuf>>,
    unscheduled_controller: Option<usize>,
    rate_feedforward: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: Option<f64>,
    horizon: Option<f64>,
    output_dir: Option<PathBuf>,
}

/// How the controller bank is scheduled in a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Prewrap only, no controllers.
    None,
    /// A single subcontroller, always on.
    Unscheduled,
    Scalar,
    Matrix,
    /// Families read from `family_files`.
    File,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::None => "none",
            Mode::Unscheduled => "unscheduled",
            Mode::Scalar => "scalar",
            Mode::Matrix => "matrix",
            Mode::File => "file",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub path: PathBuf,
    pub model: PlantModel,
    pub weights: LqrWeights,
    /// Linearization points (rad).
    pub points: Vec<[f64; JOINTS]>,
    pub points_deg: Vec<[f64; JOINTS]>,
    pub trajectory: Trajectory,
    pub mode: Mode,
    /// Resolved against the scenario directory.
    pub family_files: Vec<PathBuf>,
    /// 1-based index of the controller used in unscheduled runs.
    pub unscheduled_controller: usize,
    pub rate_feedforward: bool,
    pub dt: f64,
    pub horizon: f64,
    pub output_dir: PathBuf,
    /// Keys that were missing and took their reference value.
    pub defaults_applied: Vec<String>,
}

fn or_default<T: std::fmt::Debug>(v: Option<T>, key: &str, default: T, notes: &mut Vec<String>) -> T {
    v.unwrap_or_else(|| {
        notes.push(format!("{key} not given, using {default:?}"));
        default
    })
}

fn positive(key: &str, vals: &[f64]) -> Result<(), CliError> {
    match vals.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        Some(v) => Err(CliError::config(format!("{key}: entries must be positive, got {v}"))),
        None => Ok(()),
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::resolve(raw, path).map_err(|e| match e {
            CliError::Config(msg) => CliError::config(format!("{}: {msg}", path.display())),
            e => e,
        })
    }

    fn resolve(raw: RawScenario, path: &Path) -> Result<Self, CliError> {
        let mut notes = Vec::new();
        let reference = PlantModel::default();
        let p = raw.plant;
        let model = PlantModel {
            length: or_default(p.length, "[plant] length", reference.length, &mut notes),
            measured_length: or_default(
                p.measured_length,
                "[plant] measured_length",
                reference.measured_length,
                &mut notes,
            ),
            mass: or_default(p.mass, "[plant] mass", reference.mass, &mut notes),
            measured_mass: or_default(
                p.measured_mass,
                "[plant] measured_mass",
                reference.measured_mass,
                &mut notes,
            ),
            damping: or_default(
                p.damping_coefficient,
                "[plant] damping_coefficient",
                reference.damping,
                &mut notes,
            ),
            proportional_gain: or_default(
                raw.controller.proportional_gain,
                "[controller] proportional_gain",
                reference.proportional_gain,
                &mut notes,
            ),
        };
        positive("[plant] length", &model.length)?;
        positive("[plant] measured_length", &model.measured_length)?;
        positive("[plant] mass", &model.mass)?;
        positive("[plant] measured_mass", &model.measured_mass)?;
        positive("[plant] damping_coefficient", &model.damping)?;
        positive("[controller] proportional_gain", &model.proportional_gain)?;

        let c = raw.controller;
        let reference = LqrWeights::default();
        let weights = LqrWeights {
            state_bryson: or_default(
                c.lqr_state_weight_bryson,
                "[controller] lqr_state_weight_bryson",
                reference.state_bryson,
                &mut notes,
            ),
            input_bryson: or_default(
                c.lqr_input_weight_bryson,
                "[controller] lqr_input_weight_bryson",
                reference.input_bryson,
                &mut notes,
            ),
        };
        positive("[controller] lqr_state_weight_bryson", &weights.state_bryson)?;
        positive("[controller] lqr_input_weight_bryson", &weights.input_bryson)?;
        let points_deg = or_default(
            c.linearization_points_deg,
            "[controller] linearization_points_deg",
            LINEARIZATION_POINTS_DEG.to_vec(),
            &mut notes,
        );
        if points_deg.is_empty() {
            return Err(CliError::config(
                "[controller] linearization_points_deg: at least one point is required",
            ));
        }
        if points_deg.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CliError::config(
                "[controller] linearization_points_deg: entries must be finite",
            ));
        }
        let points = points_deg.iter().map(|p| p.map(f64::to_radians)).collect();

        let t = raw.trajectory;
        let times = or_default(
            t.discrete_time_points,
            "[trajectory] discrete_time_points",
            WAYPOINT_TIMES.to_vec(),
            &mut notes,
        );
        let angles = or_default(
            t.desired_joint_angles_deg,
            "[trajectory] desired_joint_angles_deg",
            WAYPOINT_ANGLES_DEG.to_vec(),
            &mut notes,
        );
        if times.len() != angles.len() {
            return Err(CliError::config(format!(
                "[trajectory] discrete_time_points has {} entries but desired_joint_angles_deg has {}",
                times.len(),
                angles.len()
            )));
        }
        let rows: Vec<DVector<f64>> = angles
            .iter()
            .map(|r| DVector::from_iterator(JOINTS, r.iter().map(|d| d.to_radians())))
            .collect();
        let trajectory = Trajectory::new(times, rows).map_err(|e| CliError::config(format!("[trajectory] {e}")))?;

        let s = raw.scheduling;
        let mode = or_default(s.mode, "[scheduling] mode", Mode::Matrix, &mut notes);
        let base = path.parent().unwrap_or(Path::new("."));
        let family_files: Vec<PathBuf> = s
            .family_files
            .unwrap_or_default()
            .iter()
            .map(|f| base.join(f))
            .collect();
        if mode == Mode::File && family_files.len() != points_deg.len() {
            return Err(CliError::config(format!(
                "[scheduling] family_files: mode \"file\" needs one file per linearization point ({}), got {}",
                points_deg.len(),
                family_files.len()
            )));
        }
        if matches!(mode, Mode::Scalar | Mode::Matrix) && points_deg.len() != 3 {
            return Err(CliError::config(format!(
                "[scheduling] mode: the built-in {} schedule drives three controllers, got {} linearization points",
                mode.name(),
                points_deg.len()
            )));
        }
        let unscheduled_controller = or_default(
            s.unscheduled_controller,
            "[scheduling] unscheduled_controller",
            points_deg.len(),
            &mut notes,
        );
        if !(1..=points_deg.len()).contains(&unscheduled_controller) {
            return Err(CliError::config(format!(
                "[scheduling] unscheduled_controller: must be in 1..={}, got {unscheduled_controller}",
                points_deg.len()
            )));
        }
        let rate_feedforward = or_default(s.rate_feedforward, "[scheduling] rate_feedforward", true, &mut notes);

        let sim = raw.sim;
        let dt = or_default(sim.dt, "[sim] dt", 1e-3, &mut notes);
        positive("[sim] dt", &[dt])?;
        let horizon = or_default(sim.horizon, "[sim] horizon", 12.0, &mut notes);
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(CliError::config(format!(
                "[sim] horizon: must be non-negative, got {horizon}"
            )));
        }
        let output_dir = match sim.output_dir {
            Some(d) => base.join(d),
            None => PathBuf::from("out"),
        };

        Ok(Scenario {
            path: path.to_path_buf(),
            model,
            weights,
            points,
            points_deg,
            trajectory,
            mode,
            family_files,
            unscheduled_controller,
            rate_feedforward,
            dt,
            horizon,
            output_dir,
            defaults_applied: notes,
        })
    }
}
