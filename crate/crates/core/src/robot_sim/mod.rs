//! Three-link planar manipulator under prewrapped, gain-scheduled feedback.

pub mod dynamics;
pub mod signals;
pub mod simulate;
pub mod trajectory;

pub use dynamics::{mass_matrix, mass_matrix_rate, nonlinear_forces};
pub use signals::{example_families, scalar_families, scheduling_signals, uniform_grid};
pub use simulate::{rms_metrics, simulate_closed_loop, Feedback, RmsMetrics, Schedule, SimOptions, SimResult};
pub use trajectory::Trajectory;

use nalgebra::DVector;

/// Waypoint times (s) of the reference maneuver.
pub const WAYPOINT_TIMES: [f64; 5] = [0.0, 2.0, 3.0, 7.0, 9.0];

/// Waypoint joint angles (deg) of the reference maneuver.
pub const WAYPOINT_ANGLES_DEG: [[f64; 3]; 5] = [
    [0.0, 160.0, -90.0],
    [0.0, 160.0, -90.0],
    [0.0, 45.0, 45.0],
    [0.0, 45.0, 45.0],
    [0.0, -90.0, 160.0],
];

/// Controller design points (deg).
pub const LINEARIZATION_POINTS_DEG: [[f64; 3]; 3] = [[0.0, 160.0, -90.0], [0.0, 45.0, 45.0], [0.0, -90.0, 160.0]];

pub fn reference_trajectory() -> Trajectory {
    let rows: Vec<DVector<f64>> = WAYPOINT_ANGLES_DEG
        .iter()
        .map(|r| DVector::from_iterator(3, r.iter().map(|d| d.to_radians())))
        .collect();
    Trajectory::new(WAYPOINT_TIMES.to_vec(), rows).expect("reference waypoints are valid")
}

pub fn reference_points() -> Vec<[f64; 3]> {
    LINEARIZATION_POINTS_DEG
        .iter()
        .map(|p| p.map(f64::to_radians))
        .collect()
}
