use nalgebra::DVector;

use crate::error::{Error, Result};

/// Quintic blend `6η⁵ − 15η⁴ + 10η³` and its derivative in `η`.
pub fn quintic(eta: f64) -> (f64, f64) {
    let e2 = eta * eta;
    let e3 = e2 * eta;
    (e3 * (6.0 * e2 - 15.0 * eta + 10.0), 30.0 * e2 * (e2 - 2.0 * eta + 1.0))
}

/// Joint-space waypoints joined by quintic blends, held at the end points.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    angles: Vec<DVector<f64>>,
}

impl Trajectory {
    /// `angles` in radians, one vector per time point.
    pub fn new(times: Vec<f64>, angles: Vec<DVector<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != angles.len() {
            return Err(Error::dim(format!(
                "{} time points but {} angle rows",
                times.len(),
                angles.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::param(
                "trajectory time points must be finite and strictly increasing",
            ));
        }
        let n = angles[0].len();
        if angles.iter().any(|a| a.len() != n || a.iter().any(|v| !v.is_finite())) {
            return Err(Error::param("trajectory angle rows must be finite and of equal length"));
        }
        Ok(Trajectory { times, angles })
    }

    /// Same as [`Trajectory::new`] with rows in degrees.
    pub fn from_degrees(times: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let angles = rows
            .iter()
            .map(|r| DVector::from_iterator(r.len(), r.iter().map(|d| d.to_radians())))
            .collect();
        Self::new(times, angles)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn angles(&self) -> &[DVector<f64>] {
        &self.angles
    }

    /// Desired angle and rate at `t`.
    pub fn eval(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let last = self.times.len() - 1;
        let zero = DVector::zeros(self.angles[0].len());
        if t <= self.times[0] {
            return (self.angles[0].clone(), zero);
        }
        if t >= self.times[last] {
            return (self.angles[last].clone(), zero);
        }
        let k = self.times.partition_point(|&tk| tk <= t) - 1;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let span = t1 - t0;
        let (p, dp) = quintic((t - t0) / span);
        let delta = &self.angles[k + 1] - &self.angles[k];
        (&self.angles[k] + &delta * p, delta * (dp / span))
    }
}
