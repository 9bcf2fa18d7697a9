//! Scheduling signals and scheduling-matrix families for the three
//! manipulator subcontrollers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scheduling::SchedulingFamily;

fn bump(x: f64) -> f64 {
    1.0 - x.powi(4)
}

/// The three quartic scheduling signals, each in `[0, 1]`.
pub fn scheduling_signals(t: f64) -> [f64; 3] {
    let s1 = if t < 1.0 {
        1.0
    } else if t <= 4.0 {
        bump((t - 1.0) / 3.0)
    } else {
        0.0
    };
    let s2 = if (1.0..=9.0).contains(&t) {
        bump((t - 5.0) / 4.0)
    } else {
        0.0
    };
    let s3 = if t < 7.0 {
        0.0
    } else if t <= 9.0 {
        bump((t - 9.0) / 2.0)
    } else {
        1.0
    };
    [s1, s2, s3]
}

/// Right singular vectors of `½B̂ᵀ`, ordered with the null direction last.
pub fn right_factor() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
}

/// Block-lower-triangular factors `Z̄_i(t)`; the upper-left 2×2 block acts
/// on the range of `S_c` and the upper-right block is zero.
pub fn z_bar(t: f64) -> [DMatrix<f64>; 3] {
    let [s1, s2, s3] = scheduling_signals(t);
    [
        DMatrix::from_row_slice(3, 3, &[s1, -0.5 * s1, 0.0, 0.0, 0.0, 0.0, s3, s2, s1]),
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![s1 + s2, s2 + s3, s2])),
        DMatrix::from_row_slice(3, 3, &[s3, 0.0, 0.0, s1, s3, 0.0, 0.0, 0.0, s2 + s3]),
    ]
}

/// `(Φ_u, Φ_y)` of the matrix-scheduled controllers at `t`:
/// `Φ_u = V Z̄ Vᵀ`, `Φ_y = Z̄₁₁ᵀ` (since `U = I` and `Σ₁ = ½I`).
pub fn matrix_schedule(t: f64) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
    let v = right_factor();
    z_bar(t)
        .into_iter()
        .map(|z| {
            let phi_u = &v * &z * v.transpose();
            let phi_y = z.view((0, 0), (2, 2)).transpose();
            (phi_u, phi_y)
        })
        .collect()
}

/// `(s_i I₃, s_i I₂)` for each controller.
pub fn scalar_schedule(t: f64) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
    scheduling_signals(t)
        .into_iter()
        .map(|s| (DMatrix::identity(3, 3) * s, DMatrix::identity(2, 2) * s))
        .collect()
}

fn sample(grid: &[f64], f: impl Fn(f64) -> Vec<(DMatrix<f64>, DMatrix<f64>)>) -> Result<Vec<SchedulingFamily>> {
    if grid.is_empty() {
        return Err(Error::param("empty scheduling grid"));
    }
    let samples: Vec<_> = grid.iter().map(|&t| f(t)).collect();
    (0..samples[0].len())
        .map(|i| {
            let (phi_u, phi_y) = samples.iter().map(|s| s[i].clone()).unzip();
            SchedulingFamily::new(i + 1, grid.to_vec(), phi_u, phi_y)
        })
        .collect()
}

/// Matrix-scheduling bank sampled on `grid`.
pub fn example_families(grid: &[f64]) -> Result<Vec<SchedulingFamily>> {
    sample(grid, matrix_schedule)
}

/// Scalar-scheduling bank sampled on `grid`.
pub fn scalar_families(grid: &[f64]) -> Result<Vec<SchedulingFamily>> {
    sample(grid, scalar_schedule)
}

/// Uniform grid `0, dt, …` covering `[0, horizon]`.
pub fn uniform_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let n = (horizon / dt).round() as usize;
    (0..=n).map(|k| k as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduling::{activity, verify_pseudo_commute, Side};
    use crate::synthesis::PlantModel;

    #[test]
    fn signal_values() {
        assert_eq!(scheduling_signals(0.0), [1.0, 0.0, 0.0]);
        assert_eq!(scheduling_signals(4.0)[0], 0.0);
        assert_eq!(scheduling_signals(9.0)[2], 1.0);
        assert_eq!(scheduling_signals(11.0)[2], 1.0);
        assert_eq!(scheduling_signals(5.0)[1], 1.0);
        assert_eq!(scheduling_signals(1.0)[1], 0.0);
        assert_eq!(scheduling_signals(9.0)[1], 0.0);
    }

    #[test]
    fn signals_continuous_bounded_and_covering() {
        for b in [1.0, 4.0, 7.0, 9.0] {
            let lo = scheduling_signals(b - 1e-13);
            let hi = scheduling_signals(b + 1e-13);
            for i in 0..3 {
                assert!((lo[i] - hi[i]).abs() < 1e-11, "signal {i} at {b}");
            }
        }
        for t in uniform_grid(12.0, 0.01) {
            let s = scheduling_signals(t);
            assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(s.iter().any(|v| *v > 0.0));
        }
    }

    #[test]
    fn matrix_bank_properties() {
        let grid = uniform_grid(12.0, 0.01);
        let bank = example_families(&grid).unwrap();
        let s = PlantModel::controller_s();
        for f in &bank {
            let (ok, res) = verify_pseudo_commute(f, &s, 1e-12);
            assert!(ok, "family {} residual {res}", f.index());
        }
        for t in &grid {
            assert!(z_bar(*t)[0].clone().rank(1e-12) < 3);
        }
        assert!(activity(&bank, Side::Output).unwrap().active);
        assert!(activity(&scalar_families(&grid).unwrap(), Side::Output).unwrap().active);
    }
}
