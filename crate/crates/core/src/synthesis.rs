//! QSR-dissipative subcontrollers for the prewrapped three-link manipulator.
//!
//! Each subcontroller is an observer-form LQR controller designed at one
//! operating point of the plant linearized with the measured parameters,
//! then made `(−εI, ½B̂ᵀ, 0)`-dissipative by choosing its observer gain from
//! a Lyapunov certificate.

use nalgebra::{DMatrix, DVector};

use crate::certification::{certify_controller, solve_are, ControllerCertificate, LtiSystem};
use crate::composition::{compose_theorem2, CompositionReport};
use crate::error::{Error, Result};
use crate::qsr::QsrTriple;
use crate::robot_sim::dynamics::mass_matrix;
use crate::scheduling::SchedulingFamily;

/// Number of joints.
pub const JOINTS: usize = 3;
/// Number of scheduled control inputs (joints 2 and 3).
pub const INPUTS: usize = 2;

/// Physical and measured parameters of the manipulator and its prewrap.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub length: [f64; JOINTS],
    pub measured_length: [f64; JOINTS],
    pub mass: [f64; JOINTS],
    pub measured_mass: [f64; JOINTS],
    pub damping: [f64; JOINTS],
    pub proportional_gain: [f64; JOINTS],
}

impl Default for PlantModel {
    fn default() -> Self {
        PlantModel {
            length: [1.10, 0.60, 0.50],
            measured_length: [1.21, 0.54, 0.55],
            mass: [2.00, 0.90, 0.30],
            measured_mass: [2.40, 0.72, 0.36],
            damping: [5.0, 2.5, 2.5],
            proportional_gain: [5.0, 35.0, 35.0],
        }
    }
}

impl PlantModel {
    pub fn validate(&self) -> Result<()> {
        let groups: [(&str, &[f64; JOINTS]); 6] = [
            ("length", &self.length),
            ("measured_length", &self.measured_length),
            ("mass", &self.mass),
            ("measured_mass", &self.measured_mass),
            ("damping_coefficient", &self.damping),
            ("proportional_gain", &self.proportional_gain),
        ];
        for (name, vals) in groups {
            if let Some(v) = vals.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::param(format!("{name} entries must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Input map `B̂`: the scheduled controller drives joints 2 and 3.
    pub fn b_hat() -> DMatrix<f64> {
        DMatrix::from_row_slice(JOINTS, INPUTS, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0])
    }

    pub fn damping_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.damping))
    }

    pub fn kp_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.proportional_gain))
    }

    /// Supply rate `(−D, ½B̂, 0)` of the prewrapped plant from `ū` to `q̇`.
    pub fn plant_triple(&self) -> QsrTriple {
        QsrTriple::new(
            -self.damping_matrix(),
            Self::b_hat() * 0.5,
            DMatrix::zeros(INPUTS, INPUTS),
        )
        .expect("plant triple dimensions are fixed")
    }

    /// Common controller cross term `S_c = ½B̂ᵀ`.
    pub fn controller_s() -> DMatrix<f64> {
        Self::b_hat().transpose() * 0.5
    }
}

/// LQR weights given as Bryson maximum-deviation values: `Q = diag(x)⁻²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrWeights {
    pub state_bryson: [f64; 2 * JOINTS],
    pub input_bryson: [f64; INPUTS],
}

impl Default for LqrWeights {
    fn default() -> Self {
        LqrWeights {
            state_bryson: [15.0, 15.0, 15.0, 10.0, 10.0, 10.0],
            input_bryson: [25.0, 25.0],
        }
    }
}

impl LqrWeights {
    pub fn q(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            2 * JOINTS,
            self.state_bryson.iter().map(|x| x.powi(-2)),
        ))
    }

    pub fn r(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            INPUTS,
            self.input_bryson.iter().map(|x| x.powi(-2)),
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .state_bryson
            .iter()
            .chain(&self.input_bryson)
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::param("LQR Bryson values must be positive"));
        }
        Ok(())
    }
}

/// Linearization of the prewrapped plant about `q̄` with state `(e, q̇)`,
/// input `ū` and output `q̇`, built from the measured parameters.
pub fn linearize_prewrapped(model: &PlantModel, q_bar: &[f64; JOINTS]) -> Result<LtiSystem> {
    model.validate()?;
    let m = mass_matrix(model, q_bar, true);
    let lu = m.clone().lu();
    let m_inv = lu
        .try_inverse()
        .ok_or_else(|| Error::Numerical("measured mass matrix is singular".into()))?;
    let n = JOINTS;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).copy_from(&DMatrix::identity(n, n));
    a.view_mut((n, 0), (n, n)).copy_from(&(-&m_inv * model.kp_matrix()));
    a.view_mut((n, n), (n, n))
        .copy_from(&(-&m_inv * model.damping_matrix()));
    let mut b = DMatrix::zeros(2 * n, INPUTS);
    b.view_mut((n, 0), (n, INPUTS))
        .copy_from(&(&m_inv * PlantModel::b_hat()));
    let mut c = DMatrix::zeros(n, 2 * n);
    c.view_mut((0, n), (n, n)).copy_from(&DMatrix::identity(n, n));
    LtiSystem::new(a, b, c, DMatrix::zeros(n, INPUTS))
}

/// One certified subcontroller.
#[derive(Debug, Clone)]
pub struct Subcontroller {
    pub index: usize,
    /// Linearization point (rad).
    pub q_bar: [f64; JOINTS],
    pub plant: LtiSystem,
    /// LQR gain, also the controller output matrix.
    pub k: DMatrix<f64>,
    pub certificate: ControllerCertificate,
}

impl Subcontroller {
    /// `ẋ = A_c x + B_c y`, `ū_i = K x`.
    pub fn realization(&self) -> &LtiSystem {
        &self.certificate.realization
    }

    pub fn triple(&self) -> &QsrTriple {
        &self.certificate.triple
    }
}

/// LQR design and dissipativity certification at a single point.
pub fn synthesize_point(
    model: &PlantModel,
    index: usize,
    q_bar: &[f64; JOINTS],
    weights: &LqrWeights,
) -> Result<Subcontroller> {
    weights.validate()?;
    let plant = linearize_prewrapped(model, q_bar)?;
    let lqr = solve_are(&plant.a, &plant.b, &weights.q(), &weights.r())?;
    let a_hat = &plant.a - &plant.b * &lqr.k;
    let certificate = certify_controller(&a_hat, &lqr.k, &plant.c, &PlantModel::controller_s())?;
    let label = format!("controller {index}");
    let mut certificate = certificate;
    certificate.realization = certificate.realization.with_label(label);
    Ok(Subcontroller {
        index,
        q_bar: *q_bar,
        plant,
        k: lqr.k,
        certificate,
    })
}

/// Synthesizes one subcontroller per operating point (indices from 1).
/// Any failure aborts the bank.
pub fn synthesize_bank(
    model: &PlantModel,
    points: &[[f64; JOINTS]],
    weights: &LqrWeights,
) -> Result<Vec<Subcontroller>> {
    if points.is_empty() {
        return Err(Error::param("no linearization points"));
    }
    points
        .iter()
        .enumerate()
        .map(|(i, q)| {
            synthesize_point(model, i + 1, q, weights).map_err(|e| Error::AtPoint {
                index: i + 1,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Supply rate of the gain-scheduled controller built from `bank`.
pub fn controller_bank_compose(bank: &[Subcontroller], families: &[SchedulingFamily]) -> Result<CompositionReport> {
    let triples: Vec<QsrTriple> = bank.iter().map(|c| c.triple().clone()).collect();
    compose_theorem2(&triples, families)
}
