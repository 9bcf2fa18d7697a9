//! LTI dissipativity and feedback-stability certificates, plus the Lyapunov
//! and Riccati solvers they rely on.

mod construct;
mod lmi;
mod lyapunov;
mod riccati;

pub use construct::{DissipativeDesign, LtiResponse};
pub use lmi::{
    certify_controller, certify_controller_on_grid, dissipativity_residual, stability_block, stability_check,
    verify_full_sdp, ControllerCertificate, DissipativityResidual, FullSdpResidual, StabilityCertificate,
    StorageCertificate, BETA_GRID, EPSILON_GRID, STABILITY_TOL,
};
pub use lyapunov::{lyapunov_residual, solve_lyapunov};
pub use riccati::{are_residual, solve_are, AreSolution};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// State-space realization `ẋ = Ax + Bu`, `y = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub label: String,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::dim("A must be square"));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::dim(format!(
                "B has {} rows and C has {} columns, A is {n}x{n}",
                b.nrows(),
                c.ncols()
            )));
        }
        if d.shape() != (c.nrows(), b.ncols()) {
            return Err(Error::dim(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(LtiSystem {
            a,
            b,
            c,
            d,
            label: String::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn n_x(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_y(&self) -> usize {
        self.c.nrows()
    }
}
