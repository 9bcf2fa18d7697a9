use nalgebra::{DMatrix, DVector};

use super::LtiSystem;
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, max_sym_eig, min_sym_eig};
use crate::qsr::{QsrTriple, SampledSignal};

/// Ingredients of an LTI system that is QSR-dissipative by construction with
/// storage `xᵀPx`.
///
/// With `B = P⁻¹Cᵀ(S + QD)`, `A = P⁻¹(J + ½CᵀQC − γI)` and
/// `R = R_extra − (DᵀQD + DᵀS + SᵀD)` the dissipativity LMI block becomes
/// `diag(−2γI, −R_extra) ⪯ 0`.
#[derive(Debug, Clone)]
pub struct DissipativeDesign {
    /// Output weight, negative semidefinite.
    pub q: DMatrix<f64>,
    pub s: DMatrix<f64>,
    /// Feedthrough.
    pub d: DMatrix<f64>,
    /// Storage matrix, positive definite.
    pub p: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Positive semidefinite slack added to `R`.
    pub r_extra: DMatrix<f64>,
    /// Strict dissipation margin in the state, positive.
    pub gamma: f64,
    /// Skew-symmetric part of `PA`.
    pub skew: DMatrix<f64>,
}

impl DissipativeDesign {
    pub fn realize(&self) -> Result<(LtiSystem, QsrTriple)> {
        let n = self.p.nrows();
        let n_y = self.q.nrows();
        let n_u = self.s.ncols();
        if self.p.shape() != (n, n)
            || self.c.shape() != (n_y, n)
            || self.s.shape() != (n_y, n_u)
            || self.d.shape() != (n_y, n_u)
            || self.r_extra.shape() != (n_u, n_u)
            || self.skew.shape() != (n, n)
        {
            return Err(Error::dim("inconsistent design dimensions"));
        }
        if max_sym_eig(&self.q) > 1e-12 {
            return Err(Error::param("Q must be negative semidefinite"));
        }
        if min_sym_eig(&self.r_extra) < -1e-12 {
            return Err(Error::param("R_extra must be positive semidefinite"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma must be positive"));
        }
        if (&self.skew + self.skew.transpose()).amax() > 1e-12 {
            return Err(Error::param("J must be skew-symmetric"));
        }
        if asymmetry(&self.p) > 1e-12 {
            return Err(Error::param("P must be symmetric"));
        }
        let chol = self
            .p
            .clone()
            .cholesky()
            .ok_or_else(|| Error::param("P must be positive definite"))?;
        let (q, s, d, c) = (&self.q, &self.s, &self.d, &self.c);
        let b = chol.solve(&(c.transpose() * (s + q * d)));
        let pa = &self.skew + c.transpose() * q * c * 0.5 - DMatrix::identity(n, n) * self.gamma;
        let a = chol.solve(&pa);
        let r = &self.r_extra - (d.transpose() * q * d + d.transpose() * s + s.transpose() * d);
        let sys = LtiSystem::new(a, b, c.clone(), d.clone())?;
        let triple = QsrTriple::new(q.clone(), s.clone(), r)?;
        Ok((sys, triple))
    }
}

/// Sampled response of an LTI system.
#[derive(Debug, Clone)]
pub struct LtiResponse {
    pub u: SampledSignal,
    pub y: SampledSignal,
    pub x: Vec<DVector<f64>>,
}

impl LtiSystem {
    /// Fixed-step RK4 from `x(0) = x0` over `steps` steps of `dt`; `input` is
    /// evaluated at the RK4 stage times.
    pub fn simulate(
        &self,
        x0: &DVector<f64>,
        dt: f64,
        steps: usize,
        input: impl Fn(f64) -> DVector<f64>,
    ) -> Result<LtiResponse> {
        if x0.len() != self.n_x() {
            return Err(Error::dim("initial state size does not match A"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt must be positive"));
        }
        let f = |x: &DVector<f64>, u: &DVector<f64>| &self.a * x + &self.b * u;
        let mut grid = Vec::with_capacity(steps + 1);
        let mut xs = Vec::with_capacity(steps + 1);
        let mut us = Vec::with_capacity(steps + 1);
        let mut ys = Vec::with_capacity(steps + 1);
        let mut x = x0.clone();
        let mut u0 = input(0.0);
        if u0.len() != self.n_u() {
            return Err(Error::dim("input size does not match B"));
        }
        for k in 0..=steps {
            let t = k as f64 * dt;
            ys.push(&self.c * &x + &self.d * &u0);
            grid.push(t);
            xs.push(x.clone());
            us.push(u0.clone());
            if k == steps {
                break;
            }
            let um = input(t + 0.5 * dt);
            let u1 = input(t + dt);
            let k1 = f(&x, &u0);
            let k2 = f(&(&x + &k1 * (0.5 * dt)), &um);
            let k3 = f(&(&x + &k2 * (0.5 * dt)), &um);
            let k4 = f(&(&x + &k3 * dt), &u1);
            x += (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
            u0 = u1;
        }
        Ok(LtiResponse {
            u: SampledSignal::new(grid.clone(), us)?,
            y: SampledSignal::new(grid, ys)?,
            x: xs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certification::dissipativity_residual;
    use crate::linalg::spectral_abscissa;

    #[test]
    fn constructed_system_satisfies_lmi() {
        let design = DissipativeDesign {
            q: DMatrix::from_row_slice(2, 2, &[-1.0, 0.2, 0.2, -0.5]),
            s: DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.5]),
            d: DMatrix::identity(2, 2) * 0.1,
            p: DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.1, 1.0, 0.2, 0.0, 0.2, 1.5]),
            c: DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, -1.0]),
            r_extra: DMatrix::identity(2, 2) * 0.05,
            gamma: 0.3,
            skew: DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 2.0, 0.0, -2.0, 0.0]),
        };
        let (sys, triple) = design.realize().unwrap();
        let res = dissipativity_residual(&sys, &triple, &design.p).unwrap();
        assert!(res.max_eig <= 1e-12, "{}", res.max_eig);
        assert!(spectral_abscissa(&sys.a).unwrap() < 0.0);
    }

    #[test]
    fn first_order_step_response() {
        let sys = LtiSystem::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let r = sys
            .simulate(&DVector::zeros(1), 1e-2, 100, |_| DVector::from_element(1, 1.0))
            .unwrap();
        let y_end = r.y.values()[100][0];
        assert!((y_end - (1.0 - (-1.0f64).exp())).abs() < 1e-9);
    }
}
