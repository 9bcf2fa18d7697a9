use nalgebra::DMatrix;

use super::lyapunov::solve_lyapunov;
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, min_sym_eig, spectral_abscissa, symmetrize, RealSchur};

/// Stabilizing solution of `AᵀP + PA − PBR⁻¹BᵀP + Q = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AreSolution {
    pub p: DMatrix<f64>,
    /// State-feedback gain `K = R⁻¹BᵀP`.
    pub k: DMatrix<f64>,
    /// Scaled residual, see [`are_residual`].
    pub residual: f64,
}

/// Scaled ARE residual
/// `‖AᵀP + PA − PGP + Q‖_F / (‖Q‖_F + 2‖A‖_F‖P‖_F + ‖G‖_F‖P‖²_F)` with
/// `G = BR⁻¹Bᵀ`.
pub fn are_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let Some(r_inv) = r.clone().try_inverse() else {
        return f64::INFINITY;
    };
    let g = b * r_inv * b.transpose();
    let res = a.transpose() * p + p * a - p * &g * p + q;
    let pn = p.norm();
    let scale = q.norm() + 2.0 * a.norm() * pn + g.norm() * pn * pn;
    if scale == 0.0 {
        res.norm()
    } else {
        res.norm() / scale
    }
}

/// Solves the continuous-time algebraic Riccati equation through the stable
/// invariant subspace of the Hamiltonian `[[A, −BR⁻¹Bᵀ], [−Q, −Aᵀ]]`,
/// followed by one Newton (Kleinman) refinement step when it helps.
pub fn solve_are(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<AreSolution> {
    let n = a.nrows();
    let m = b.ncols();
    if !a.is_square() || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::dim("ARE needs A (n×n), B (n×m), Q (n×n), R (m×m)"));
    }
    if asymmetry(q) > 1e-10 || asymmetry(r) > 1e-10 {
        return Err(Error::param("ARE weights must be symmetric"));
    }
    let r = symmetrize(r);
    let q = symmetrize(q);
    if m > 0 && min_sym_eig(&r) <= 0.0 {
        return Err(Error::param("ARE input weight R must be positive definite"));
    }
    if min_sym_eig(&q) < -1e-12 * q.norm().max(1.0) {
        return Err(Error::param("ARE state weight Q must be positive semidefinite"));
    }
    let r_chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::param("ARE input weight R must be positive definite"))?;
    let r_inv_bt = r_chol.solve(&b.transpose());
    let g = b * &r_inv_bt;

    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-&q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let mut schur = RealSchur::new(&h)?;
    let stable = schur.reorder(|re| re < 0.0)?;
    if stable != n {
        return Err(Error::NotStabilizable(format!(
            "Hamiltonian has {stable} stable eigenvalues, expected {n}"
        )));
    }
    let u11 = schur.z.view((0, 0), (n, n)).into_owned();
    let u21 = schur.z.view((n, 0), (n, n)).into_owned();
    let lu = u11.transpose().full_piv_lu();
    let sv = crate::linalg::singular_values(&u11);
    if !lu.is_invertible() || sv.last().copied().unwrap_or(0.0) < 1e-12 * sv[0].max(1.0) {
        return Err(Error::NotStabilizable(
            "stable subspace is not a graph over the state coordinates".into(),
        ));
    }
    let pt = lu
        .solve(&u21.transpose())
        .ok_or_else(|| Error::Numerical("could not form the Riccati solution".into()))?;
    let mut p = symmetrize(&pt.transpose());
    let mut residual = are_residual(a, b, &q, &r, &p);

    // One Kleinman step: (A − GP)ᵀP⁺ + P⁺(A − GP) = −(Q + PGP).
    let closed = a - &g * &p;
    if let Ok(p_next) = solve_lyapunov(&closed, &(-(&q + &p * &g * &p))) {
        let res_next = are_residual(a, b, &q, &r, &p_next);
        if res_next < residual {
            p = p_next;
            residual = res_next;
        }
    }

    let k = &r_inv_bt * &p;
    let abscissa = spectral_abscissa(&(a - b * &k))?;
    if abscissa >= 0.0 {
        return Err(Error::NotStabilizable(format!(
            "closed loop is not Hurwitz (spectral abscissa {abscissa:.3e})"
        )));
    }
    Ok(AreSolution { p, k, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_integrator() {
        let sol = solve_are(&s(0.0), &s(1.0), &s(1.0), &s(1.0)).unwrap();
        assert_abs_diff_eq!(sol.p[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.k[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_input_reduces_to_lyapunov() {
        let sol = solve_are(&s(-1.0), &s(0.0), &s(1.0), &s(1.0)).unwrap();
        assert_abs_diff_eq!(sol.p[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.k[(0, 0)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn double_integrator() {
        // Known solution P = [[√3, 1], [1, √3]] for Q = I, R = 1.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let sol = solve_are(&a, &b, &DMatrix::identity(2, 2), &s(1.0)).unwrap();
        let r3 = 3f64.sqrt();
        let expect = DMatrix::from_row_slice(2, 2, &[r3, 1.0, 1.0, r3]);
        assert!((sol.p - expect).norm() < 1e-12);
    }

    #[test]
    fn unstabilizable_rejected() {
        assert!(matches!(
            solve_are(&s(1.0), &s(0.0), &s(1.0), &s(1.0)),
            Err(Error::NotStabilizable(_))
        ));
        assert!(solve_are(&s(1.0), &s(1.0), &s(1.0), &s(0.0)).is_err());
    }
}
