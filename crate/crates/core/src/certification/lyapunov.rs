use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{solve_small_sylvester, symmetrize, RealSchur};

/// Solves `PA + AᵀP = M` for Hurwitz `A` and symmetric `M`.
///
/// Bartels–Stewart: with `A = ZTZᵀ` in real Schur form the equation becomes
/// `XT + TᵀX = ZᵀMZ`, solved block by block from the top-left corner.
pub fn solve_lyapunov(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || m.shape() != (n, n) {
        return Err(Error::dim("Lyapunov equation needs square A and M of equal size"));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let schur = RealSchur::new(a)?;
    let abscissa = schur
        .eigenvalues()
        .iter()
        .map(|(re, _)| *re)
        .fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= 0.0 {
        return Err(Error::NotHurwitz(abscissa));
    }
    let (z, t) = (&schur.z, &schur.t);
    let rhs = z.transpose() * symmetrize(m) * z;
    let blocks = &schur.blocks;
    let mut x = DMatrix::<f64>::zeros(n, n);
    for &(cj, sj) in blocks {
        for &(ri, si) in blocks {
            let mut c = rhs.view((ri, cj), (si, sj)).into_owned();
            // Σ_{k<j} X_ik T_kj
            if cj > 0 {
                c -= x.view((ri, 0), (si, cj)) * t.view((0, cj), (cj, sj));
            }
            // Σ_{k<i} T_kiᵀ X_kj
            if ri > 0 {
                c -= t.view((0, ri), (ri, si)).transpose() * x.view((0, cj), (ri, sj));
            }
            let tii_t = t.view((ri, ri), (si, si)).transpose();
            let tjj = t.view((cj, cj), (sj, sj)).into_owned();
            let block = solve_small_sylvester(&tii_t, &tjj, &c)
                .ok_or_else(|| Error::Numerical("singular Lyapunov block equation".into()))?;
            x.view_mut((ri, cj), (si, sj)).copy_from(&block);
        }
    }
    Ok(symmetrize(&(z * x * z.transpose())))
}

/// Scaled residual `‖PA + AᵀP − M‖_F / (‖A‖_F‖P‖_F + ‖M‖_F)`.
pub fn lyapunov_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    let r = p * a + a.transpose() * p - m;
    let scale = a.norm() * p.norm() + m.norm();
    if scale == 0.0 {
        r.norm()
    } else {
        r.norm() / scale
    }
}
