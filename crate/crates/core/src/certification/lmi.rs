use nalgebra::DMatrix;

use super::lyapunov::solve_lyapunov;
use super::LtiSystem;
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, max_sym_eig, min_sym_eig, spectral_abscissa, symmetrize};
use crate::qsr::QsrTriple;

/// Dissipativity certificate `V(x) = xᵀPx` of an LTI realization.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageCertificate {
    pub p: DMatrix<f64>,
    pub lmi_residual_max_eig: f64,
    pub triple: QsrTriple,
}

/// The assembled dissipativity LMI block and its largest eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativityResidual {
    pub block: DMatrix<f64>,
    pub max_eig: f64,
}

/// Assembles
/// `[[PA + AᵀP − Q̂, PB − Ŝ], [(PB − Ŝ)ᵀ, −R̂]]` with `Q̂ = CᵀQC`,
/// `Ŝ = CᵀS + CᵀQD` and `R̂ = DᵀQD + DᵀS + SᵀD + R`. The realization is
/// dissipative with storage `xᵀPx` when the block is negative semidefinite.
pub fn dissipativity_residual(sys: &LtiSystem, triple: &QsrTriple, p: &DMatrix<f64>) -> Result<DissipativityResidual> {
    let n = sys.n_x();
    if p.shape() != (n, n) {
        return Err(Error::dim(format!("P must be {n}x{n}")));
    }
    if triple.n_y() != sys.n_y() || triple.n_u() != sys.n_u() {
        return Err(Error::dim(format!(
            "system has n_u={}, n_y={} but the triple expects n_u={}, n_y={}",
            sys.n_u(),
            sys.n_y(),
            triple.n_u(),
            triple.n_y()
        )));
    }
    let asym = asymmetry(p);
    if asym > 1e-10 {
        return Err(Error::NotSymmetric {
            name: "P",
            residual: asym,
        });
    }
    let p = symmetrize(p);
    let (a, b, c, d) = (&sys.a, &sys.b, &sys.c, &sys.d);
    let (q, s, r) = (triple.q(), triple.s(), triple.r());
    let q_hat = c.transpose() * q * c;
    let s_hat = c.transpose() * s + c.transpose() * q * d;
    let r_hat = d.transpose() * q * d + d.transpose() * s + s.transpose() * d + r;
    let m = sys.n_u();
    let mut block = DMatrix::zeros(n + m, n + m);
    block
        .view_mut((0, 0), (n, n))
        .copy_from(&(&p * a + a.transpose() * &p - q_hat));
    let off = &p * b - s_hat;
    block.view_mut((0, n), (n, m)).copy_from(&off);
    block.view_mut((n, 0), (m, n)).copy_from(&off.transpose());
    block.view_mut((n, n), (m, m)).copy_from(&(-r_hat));
    let block = symmetrize(&block);
    let max_eig = max_sym_eig(&block);
    Ok(DissipativityResidual { block, max_eig })
}

/// Certificate that the negative feedback interconnection of two
/// QSR-dissipative systems is asymptotically stable.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub rho: f64,
    pub block_max_eig: f64,
}

/// `[[ρQ₁ + R₂, −ρS₁ + S₂ᵀ], [−ρS₁ᵀ + S₂, ρR₁ + Q₂]]` for system 1 in negative
/// feedback with system 2 (system 2's input is system 1's output).
pub fn stability_block(t1: &QsrTriple, t2: &QsrTriple, rho: f64) -> Result<DMatrix<f64>> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::param(format!("rho must be positive, got {rho}")));
    }
    let (ny, nu) = (t1.n_y(), t1.n_u());
    if t2.n_u() != ny || t2.n_y() != nu {
        return Err(Error::dim(format!(
            "feedback needs the second system to map {ny} inputs to {nu} outputs, it maps {} to {}",
            t2.n_u(),
            t2.n_y()
        )));
    }
    let mut block = DMatrix::zeros(ny + nu, ny + nu);
    block.view_mut((0, 0), (ny, ny)).copy_from(&(t1.q() * rho + t2.r()));
    let off = t1.s() * -rho + t2.s().transpose();
    block.view_mut((0, ny), (ny, nu)).copy_from(&off);
    block.view_mut((ny, 0), (nu, ny)).copy_from(&off.transpose());
    block.view_mut((ny, ny), (nu, nu)).copy_from(&(t1.r() * rho + t2.q()));
    Ok(symmetrize(&block))
}

/// Default strictness margin of [`stability_check`].
pub const STABILITY_TOL: f64 = 1e-9;

/// Certifies the feedback loop when the stability block is negative definite
/// with margin `tol`.
pub fn stability_check(t1: &QsrTriple, t2: &QsrTriple, rho: f64, tol: f64) -> Result<StabilityCertificate> {
    let block = stability_block(t1, t2, rho)?;
    let max = max_sym_eig(&block);
    if max < -tol {
        Ok(StabilityCertificate {
            rho,
            block_max_eig: max,
        })
    } else {
        Err(Error::Infeasible(format!(
            "stability block has largest eigenvalue {max:.6e} (needs < {:.1e})",
            -tol
        )))
    }
}

/// Residuals of an externally supplied solution of the full controller
/// design problem (free `Q_c`, `S_c`, `R_c`, `P` and `ρ`).
#[derive(Debug, Clone, PartialEq)]
pub struct FullSdpResidual {
    /// Largest eigenvalue of the controller dissipativity LMI.
    pub lmi_max_eig: f64,
    /// Largest eigenvalue of the plant/controller stability block.
    pub stability_max_eig: f64,
    /// Smallest eigenvalue of `P`.
    pub p_min_eig: f64,
    /// `trace(R_c)`, the design objective.
    pub trace_r: f64,
}

pub fn verify_full_sdp(
    controller: &LtiSystem,
    controller_triple: &QsrTriple,
    p: &DMatrix<f64>,
    plant_triple: &QsrTriple,
    rho: f64,
) -> Result<FullSdpResidual> {
    let lmi = dissipativity_residual(controller, controller_triple, p)?;
    let stab = stability_block(plant_triple, controller_triple, rho)?;
    Ok(FullSdpResidual {
        lmi_max_eig: lmi.max_eig,
        stability_max_eig: max_sym_eig(&stab),
        p_min_eig: min_sym_eig(p),
        trace_r: controller_triple.r().trace(),
    })
}

/// `ε` grid of the controller certification search: 13 points, 10⁻³…10¹.
pub const EPSILON_GRID: [f64; 13] = [
    1e-3,
    2.154_434_690_031_884e-3,
    4.641_588_833_612_779e-3,
    1e-2,
    2.154_434_690_031_884e-2,
    4.641_588_833_612_779e-2,
    1e-1,
    2.154_434_690_031_884e-1,
    4.641_588_833_612_779e-1,
    1.0,
    2.154_434_690_031_884,
    4.641_588_833_612_779,
    10.0,
];

/// `β` grid of the controller certification search: 7 points, 10⁻¹ down
/// to 10⁻⁴. Larger margins give a better conditioned `P` and hence a smaller,
/// less stiff observer gain `B_c = P⁻¹Ŝ`, so they are tried first.
pub const BETA_GRID: [f64; 7] = [
    1e-1,
    3.162_277_660_168_379e-2,
    1e-2,
    3.162_277_660_168_379_5e-3,
    1e-3,
    3.162_277_660_168_379_5e-4,
    1e-4,
];

/// A certified observer-form controller
/// `ẋ_c = A_c x_c + B_c u_c`, `y_c = K x_c` with supply `(−εI, S_c, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerCertificate {
    pub epsilon: f64,
    pub beta: f64,
    pub p: DMatrix<f64>,
    pub realization: LtiSystem,
    pub triple: QsrTriple,
    pub lmi_max_eig: f64,
    pub p_min_eig: f64,
}

/// Searches `Q_c = −εI` and a margin `β` such that the solution of
/// `PÂ + ÂᵀP = ŜC + CᵀŜᵀ − εKᵀK − βI`, `Ŝ = KᵀS_c`, is positive definite.
/// The controller input matrix is then `B_c = P⁻¹Ŝ` and `A_c = Â − B_cC`.
///
/// The grid is scanned in order with `ε` in the outer loop and `β` in the
/// inner loop; the first feasible pair wins. With the default grids this is
/// the smallest feasible `ε` with the largest feasible margin.
pub fn certify_controller(
    a_hat: &DMatrix<f64>,
    k: &DMatrix<f64>,
    c: &DMatrix<f64>,
    s_c: &DMatrix<f64>,
) -> Result<ControllerCertificate> {
    certify_controller_on_grid(a_hat, k, c, s_c, &EPSILON_GRID, &BETA_GRID)
}

pub fn certify_controller_on_grid(
    a_hat: &DMatrix<f64>,
    k: &DMatrix<f64>,
    c: &DMatrix<f64>,
    s_c: &DMatrix<f64>,
    epsilons: &[f64],
    betas: &[f64],
) -> Result<ControllerCertificate> {
    let n = a_hat.nrows();
    if !a_hat.is_square() || k.ncols() != n || c.ncols() != n {
        return Err(Error::dim("Â must be n×n and K, C must have n columns"));
    }
    if s_c.shape() != (k.nrows(), c.nrows()) {
        return Err(Error::dim(format!(
            "S_c must be {}x{}, got {}x{}",
            k.nrows(),
            c.nrows(),
            s_c.nrows(),
            s_c.ncols()
        )));
    }
    let abscissa = spectral_abscissa(a_hat)?;
    if abscissa >= 0.0 {
        return Err(Error::NotHurwitz(abscissa));
    }
    let s_hat = k.transpose() * s_c;
    let cross = &s_hat * c + c.transpose() * s_hat.transpose();
    let ktk = k.transpose() * k;
    let mut best = f64::NEG_INFINITY;
    for &eps in epsilons {
        for &beta in betas {
            let rhs = &cross - &ktk * eps - DMatrix::identity(n, n) * beta;
            let p = solve_lyapunov(a_hat, &rhs)?;
            let lmin = min_sym_eig(&p);
            let scale = p.norm();
            best = best.max(if scale > 0.0 { lmin / scale } else { lmin });
            if lmin <= 1e-9 * scale {
                continue;
            }
            let chol = p
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Numerical("P failed Cholesky despite λ_min > 0".into()))?;
            let b_c = chol.solve(&s_hat);
            let a_c = a_hat - &b_c * c;
            let d_c = DMatrix::zeros(k.nrows(), c.nrows());
            let realization = LtiSystem::new(a_c, b_c, k.clone(), d_c)?;
            let m = k.nrows();
            let triple = QsrTriple::new(
                DMatrix::identity(m, m) * -eps,
                s_c.clone(),
                DMatrix::zeros(c.nrows(), c.nrows()),
            )?;
            let lmi = dissipativity_residual(&realization, &triple, &p)?;
            return Ok(ControllerCertificate {
                epsilon: eps,
                beta,
                p,
                realization,
                triple,
                lmi_max_eig: lmi.max_eig,
                p_min_eig: lmin,
            });
        }
    }
    Err(Error::Infeasible(format!(
        "no (epsilon, beta) on the grid gives P > 0; best relative lambda_min(P) = {best:.6e}"
    )))
}
