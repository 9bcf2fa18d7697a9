//! Scheduling-matrix families: pseudo-commuting construction from the SVD of
//! `S`, activity classification and singular-value bounds over the grid.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, orthonormal_completion, sigma_max, singular_values};
use crate::qsr::check_grid;

/// Entrywise tolerance below which a scheduling matrix counts as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Smallest singular value a matrix needs, relative to `max(σ_max, 1)`, to
/// count as full rank.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Time-sampled input and output scheduling matrices of one subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulingFamily {
    index: usize,
    grid: Vec<f64>,
    phi_u: Vec<DMatrix<f64>>,
    phi_y: Vec<DMatrix<f64>>,
}

impl SchedulingFamily {
    pub fn new(index: usize, grid: Vec<f64>, phi_u: Vec<DMatrix<f64>>, phi_y: Vec<DMatrix<f64>>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::param("scheduling family has an empty grid"));
        }
        check_grid(&grid)?;
        if phi_u.len() != grid.len() || phi_y.len() != grid.len() {
            return Err(Error::dim(format!(
                "grid has {} stamps but {} input and {} output matrices were given",
                grid.len(),
                phi_u.len(),
                phi_y.len()
            )));
        }
        let n_u = phi_u[0].nrows();
        let n_y = phi_y[0].nrows();
        if n_u == 0 || n_y == 0 {
            return Err(Error::dim("scheduling matrices must be non-empty"));
        }
        if phi_u.iter().any(|m| m.shape() != (n_u, n_u)) || phi_y.iter().any(|m| m.shape() != (n_y, n_y)) {
            return Err(Error::dim("scheduling matrices must be square with a fixed size"));
        }
        if phi_u
            .iter()
            .chain(phi_y.iter())
            .any(|m| m.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::param("scheduling matrices must be finite (bounded)"));
        }
        Ok(SchedulingFamily {
            index,
            grid,
            phi_u,
            phi_y,
        })
    }

    /// Family holding the same pair of matrices at every stamp.
    pub fn constant(index: usize, grid: Vec<f64>, phi_u: DMatrix<f64>, phi_y: DMatrix<f64>) -> Result<Self> {
        let n = grid.len();
        SchedulingFamily::new(index, grid, vec![phi_u; n], vec![phi_y; n])
    }

    /// Scalar scheduling `Φ_u = s(t)·I`, `Φ_y = s(t)·I`.
    pub fn scalar(index: usize, grid: Vec<f64>, n_u: usize, n_y: usize, s: impl Fn(f64) -> f64) -> Result<Self> {
        let phi_u = grid.iter().map(|&t| DMatrix::identity(n_u, n_u) * s(t)).collect();
        let phi_y = grid.iter().map(|&t| DMatrix::identity(n_y, n_y) * s(t)).collect();
        SchedulingFamily::new(index, grid, phi_u, phi_y)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn phi_u(&self) -> &[DMatrix<f64>] {
        &self.phi_u
    }

    pub fn phi_y(&self) -> &[DMatrix<f64>] {
        &self.phi_y
    }

    pub fn n_u(&self) -> usize {
        self.phi_u[0].nrows()
    }

    pub fn n_y(&self) -> usize {
        self.phi_y[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Matrices at time `t`, linearly interpolated between stamps and held
    /// constant outside the grid.
    pub fn at_time(&self, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let g = &self.grid;
        if t <= g[0] {
            return (self.phi_u[0].clone(), self.phi_y[0].clone());
        }
        let last = g.len() - 1;
        if t >= g[last] {
            return (self.phi_u[last].clone(), self.phi_y[last].clone());
        }
        let k = g.partition_point(|&s| s <= t) - 1;
        let w = (t - g[k]) / (g[k + 1] - g[k]);
        let lerp = |a: &DMatrix<f64>, b: &DMatrix<f64>| a * (1.0 - w) + b * w;
        (
            lerp(&self.phi_u[k], &self.phi_u[k + 1]),
            lerp(&self.phi_y[k], &self.phi_y[k + 1]),
        )
    }
}

/// Free blocks of the pseudo-commuting parameterization, one matrix per stamp.
///
/// With `ϱ = rank S`: `z11` is ϱ×ϱ, `z21` is (n_u−ϱ)×ϱ, `z22` is
/// (n_u−ϱ)×(n_u−ϱ), `w21` is (n_y−ϱ)×ϱ and `w22` is (n_y−ϱ)×(n_y−ϱ).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorBlocks {
    pub grid: Vec<f64>,
    pub z11: Vec<DMatrix<f64>>,
    pub z21: Vec<DMatrix<f64>>,
    pub z22: Vec<DMatrix<f64>>,
    pub w21: Vec<DMatrix<f64>>,
    pub w22: Vec<DMatrix<f64>>,
}

impl FactorBlocks {
    /// Builds blocks by evaluating `f(t)` on the grid; `f` returns
    /// `(z11, z21, z22, w21, w22)`.
    #[allow(clippy::type_complexity)]
    pub fn from_fn(
        grid: Vec<f64>,
        f: impl Fn(f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>),
    ) -> Self {
        let mut out = FactorBlocks {
            grid: grid.clone(),
            z11: Vec::new(),
            z21: Vec::new(),
            z22: Vec::new(),
            w21: Vec::new(),
            w22: Vec::new(),
        };
        for t in grid {
            let (a, b, c, d, e) = f(t);
            out.z11.push(a);
            out.z21.push(b);
            out.z22.push(c);
            out.w21.push(d);
            out.w22.push(e);
        }
        out
    }
}

/// `S = U [Σ₁ 0; 0 0] Vᵀ` with square orthogonal `U`, `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSvd {
    pub u: DMatrix<f64>,
    pub sigma1: DVector<f64>,
    pub v: DMatrix<f64>,
    pub rank: usize,
}

impl ReducedSvd {
    /// Reassembles `S` from the factors.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let r = self.rank;
        let u1 = self.u.columns(0, r);
        let v1 = self.v.columns(0, r);
        u1 * DMatrix::from_diagonal(&self.sigma1) * v1.transpose()
    }
}

fn first_nonzero_sign(col: nalgebra::DVectorView<'_, f64>) -> f64 {
    for &v in col.iter() {
        if v.abs() > 1e-14 {
            return v.signum();
        }
    }
    1.0
}

/// Singular value decomposition with full orthogonal bases and the numerical
/// rank of `s`. Each left singular vector has its first nonzero entry
/// non-negative; the matching right vector is flipped along with it.
pub fn svd_reduced(s: &DMatrix<f64>) -> Result<ReducedSvd> {
    let (n_y, n_u) = s.shape();
    if n_y == 0 || n_u == 0 {
        return Err(Error::dim("S must be non-empty"));
    }
    let (u_thin, sv, v_thin) = jacobi_svd(s);
    let smax = sv[0];
    let tol = n_y.max(n_u) as f64 * f64::EPSILON * smax;
    let rank = sv.iter().filter(|&&x| x > tol && x > 0.0).count();
    if rank == 0 {
        return Err(Error::RankZero(
            "S is zero; any scheduling matrices pseudo-commute, build them directly".into(),
        ));
    }
    let mut u1 = DMatrix::zeros(n_y, rank);
    let mut v1 = DMatrix::zeros(n_u, rank);
    let mut sigma1 = DVector::zeros(rank);
    for j in 0..rank {
        let sign = first_nonzero_sign(u_thin.column(j));
        u1.set_column(j, &(u_thin.column(j) * sign));
        v1.set_column(j, &(v_thin.column(j) * sign));
        sigma1[j] = sv[j];
    }
    let u = complete_with_signs(&u1);
    let v = complete_with_signs(&v1);
    Ok(ReducedSvd { u, sigma1, v, rank })
}

fn complete_with_signs(cols: &DMatrix<f64>) -> DMatrix<f64> {
    let mut full = orthonormal_completion(cols);
    for j in cols.ncols()..full.ncols() {
        let sign = first_nonzero_sign(full.column(j));
        if sign < 0.0 {
            full.column_mut(j).neg_mut();
        }
    }
    full
}

/// Builds `Φ_u = V [Z₁₁ 0; Z₂₁ Z₂₂] Vᵀ` and
/// `Φ_y = U [Σ₁⁻¹Z₁₁ᵀΣ₁ 0; W₂₁ W₂₂] Uᵀ`, which satisfy `Φ_yᵀS = SΦ_u`.
pub fn build_pseudo_commuting(index: usize, s: &DMatrix<f64>, blocks: &FactorBlocks) -> Result<SchedulingFamily> {
    let svd = svd_reduced(s)?;
    build_from_svd(index, &svd, blocks)
}

/// Same as [`build_pseudo_commuting`] with a precomputed decomposition.
pub fn build_from_svd(index: usize, svd: &ReducedSvd, blocks: &FactorBlocks) -> Result<SchedulingFamily> {
    let rho = svd.rank;
    let n_u = svd.v.nrows();
    let n_y = svd.u.nrows();
    let n = blocks.grid.len();
    let lens = [
        blocks.z11.len(),
        blocks.z21.len(),
        blocks.z22.len(),
        blocks.w21.len(),
        blocks.w22.len(),
    ];
    if lens.iter().any(|&l| l != n) {
        return Err(Error::dim("factor blocks do not all match the grid length"));
    }
    let sigma = DMatrix::from_diagonal(&svd.sigma1);
    let sigma_inv = DMatrix::from_diagonal(&svd.sigma1.map(|x| 1.0 / x));
    let mut phi_u = Vec::with_capacity(n);
    let mut phi_y = Vec::with_capacity(n);
    for k in 0..n {
        let shapes = [
            (&blocks.z11[k], (rho, rho), "Z11"),
            (&blocks.z21[k], (n_u - rho, rho), "Z21"),
            (&blocks.z22[k], (n_u - rho, n_u - rho), "Z22"),
            (&blocks.w21[k], (n_y - rho, rho), "W21"),
            (&blocks.w22[k], (n_y - rho, n_y - rho), "W22"),
        ];
        for (m, want, name) in shapes {
            if m.shape() != want {
                return Err(Error::dim(format!(
                    "{name} is {}x{} at stamp {k}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    want.0,
                    want.1
                )));
            }
        }
        let mut zu = DMatrix::zeros(n_u, n_u);
        zu.view_mut((0, 0), (rho, rho)).copy_from(&blocks.z11[k]);
        zu.view_mut((rho, 0), (n_u - rho, rho)).copy_from(&blocks.z21[k]);
        zu.view_mut((rho, rho), (n_u - rho, n_u - rho))
            .copy_from(&blocks.z22[k]);
        let mut zy = DMatrix::zeros(n_y, n_y);
        zy.view_mut((0, 0), (rho, rho))
            .copy_from(&(&sigma_inv * blocks.z11[k].transpose() * &sigma));
        zy.view_mut((rho, 0), (n_y - rho, rho)).copy_from(&blocks.w21[k]);
        zy.view_mut((rho, rho), (n_y - rho, n_y - rho))
            .copy_from(&blocks.w22[k]);
        phi_u.push(&svd.v * zu * svd.v.transpose());
        phi_y.push(&svd.u * zy * svd.u.transpose());
    }
    SchedulingFamily::new(index, blocks.grid.clone(), phi_u, phi_y)
}

/// `max_t ‖Φ_yᵀ(t)S − SΦ_u(t)‖₂` and whether it is within `tol`.
pub fn verify_pseudo_commute(family: &SchedulingFamily, s: &DMatrix<f64>, tol: f64) -> (bool, f64) {
    if s.shape() != (family.n_y(), family.n_u()) {
        return (false, f64::INFINITY);
    }
    let residual = family
        .phi_u
        .iter()
        .zip(&family.phi_y)
        .map(|(pu, py)| sigma_max(&(py.transpose() * s - s * pu)))
        .fold(0.0, f64::max);
    (residual <= tol, residual)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Input,
    Output,
}

/// Largest and smallest singular value of a square scheduling matrix.
pub fn sigma_nu(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = singular_values(m);
    (sv[0], *sv.last().unwrap())
}

/// Whether all entries are within [`ZERO_TOL`] of zero.
pub fn is_zero(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.abs() <= ZERO_TOL)
}

/// Whether a square matrix is numerically full rank.
pub fn is_full_rank(m: &DMatrix<f64>) -> bool {
    let (s, n) = sigma_nu(m);
    n > RANK_REL_TOL * s.max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Activity {
    /// Some matrix is nonzero at every stamp.
    pub active: bool,
    /// Some matrix is full rank at every stamp.
    pub strongly_active: bool,
    /// Indices (positions in the bank) of the full-rank matrices at each stamp.
    pub full_rank: Vec<Vec<usize>>,
}

pub(crate) fn check_bank(bank: &[SchedulingFamily]) -> Result<()> {
    let first = bank.first().ok_or_else(|| Error::param("scheduling bank is empty"))?;
    for f in &bank[1..] {
        if f.grid.len() != first.grid.len()
            || f.grid
                .iter()
                .zip(&first.grid)
                .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs()))
        {
            return Err(Error::dim(format!(
                "family {} does not share the grid of family {}",
                f.index, first.index
            )));
        }
        if f.n_u() != first.n_u() || f.n_y() != first.n_y() {
            return Err(Error::dim(format!(
                "family {} has a different input/output size than family {}",
                f.index, first.index
            )));
        }
    }
    Ok(())
}

/// Activity of the input or output scheduling matrices of a bank.
pub fn activity(bank: &[SchedulingFamily], side: Side) -> Result<Activity> {
    check_bank(bank)?;
    let n = bank[0].len();
    let mut active = true;
    let mut strongly = true;
    let mut full_rank = Vec::with_capacity(n);
    for k in 0..n {
        let mats = bank.iter().map(|f| match side {
            Side::Input => &f.phi_u[k],
            Side::Output => &f.phi_y[k],
        });
        let mut any_nonzero = false;
        let mut set = Vec::new();
        for (i, m) in mats.enumerate() {
            if !is_zero(m) {
                any_nonzero = true;
                if is_full_rank(m) {
                    set.push(i);
                }
            }
        }
        active &= any_nonzero;
        strongly &= !set.is_empty();
        full_rank.push(set);
    }
    Ok(Activity {
        active,
        strongly_active: strongly,
        full_rank,
    })
}

/// Singular-value summaries of one family over its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SvBounds {
    pub sigma_bar_u: f64,
    pub sigma_bar_y: f64,
    pub nu_bar_u: f64,
    pub nu_bar_y: f64,
    /// `Φ_u` full rank at each stamp.
    pub full_rank_u: Vec<bool>,
    /// `Φ_y` full rank at each stamp.
    pub full_rank_y: Vec<bool>,
}

pub fn sv_bounds(family: &SchedulingFamily) -> SvBounds {
    let mut b = SvBounds {
        sigma_bar_u: 0.0,
        sigma_bar_y: 0.0,
        nu_bar_u: f64::INFINITY,
        nu_bar_y: f64::INFINITY,
        full_rank_u: Vec::with_capacity(family.len()),
        full_rank_y: Vec::with_capacity(family.len()),
    };
    for (pu, py) in family.phi_u.iter().zip(&family.phi_y) {
        let (su, nu) = sigma_nu(pu);
        let (sy, ny) = sigma_nu(py);
        b.sigma_bar_u = b.sigma_bar_u.max(su);
        b.sigma_bar_y = b.sigma_bar_y.max(sy);
        b.nu_bar_u = b.nu_bar_u.min(nu);
        b.nu_bar_y = b.nu_bar_y.min(ny);
        b.full_rank_u.push(nu > RANK_REL_TOL * su.max(1.0));
        b.full_rank_y.push(ny > RANK_REL_TOL * sy.max(1.0));
    }
    b
}

/// `sup_t σ_max([Φ_{y,1}(t) … Φ_{y,N}(t)])`.
pub fn stacked_sigma(bank: &[SchedulingFamily]) -> Result<f64> {
    check_bank(bank)?;
    let n_y = bank[0].n_y();
    let mut psi = DMatrix::zeros(n_y, n_y * bank.len());
    let mut sup = 0.0f64;
    for k in 0..bank[0].len() {
        for (i, f) in bank.iter().enumerate() {
            psi.view_mut((0, i * n_y), (n_y, n_y)).copy_from(&f.phi_y[k]);
        }
        sup = sup.max(sigma_max(&psi));
    }
    Ok(sup)
}
