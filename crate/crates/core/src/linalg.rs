//! Dense linear-algebra helpers shared by the solvers.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`. The real Schur form
//! comes from nalgebra; block bookkeeping, block splitting and reordering
//! (needed for the stable invariant subspace of a Hamiltonian matrix) are done
//! here.

use nalgebra::{DMatrix, DVector, FullPivLU, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Relative asymmetry `‖M − Mᵀ‖_F / ‖M‖_F` (0 for the zero matrix).
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
///
/// The input is symmetrized first; callers are responsible for rejecting
/// matrices whose asymmetry is not round-off.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

pub fn max_sym_eig(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NEG_INFINITY)
}

pub fn min_sym_eig(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

/// Singular values, sorted descending. Empty for matrices with a zero dimension.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(m.clone(), false, false);
    let mut vals: Vec<f64> = svd.singular_values.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// Thin singular value decomposition `A = U diag(σ) Vᵀ` by one-sided Jacobi
/// rotations, singular values sorted descending.
///
/// Slower than the bidiagonal QR in nalgebra but reconstructs `A` to a few
/// ulps, which the scheduling construction needs: its residual is the
/// reconstruction error amplified by `σ_max/σ_min`.
pub fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if m < n {
        let (u, s, v) = jacobi_svd(&a.transpose());
        return (v, s, u);
    }
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let rotate = |x: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64| {
        for i in 0..x.nrows() {
            let (xp, xq) = (x[(i, p)], x[(i, q)]);
            x[(i, p)] = c * xp - s * xq;
            x[(i, q)] = s * xp + c * xq;
        }
    };
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                rotate(&mut w, p, q, c, c * t);
                rotate(&mut v, p, q, c, c * t);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = DMatrix::zeros(m, n);
    let mut vs = DMatrix::zeros(n, n);
    let mut sigma = DVector::zeros(n);
    for (j, &k) in order.iter().enumerate() {
        sigma[j] = norms[k];
        if norms[k] > 0.0 {
            u.set_column(j, &(w.column(k) / norms[k]));
        }
        vs.set_column(j, &v.column(k));
    }
    (u, sigma, vs)
}

/// Largest singular value (spectral norm).
pub fn sigma_max(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `min_{‖x‖=1} ‖M x‖` over the column space dimension of `M`.
///
/// Equals the smallest singular value when `M` has at least as many rows as
/// columns and is zero otherwise (a wide matrix has a nontrivial kernel).
pub fn sigma_min_columns(m: &DMatrix<f64>) -> f64 {
    if m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Solves `A x = b` for a small dense system with full pivoting.
pub fn solve_dense(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let lu = FullPivLU::new(a.clone());
    if !lu.is_invertible() {
        return None;
    }
    lu.solve(b)
}

/// Solves the small Sylvester equation `A X + X B = C` through its Kronecker
/// form. Intended for blocks of size at most a few rows.
pub fn solve_small_sylvester(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let p = a.nrows();
    let q = b.nrows();
    let n = p * q;
    let mut k = DMatrix::zeros(n, n);
    // vec(A X) = (I ⊗ A) vec X, vec(X B) = (Bᵀ ⊗ I) vec X, column-major vec.
    for j in 0..q {
        for i in 0..p {
            let row = j * p + i;
            for l in 0..p {
                k[(row, j * p + l)] += a[(i, l)];
            }
            for l in 0..q {
                k[(row, l * p + i)] += b[(l, j)];
            }
        }
    }
    let rhs = DVector::from_iterator(n, c.iter().copied());
    let x = solve_dense(&k, &rhs)?;
    Some(DMatrix::from_column_slice(p, q, x.as_slice()))
}

/// Completes an orthonormal set of columns to a full orthogonal basis.
///
/// The first `cols.ncols()` columns of the result span the same space as
/// `cols` (up to sign); the remaining ones span the orthogonal complement.
pub fn orthonormal_completion(cols: &DMatrix<f64>) -> DMatrix<f64> {
    let m = cols.nrows();
    let k = cols.ncols();
    let mut aug = DMatrix::zeros(m, k + m);
    aug.view_mut((0, 0), (m, k)).copy_from(cols);
    aug.view_mut((0, k), (m, m)).fill_with_identity();
    let q = aug.qr().q();
    let mut out = q.columns(0, m).into_owned();
    out.view_mut((0, 0), (m, k)).copy_from(cols);
    out
}

/// A real Schur decomposition `A = Z T Zᵀ` with explicit diagonal-block
/// structure. Every 2×2 block holds a complex-conjugate eigenvalue pair.
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub z: DMatrix<f64>,
    pub t: DMatrix<f64>,
    /// `(start, size)` of each diagonal block, in order.
    pub blocks: Vec<(usize, usize)>,
}

impl RealSchur {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim("Schur decomposition needs a square matrix"));
        }
        let n = a.nrows();
        if n == 0 {
            return Ok(RealSchur {
                z: DMatrix::zeros(0, 0),
                t: DMatrix::zeros(0, 0),
                blocks: Vec::new(),
            });
        }
        let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 2000 * n.max(10))
            .ok_or_else(|| Error::Numerical("real Schur iteration did not converge".into()))?;
        let (z, t) = schur.unpack();
        let mut out = RealSchur {
            z,
            t,
            blocks: Vec::new(),
        };
        out.identify_blocks();
        Ok(out)
    }

    fn identify_blocks(&mut self) {
        let n = self.t.nrows();
        let scale = self.t.norm().max(f64::MIN_POSITIVE);
        let mut i = 0;
        let mut blocks = Vec::new();
        while i < n {
            if i + 1 < n && self.t[(i + 1, i)].abs() > f64::EPSILON * scale {
                let (a, b, c, d) = (
                    self.t[(i, i)],
                    self.t[(i, i + 1)],
                    self.t[(i + 1, i)],
                    self.t[(i + 1, i + 1)],
                );
                let disc = 0.25 * (a - d) * (a - d) + b * c;
                if disc >= 0.0 {
                    self.split_real_pair(i);
                    blocks.push((i, 1));
                    blocks.push((i + 1, 1));
                } else {
                    blocks.push((i, 2));
                }
                i += 2;
            } else {
                if i + 1 < n {
                    self.t[(i + 1, i)] = 0.0;
                }
                blocks.push((i, 1));
                i += 1;
            }
        }
        // Clean everything strictly below the block diagonal.
        for (start, size) in &blocks {
            for r in start + size..n {
                for c in *start..start + size {
                    self.t[(r, c)] = 0.0;
                }
            }
        }
        self.blocks = blocks;
    }

    /// Triangularizes a 2×2 diagonal block whose eigenvalues are real.
    fn split_real_pair(&mut self, i: usize) {
        let (a, b, c, d) = (
            self.t[(i, i)],
            self.t[(i, i + 1)],
            self.t[(i + 1, i)],
            self.t[(i + 1, i + 1)],
        );
        let disc = (0.25 * (a - d) * (a - d) + b * c).max(0.0).sqrt();
        let mean = 0.5 * (a + d);
        let lambda = if mean >= 0.0 { mean + disc } else { mean - disc };
        let v1 = (b, lambda - a);
        let v2 = (lambda - d, c);
        let (mut x, mut y) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
        let norm = x.hypot(y);
        if norm == 0.0 {
            self.t[(i + 1, i)] = 0.0;
            return;
        }
        x /= norm;
        y /= norm;
        let g = DMatrix::from_row_slice(2, 2, &[x, -y, y, x]);
        self.apply_local(i, &g);
        self.t[(i + 1, i)] = 0.0;
    }

    /// Applies the orthogonal similarity `G` acting on rows/columns
    /// `k..k+G.nrows()` to `T` and accumulates it into `Z`.
    fn apply_local(&mut self, k: usize, g: &DMatrix<f64>) {
        let m = g.nrows();
        let n = self.t.nrows();
        let rows = self.t.view((k, 0), (m, n)).into_owned();
        self.t.view_mut((k, 0), (m, n)).copy_from(&(g.transpose() * rows));
        let cols = self.t.view((0, k), (n, m)).into_owned();
        self.t.view_mut((0, k), (n, m)).copy_from(&(cols * g));
        let zc = self.z.view((0, k), (n, m)).into_owned();
        self.z.view_mut((0, k), (n, m)).copy_from(&(zc * g));
    }

    /// Real part of the eigenvalue(s) carried by block `b`.
    pub fn block_real_part(&self, b: usize) -> f64 {
        let (s, size) = self.blocks[b];
        if size == 1 {
            self.t[(s, s)]
        } else {
            0.5 * (self.t[(s, s)] + self.t[(s + 1, s + 1)])
        }
    }

    /// Eigenvalues as `(re, im)` pairs.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.t.nrows());
        for &(s, size) in &self.blocks {
            if size == 1 {
                out.push((self.t[(s, s)], 0.0));
            } else {
                let (a, b, c, d) = (
                    self.t[(s, s)],
                    self.t[(s, s + 1)],
                    self.t[(s + 1, s)],
                    self.t[(s + 1, s + 1)],
                );
                let re = 0.5 * (a + d);
                let im = (-(0.25 * (a - d) * (a - d) + b * c)).max(0.0).sqrt();
                out.push((re, im));
                out.push((re, -im));
            }
        }
        out
    }

    /// Swaps diagonal blocks `b` and `b + 1` by an orthogonal similarity.
    fn swap_blocks(&mut self, b: usize) -> Result<()> {
        let (k, p) = self.blocks[b];
        let (_, q) = self.blocks[b + 1];
        let t11 = self.t.view((k, k), (p, p)).into_owned();
        let t12 = self.t.view((k, k + p), (p, q)).into_owned();
        let t22 = self.t.view((k + p, k + p), (q, q)).into_owned();
        // T11 X − X T22 = T12
        let x = solve_small_sylvester(&t11, &(-t22), &t12)
            .ok_or_else(|| Error::Numerical("block swap failed: blocks share an eigenvalue".into()))?;
        let mut basis = DMatrix::zeros(p + q, q);
        basis.view_mut((0, 0), (p, q)).copy_from(&(-x));
        basis.view_mut((p, 0), (q, q)).fill_with_identity();
        let g = orthonormal_completion(&basis.qr().q());
        self.apply_local(k, &g);
        for r in k + q..k + p + q {
            for c in k..k + q {
                self.t[(r, c)] = 0.0;
            }
        }
        self.blocks[b] = (k, q);
        self.blocks[b + 1] = (k + q, p);
        Ok(())
    }

    /// Reorders the decomposition so that every block selected by `select`
    /// precedes every unselected block. Returns the total dimension of the
    /// selected leading subspace.
    pub fn reorder<F: Fn(f64) -> bool>(&mut self, select: F) -> Result<usize> {
        loop {
            let mut swapped = false;
            for b in 0..self.blocks.len().saturating_sub(1) {
                let here = select(self.block_real_part(b));
                let next = select(self.block_real_part(b + 1));
                if !here && next {
                    self.swap_blocks(b)?;
                    swapped = true;
                }
            }
            if !swapped {
                break;
            }
        }
        Ok(self
            .blocks
            .iter()
            .enumerate()
            .filter(|(b, _)| select(self.block_real_part(*b)))
            .map(|(_, (_, size))| *size)
            .sum())
    }
}

/// Largest real part over the spectrum of a square matrix.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    let schur = RealSchur::new(a)?;
    Ok(schur
        .eigenvalues()
        .iter()
        .map(|(re, _)| *re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Formats a float the way C's `%.17g` does.
pub fn fmt_g17(x: f64) -> String {
    const PREC: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PREC).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PREC - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
