//! QSR supply rates, their named special cases and supply integrals over
//! sampled signals.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::asymmetry;

/// Largest relative asymmetry accepted (and then symmetrized away) by the
/// triple constructor.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Default absolute tolerance used by [`classify`].
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Supply rate `w(u, y) = yᵀQy + 2yᵀSu + uᵀRu`.
#[derive(Debug, Clone, PartialEq)]
pub struct QsrTriple {
    q: DMatrix<f64>,
    s: DMatrix<f64>,
    r: DMatrix<f64>,
    asymmetry: f64,
}

impl QsrTriple {
    /// Builds a triple, symmetrizing `Q` and `R`.
    ///
    /// Fails when the shapes disagree or when either matrix is asymmetric
    /// beyond [`SYMMETRY_TOL`] relative to its norm.
    pub fn new(q: DMatrix<f64>, s: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let n_y = q.nrows();
        let n_u = r.nrows();
        if n_y == 0 || n_u == 0 {
            return Err(Error::dim("supply-rate matrices must be non-empty"));
        }
        if !q.is_square() || !r.is_square() {
            return Err(Error::dim("Q and R must be square"));
        }
        if s.shape() != (n_y, n_u) {
            return Err(Error::dim(format!(
                "S is {}x{} but Q, R imply {}x{}",
                s.nrows(),
                s.ncols(),
                n_y,
                n_u
            )));
        }
        if q.iter().chain(s.iter()).chain(r.iter()).any(|v| !v.is_finite()) {
            return Err(Error::param("supply-rate matrices contain non-finite entries"));
        }
        let aq = asymmetry(&q);
        if aq > SYMMETRY_TOL {
            return Err(Error::NotSymmetric {
                name: "Q",
                residual: aq,
            });
        }
        let ar = asymmetry(&r);
        if ar > SYMMETRY_TOL {
            return Err(Error::NotSymmetric {
                name: "R",
                residual: ar,
            });
        }
        Ok(QsrTriple {
            q: crate::linalg::symmetrize(&q),
            s,
            r: crate::linalg::symmetrize(&r),
            asymmetry: aq.max(ar),
        })
    }

    /// The triple of a named special case with `n`-dimensional identity blocks.
    pub fn special(case: SpecialCase, n: usize) -> Result<Self> {
        case.validate()?;
        if n == 0 {
            return Err(Error::param("dimension must be positive"));
        }
        let i = DMatrix::<f64>::identity(n, n);
        let z = DMatrix::<f64>::zeros(n, n);
        let (q, s, r) = match case {
            SpecialCase::Passive => (z.clone(), &i * 0.5, z),
            SpecialCase::Isp { delta } => (z, &i * 0.5, &i * -delta),
            SpecialCase::Osp { epsilon } => (&i * -epsilon, &i * 0.5, z),
            SpecialCase::Vsp { epsilon, delta } => (&i * -epsilon, &i * 0.5, &i * -delta),
            SpecialCase::FiniteL2Gain { gamma } => (-&i, z, &i * (gamma * gamma)),
            SpecialCase::Conic { center, radius } => (-&i, &i * center, &i * (radius * radius - center * center)),
            SpecialCase::General => return Err(Error::param("the general case has no canonical triple")),
        };
        QsrTriple::new(q, s, r)
    }

    /// Finite L2 gain triple `(−I, 0, γ²I)` for possibly non-square systems.
    pub fn finite_l2_gain(gamma: f64, n_y: usize, n_u: usize) -> Result<Self> {
        SpecialCase::FiniteL2Gain { gamma }.validate()?;
        QsrTriple::new(
            -DMatrix::identity(n_y, n_y),
            DMatrix::zeros(n_y, n_u),
            DMatrix::identity(n_u, n_u) * (gamma * gamma),
        )
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn n_y(&self) -> usize {
        self.q.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.r.nrows()
    }

    /// Relative asymmetry removed from `Q` and `R` at construction.
    pub fn asymmetry_residual(&self) -> f64 {
        self.asymmetry
    }

    /// Pointwise supply rate.
    pub fn rate(&self, u: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let qy = &self.q * y;
        let su = &self.s * u;
        let ru = &self.r * u;
        y.dot(&qy) + 2.0 * y.dot(&su) + u.dot(&ru)
    }

    /// `(αQ + βQ', αS + βS', αR + βR')`, used to check linearity.
    pub fn combine(&self, alpha: f64, other: &QsrTriple, beta: f64) -> Result<Self> {
        QsrTriple::new(
            &self.q * alpha + &other.q * beta,
            &self.s * alpha + &other.s * beta,
            &self.r * alpha + &other.r * beta,
        )
    }

    /// Largest absolute entrywise difference to another triple of equal shape.
    pub fn max_abs_diff(&self, other: &QsrTriple) -> f64 {
        if self.q.shape() != other.q.shape() || self.s.shape() != other.s.shape() {
            return f64::INFINITY;
        }
        let d = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).abs().max();
        d(&self.q, &other.q).max(d(&self.s, &other.s)).max(d(&self.r, &other.r))
    }
}

/// Named special cases of the QSR supply rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecialCase {
    /// `(0, ½I, 0)`
    Passive,
    /// Input strictly passive: `(0, ½I, −δI)`.
    Isp {
        delta: f64,
    },
    /// Output strictly passive: `(−εI, ½I, 0)`.
    Osp {
        epsilon: f64,
    },
    /// Very strictly passive: `(−εI, ½I, −δI)`.
    Vsp {
        epsilon: f64,
        delta: f64,
    },
    /// `(−I, 0, γ²I)`.
    FiniteL2Gain {
        gamma: f64,
    },
    /// Inside the cone with center `c` and radius `r`: `(−I, cI, (r² − c²)I)`.
    Conic {
        center: f64,
        radius: f64,
    },
    General,
}

/// Discriminant of [`SpecialCase`] without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpecialKind {
    Passive,
    Isp,
    Osp,
    Vsp,
    FiniteL2Gain,
    Conic,
    General,
}

impl SpecialCase {
    /// Conic sector `[a, b]`: center `(a + b)/2`, radius `|b − a|/2`.
    pub fn conic_from_bounds(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::param(format!("conic bounds need a < b, got a={a}, b={b}")));
        }
        let center = 0.5 * (a + b);
        let radius = (center * center - a * b).sqrt();
        Ok(SpecialCase::Conic { center, radius })
    }

    /// Sector bounds `(a, b) = (c − r, c + r)` of a conic case.
    pub fn conic_bounds(&self) -> Option<(f64, f64)> {
        match *self {
            SpecialCase::Conic { center, radius } => Some((center - radius, center + radius)),
            _ => None,
        }
    }

    pub fn kind(&self) -> SpecialKind {
        match self {
            SpecialCase::Passive => SpecialKind::Passive,
            SpecialCase::Isp { .. } => SpecialKind::Isp,
            SpecialCase::Osp { .. } => SpecialKind::Osp,
            SpecialCase::Vsp { .. } => SpecialKind::Vsp,
            SpecialCase::FiniteL2Gain { .. } => SpecialKind::FiniteL2Gain,
            SpecialCase::Conic { .. } => SpecialKind::Conic,
            SpecialCase::General => SpecialKind::General,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            SpecialCase::Passive | SpecialCase::General => Ok(()),
            SpecialCase::Isp { delta } => positive("delta", delta),
            SpecialCase::Osp { epsilon } => positive("epsilon", epsilon),
            SpecialCase::Vsp { epsilon, delta } => {
                positive("epsilon", epsilon)?;
                positive("delta", delta)
            }
            SpecialCase::FiniteL2Gain { gamma } => positive("gamma", gamma),
            SpecialCase::Conic { center, radius } => {
                positive("conic radius", radius)?;
                if center.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("conic center must be finite"))
                }
            }
        }
    }
}

impl fmt::Display for SpecialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpecialKind::Passive => "passive",
            SpecialKind::Isp => "isp",
            SpecialKind::Osp => "osp",
            SpecialKind::Vsp => "vsp",
            SpecialKind::FiniteL2Gain => "finite-l2",
            SpecialKind::Conic => "conic",
            SpecialKind::General => "general",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SpecialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "passive" => SpecialKind::Passive,
            "isp" => SpecialKind::Isp,
            "osp" => SpecialKind::Osp,
            "vsp" => SpecialKind::Vsp,
            "finite-l2" | "finite_l2" | "l2" => SpecialKind::FiniteL2Gain,
            "conic" => SpecialKind::Conic,
            "general" => SpecialKind::General,
            other => return Err(Error::param(format!("unknown special case '{other}'"))),
        })
    }
}

impl fmt::Display for SpecialCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SpecialCase::Passive => write!(f, "passive"),
            SpecialCase::Isp { delta } => write!(f, "isp(delta={delta})"),
            SpecialCase::Osp { epsilon } => write!(f, "osp(epsilon={epsilon})"),
            SpecialCase::Vsp { epsilon, delta } => {
                write!(f, "vsp(epsilon={epsilon}, delta={delta})")
            }
            SpecialCase::FiniteL2Gain { gamma } => write!(f, "finite-l2(gamma={gamma})"),
            SpecialCase::Conic { center, radius } => {
                write!(f, "conic(center={center}, radius={radius})")
            }
            SpecialCase::General => write!(f, "general"),
        }
    }
}

/// If `m` is `αI` within `tol` (entrywise), returns `α`.
fn scalar_identity(m: &DMatrix<f64>, tol: f64) -> Option<f64> {
    if !m.is_square() {
        return None;
    }
    let n = m.nrows();
    let alpha = (0..n).map(|k| m[(k, k)]).sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { alpha } else { 0.0 };
            if (m[(i, j)] - target).abs() > tol {
                return None;
            }
        }
    }
    Some(alpha)
}

/// Returns the most specific special case matching `triple` within `tol`.
pub fn classify(triple: &QsrTriple, tol: f64) -> SpecialCase {
    let zero = |m: &DMatrix<f64>| m.iter().all(|v| v.abs() <= tol);
    let near = |a: f64, b: f64| (a - b).abs() <= tol;

    if zero(triple.s()) {
        if let (Some(q), Some(r)) = (scalar_identity(triple.q(), tol), scalar_identity(triple.r(), tol)) {
            if near(q, -1.0) && r > tol {
                return SpecialCase::FiniteL2Gain { gamma: r.sqrt() };
            }
        }
        return SpecialCase::General;
    }
    if triple.n_u() != triple.n_y() {
        return SpecialCase::General;
    }
    let (Some(q), Some(s), Some(r)) = (
        scalar_identity(triple.q(), tol),
        scalar_identity(triple.s(), tol),
        scalar_identity(triple.r(), tol),
    ) else {
        return SpecialCase::General;
    };
    if near(s, 0.5) {
        let q_zero = near(q, 0.0);
        let r_zero = near(r, 0.0);
        if q < -tol && r < -tol {
            return SpecialCase::Vsp { epsilon: -q, delta: -r };
        }
        if q_zero && r_zero {
            return SpecialCase::Passive;
        }
        if q_zero && r < -tol {
            return SpecialCase::Isp { delta: -r };
        }
        if r_zero && q < -tol {
            return SpecialCase::Osp { epsilon: -q };
        }
    }
    if near(q, -1.0) {
        let r2 = r + s * s;
        if r2 > tol * tol {
            return SpecialCase::Conic {
                center: s,
                radius: r2.sqrt(),
            };
        }
    }
    SpecialCase::General
}

/// Vector-valued signal sampled on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    grid: Vec<f64>,
    values: Vec<DVector<f64>>,
}

impl SampledSignal {
    pub fn new(grid: Vec<f64>, values: Vec<DVector<f64>>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::param("signal grid is empty"));
        }
        if grid.len() != values.len() {
            return Err(Error::dim(format!(
                "{} time stamps but {} samples",
                grid.len(),
                values.len()
            )));
        }
        check_grid(&grid)?;
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::dim("signal samples differ in dimension"));
        }
        Ok(SampledSignal { grid, values })
    }

    /// Samples `f` on `grid`.
    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> DVector<f64>) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect();
        SampledSignal::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("time grid contains non-finite stamps"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("time grid must be strictly increasing"));
    }
    Ok(())
}

fn check_pair(u: &SampledSignal, y: &SampledSignal, triple: &QsrTriple) -> Result<()> {
    if u.grid != y.grid {
        return Err(Error::dim("input and output signals are on different grids"));
    }
    if u.dim() != triple.n_u() || y.dim() != triple.n_y() {
        return Err(Error::dim(format!(
            "signals have n_u={}, n_y={} but the triple expects n_u={}, n_y={}",
            u.dim(),
            y.dim(),
            triple.n_u(),
            triple.n_y()
        )));
    }
    Ok(())
}

/// Supply rate evaluated at every stamp.
pub fn supply_rates(u: &SampledSignal, y: &SampledSignal, triple: &QsrTriple) -> Result<Vec<f64>> {
    check_pair(u, y, triple)?;
    Ok(u.values
        .iter()
        .zip(&y.values)
        .map(|(uk, yk)| triple.rate(uk, yk))
        .collect())
}

/// Running trapezoidal supply integral `∫₀^{t_k} w dt` at every stamp
/// (the first entry is 0).
pub fn supply_prefixes(u: &SampledSignal, y: &SampledSignal, triple: &QsrTriple) -> Result<Vec<f64>> {
    let w = supply_rates(u, y, triple)?;
    Ok(cumulative_trapezoid(u.grid(), &w))
}

pub(crate) fn cumulative_trapezoid(grid: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..w.len() {
        acc += 0.5 * (grid[k] - grid[k - 1]) * (w[k] + w[k - 1]);
        out.push(acc);
    }
    out
}

/// Integral of the piecewise-linear interpolant of `w` over `[grid[0], t]`.
fn integrate_linear_to(grid: &[f64], w: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..grid.len() {
        let (t0, t1) = (grid[k - 1], grid[k]);
        if t >= t1 {
            acc += 0.5 * (t1 - t0) * (w[k] + w[k - 1]);
        } else {
            if t > t0 {
                let wt = w[k - 1] + (w[k] - w[k - 1]) * (t - t0) / (t1 - t0);
                acc += 0.5 * (t - t0) * (wt + w[k - 1]);
            }
            break;
        }
    }
    acc
}

/// Trapezoidal approximation of `∫_{t₀}^{T} (yᵀQy + 2yᵀSu + uᵀRu) dt`, where
/// `t₀` is the first grid stamp. A `T` between stamps integrates the
/// linear interpolant of the integrand over the partial interval.
pub fn supply_integral(u: &SampledSignal, y: &SampledSignal, triple: &QsrTriple, t_end: f64) -> Result<f64> {
    supply_integral_between(u, y, triple, u.grid[0], t_end)
}

/// Supply integral over `[t_start, t_end]` within the grid span.
pub fn supply_integral_between(
    u: &SampledSignal,
    y: &SampledSignal,
    triple: &QsrTriple,
    t_start: f64,
    t_end: f64,
) -> Result<f64> {
    let w = supply_rates(u, y, triple)?;
    let (first, last) = (u.grid[0], *u.grid.last().unwrap());
    let eps = 1e-12 * (1.0 + last.abs());
    for t in [t_start, t_end] {
        if t < first - eps || t > last + eps {
            return Err(Error::param(format!(
                "time {t} outside the signal span [{first}, {last}]"
            )));
        }
    }
    if t_end < t_start {
        return Err(Error::param("integration window is reversed"));
    }
    Ok(integrate_linear_to(&u.grid, &w, t_end) - integrate_linear_to(&u.grid, &w, t_start))
}
