//! Supply rate of a gain-scheduled parallel interconnection from the supply
//! rates of its subsystems and their scheduling matrices.
//!
//! Subsystem `i` receives `u_i = Φ_{u,i}(t) u` and contributes
//! `Φ_{y,i}(t) y_i` to the output `y = Σ_i Φ_{y,i} y_i`. Suprema and infima
//! over time are taken on the shared grid of the scheduling bank.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{max_sym_eig, sigma_max, sigma_min_columns};
use crate::qsr::{classify, supply_prefixes, QsrTriple, SampledSignal, SpecialCase, SpecialKind, CLASSIFY_TOL};
use crate::scheduling::{
    activity, check_bank, sigma_nu, stacked_sigma, sv_bounds, verify_pseudo_commute, SchedulingFamily, Side, SvBounds,
};

/// Tolerance on `λ_max(Q_i)` and `λ_max(R_i)` sign decisions.
pub const SIGN_TOL: f64 = 1e-12;

/// Pseudo-commutation tolerance, relative to `max(1, ‖S‖₂ · sup_t max(‖Φ_u‖₂, ‖Φ_y‖₂))`.
pub const COMMUTE_TOL: f64 = 1e-10;

/// Which result produced a composed supply rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Negative definite `Q_i`, arbitrary `S_i`.
    DistinctS,
    /// Negative semidefinite `Q_i`, common `S`.
    CommonS,
    /// Closed-form result for a bank of one special case.
    Special(SpecialKind),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::DistinctS => write!(f, "theorem-1 (negative definite Q_i, distinct S_i)"),
            Method::CommonS => write!(f, "theorem-2 (semidefinite Q_i, common S)"),
            Method::Special(k) => write!(f, "special case {k}"),
        }
    }
}

/// What can be said about the sign of the composed `δ` in `R = δI`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaSign {
    /// Only positive `λ_max(R_i)`: `δ ≥ 0`.
    NonNegative,
    /// As above and some input scheduling matrix of that group is nonzero: `δ > 0`.
    Positive,
    /// Only negative `λ_max(R_i)`: `δ ≤ 0`.
    NonPositive,
    /// As above and that group is strongly active: `δ < 0`.
    Negative,
    /// All `λ_max(R_i) = 0`: `δ = 0`.
    Zero,
    /// Both signs present; the sign of `δ` is not determined.
    Indeterminate,
}

impl fmt::Display for DeltaSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DeltaSign::NonNegative => "case 1 (delta >= 0)",
            DeltaSign::Positive => "case 1.1 (delta > 0)",
            DeltaSign::NonPositive => "case 2 (delta <= 0)",
            DeltaSign::Negative => "case 2.1 (delta < 0)",
            DeltaSign::Zero => "case 3 (delta = 0)",
            DeltaSign::Indeterminate => "indeterminate",
        };
        f.write_str(s)
    }
}

/// Per-subsystem quantities entering a composition.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemTerms {
    /// Family index of the subsystem.
    pub index: usize,
    /// `−λ_max(Q_i)`.
    pub epsilon: f64,
    /// `λ_max(R_i)`.
    pub lambda_max_r: f64,
    /// Input-side term `δ_i` (definition depends on the method).
    pub delta: f64,
    pub sigma_bar_y: f64,
    pub sigma_bar_u: f64,
    pub nu_bar_u: f64,
    pub nu_bar_y: f64,
    /// Largest singular value of `S_i`.
    pub sigma_s: f64,
    /// Pseudo-commutation residual of the family against `S_i`.
    pub commute_residual: f64,
}

/// Composed supply rate with every intermediate quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionReport {
    pub composed: QsrTriple,
    pub method: Method,
    pub classification: SpecialCase,
    pub subsystems: Vec<SubsystemTerms>,
    pub epsilon_min: f64,
    /// Composed `ε` with `Q = −εI` where applicable.
    pub epsilon: Option<f64>,
    /// Composed `δ` with `R = δI` (or `R = −δI` for ISP/VSP) where applicable.
    pub delta: Option<f64>,
    pub delta_bar: Option<f64>,
    pub delta_hat: Option<f64>,
    pub s_bar: Option<DMatrix<f64>>,
    pub nu_s_bar: Option<f64>,
    pub sigma_bar_psi: Option<f64>,
    pub delta_max: Option<f64>,
    pub delta_min: Option<f64>,
    /// `sup_t Σ_{i∈R>0} σ_{u,i}²(t)`.
    pub sigma_bar_u_sum: Option<f64>,
    /// `inf_t Σ_{i∈R<0} ν_{u,i}²(t)`.
    pub nu_bar_u_sum: Option<f64>,
    pub r_positive: Vec<usize>,
    pub r_negative: Vec<usize>,
    pub r_zero: Vec<usize>,
    pub delta_sign: Option<DeltaSign>,
    pub gamma: Option<f64>,
    pub conic_center: Option<f64>,
    pub conic_radius: Option<f64>,
    pub notes: Vec<String>,
}

impl CompositionReport {
    fn new(composed: QsrTriple, method: Method, subsystems: Vec<SubsystemTerms>) -> Self {
        let classification = classify(&composed, CLASSIFY_TOL);
        CompositionReport {
            composed,
            method,
            classification,
            subsystems,
            epsilon_min: f64::NAN,
            epsilon: None,
            delta: None,
            delta_bar: None,
            delta_hat: None,
            s_bar: None,
            nu_s_bar: None,
            sigma_bar_psi: None,
            delta_max: None,
            delta_min: None,
            sigma_bar_u_sum: None,
            nu_bar_u_sum: None,
            r_positive: Vec::new(),
            r_negative: Vec::new(),
            r_zero: Vec::new(),
            delta_sign: None,
            gamma: None,
            conic_center: None,
            conic_radius: None,
            notes: Vec::new(),
        }
    }
}

fn check_inputs(triples: &[QsrTriple], bank: &[SchedulingFamily]) -> Result<()> {
    if triples.is_empty() {
        return Err(Error::param("no subsystems to compose"));
    }
    if triples.len() != bank.len() {
        return Err(Error::dim(format!(
            "{} subsystems but {} scheduling families",
            triples.len(),
            bank.len()
        )));
    }
    check_bank(bank)?;
    for (t, f) in triples.iter().zip(bank) {
        if t.n_u() != f.n_u() || t.n_y() != f.n_y() {
            return Err(Error::dim(format!(
                "subsystem {} has n_u={}, n_y={} but its family has n_u={}, n_y={}",
                f.index(),
                t.n_u(),
                t.n_y(),
                f.n_u(),
                f.n_y()
            )));
        }
    }
    Ok(())
}

fn commute_residual(family: &SchedulingFamily, s: &DMatrix<f64>) -> Result<f64> {
    let b = sv_bounds(family);
    let tol = COMMUTE_TOL * (sigma_max(s) * b.sigma_bar_u.max(b.sigma_bar_y)).max(1.0);
    let (ok, res) = verify_pseudo_commute(family, s, tol);
    if ok {
        Ok(res)
    } else {
        Err(Error::theorem(format!(
            "scheduling family {} does not pseudo-commute with its S (residual {res:.3e}, tolerance {tol:.1e})",
            family.index()
        )))
    }
}

fn terms(triple: &QsrTriple, family: &SchedulingFamily, b: &SvBounds, commute: f64) -> SubsystemTerms {
    SubsystemTerms {
        index: family.index(),
        epsilon: -max_sym_eig(triple.q()),
        lambda_max_r: max_sym_eig(triple.r()),
        delta: 0.0,
        sigma_bar_y: b.sigma_bar_y,
        sigma_bar_u: b.sigma_bar_u,
        nu_bar_u: b.nu_bar_u,
        nu_bar_y: b.nu_bar_y,
        sigma_s: sigma_max(triple.s()),
        commute_residual: commute,
    }
}

/// Composition for subsystems with negative definite `Q_i` and possibly
/// different `S_i`:
/// `Q = −ε_min I`, `S = ε_min Σ (σ̄²_{y,i}/ε_i) S_i`,
/// `R = (N Σ (δ_i + σ̄⁴_{y,i} σ²_{S_i}/ε_i) − ε_min ν²_{S̄}) I`.
pub fn compose_theorem1(triples: &[QsrTriple], bank: &[SchedulingFamily]) -> Result<CompositionReport> {
    check_inputs(triples, bank)?;
    let n_u = triples[0].n_u();
    let n_y = triples[0].n_y();
    let mut subs = Vec::with_capacity(triples.len());
    for (t, f) in triples.iter().zip(bank) {
        let lq = max_sym_eig(t.q());
        if lq >= -SIGN_TOL {
            return Err(Error::theorem(format!(
                "subsystem {} has Q that is not negative definite (lambda_max = {lq:.6e})",
                f.index()
            )));
        }
        let res = commute_residual(f, t.s())?;
        let b = sv_bounds(f);
        let mut term = terms(t, f, &b, res);
        let lr = term.lambda_max_r;
        term.delta = if lr > 0.0 {
            lr * b.sigma_bar_y.powi(2) * b.sigma_bar_u.powi(2)
        } else {
            lr * b.sigma_bar_y.powi(2) * b.nu_bar_u.powi(2)
        };
        subs.push(term);
    }
    let n = triples.len() as f64;
    let eps_min = subs.iter().map(|s| s.epsilon).fold(f64::INFINITY, f64::min);
    let mut s_bar = DMatrix::zeros(n_y, n_u);
    for (t, s) in triples.iter().zip(&subs) {
        s_bar += t.s() * (s.sigma_bar_y.powi(2) / s.epsilon);
    }
    let nu_s_bar = sigma_min_columns(&s_bar);
    let delta_bar: f64 = subs
        .iter()
        .map(|s| s.delta + s.sigma_bar_y.powi(4) * s.sigma_s.powi(2) / s.epsilon)
        .sum();
    let delta_hat = n * delta_bar - eps_min * nu_s_bar * nu_s_bar;
    let composed = QsrTriple::new(
        DMatrix::identity(n_y, n_y) * -eps_min,
        &s_bar * eps_min,
        DMatrix::identity(n_u, n_u) * delta_hat,
    )?;
    let mut report = CompositionReport::new(composed, Method::DistinctS, subs);
    report.epsilon_min = eps_min;
    report.epsilon = Some(eps_min);
    report.delta = Some(delta_hat);
    report.delta_bar = Some(delta_bar);
    report.delta_hat = Some(delta_hat);
    report.s_bar = Some(s_bar);
    report.nu_s_bar = Some(nu_s_bar);
    if n_u > n_y {
        report
            .notes
            .push("S-bar has more columns than rows; its smallest singular value over inputs is 0".into());
    }
    for s in &report.subsystems {
        if s.sigma_bar_u == 0.0 && s.lambda_max_r > 0.0 {
            report.notes.push(format!(
                "subsystem {}: input scheduling is identically zero, delta_i = 0",
                s.index
            ));
        }
    }
    Ok(report)
}

struct InputSums {
    sigma_sum: f64,
    nu_sum: f64,
    pos_ever_nonzero: bool,
    neg_always_full_rank: bool,
}

fn input_sums(bank: &[SchedulingFamily], pos: &[usize], neg: &[usize], full_rank: &[Vec<usize>]) -> InputSums {
    let mut sigma_sum = 0.0f64;
    let mut nu_sum = f64::INFINITY;
    let mut pos_ever_nonzero = false;
    let mut neg_always_full_rank = true;
    for (k, rank_set) in full_rank.iter().enumerate().take(bank[0].len()) {
        let mut sp = 0.0;
        for &i in pos {
            let m = &bank[i].phi_u()[k];
            let (s, _) = sigma_nu(m);
            sp += s * s;
            if !crate::scheduling::is_zero(m) {
                pos_ever_nonzero = true;
            }
        }
        let mut sn = 0.0;
        for &i in neg {
            let (_, v) = sigma_nu(&bank[i].phi_u()[k]);
            sn += v * v;
        }
        if !neg.iter().any(|i| rank_set.contains(i)) {
            neg_always_full_rank = false;
        }
        sigma_sum = sigma_sum.max(sp);
        nu_sum = nu_sum.min(sn);
    }
    if neg.is_empty() {
        nu_sum = 0.0;
    }
    InputSums {
        sigma_sum,
        nu_sum,
        pos_ever_nonzero,
        neg_always_full_rank,
    }
}

/// Composition for subsystems with negative semidefinite `Q_i` sharing one
/// `S`: `Q = −(ε_min/σ̄²_Ψ) I`, `S` unchanged and `R = δI` with
/// `δ = δ_max σ̄_u − δ_min ν̄_u`.
pub fn compose_theorem2(triples: &[QsrTriple], bank: &[SchedulingFamily]) -> Result<CompositionReport> {
    check_inputs(triples, bank)?;
    let s = triples[0].s().clone();
    for (t, f) in triples.iter().zip(bank) {
        let diff = (t.s() - &s).abs().max();
        if diff > 1e-12 {
            return Err(Error::theorem(format!(
                "subsystem {} does not share the common S (max difference {diff:.3e})",
                f.index()
            )));
        }
        let lq = max_sym_eig(t.q());
        if lq > SIGN_TOL {
            return Err(Error::theorem(format!(
                "subsystem {} has Q with a positive eigenvalue ({lq:.6e})",
                f.index()
            )));
        }
    }
    let out_act = activity(bank, Side::Output)?;
    if !out_act.active {
        return Err(Error::theorem("output scheduling matrices are not active"));
    }
    compose_common_s(triples, bank, &s)
}

fn compose_common_s(triples: &[QsrTriple], bank: &[SchedulingFamily], s: &DMatrix<f64>) -> Result<CompositionReport> {
    let n_u = triples[0].n_u();
    let n_y = triples[0].n_y();
    let mut subs = Vec::with_capacity(triples.len());
    for (t, f) in triples.iter().zip(bank) {
        let res = commute_residual(f, s)?;
        let b = sv_bounds(f);
        let mut term = terms(t, f, &b, res);
        term.epsilon = term.epsilon.max(0.0);
        term.delta = term.lambda_max_r.abs();
        subs.push(term);
    }
    let eps_min = subs.iter().map(|s| s.epsilon).fold(f64::INFINITY, f64::min);
    let sigma_psi = stacked_sigma(bank)?;
    let epsilon = if eps_min == 0.0 {
        0.0
    } else {
        eps_min / (sigma_psi * sigma_psi)
    };

    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut zero = Vec::new();
    for (i, t) in subs.iter().enumerate() {
        if t.lambda_max_r > SIGN_TOL {
            pos.push(i);
        } else if t.lambda_max_r < -SIGN_TOL {
            neg.push(i);
        } else {
            zero.push(i);
        }
    }
    let delta_max = pos.iter().map(|&i| subs[i].delta).fold(0.0, f64::max);
    let delta_min = if neg.is_empty() {
        0.0
    } else {
        neg.iter().map(|&i| subs[i].delta).fold(f64::INFINITY, f64::min)
    };
    let in_act = activity(bank, Side::Input)?;
    let sums = input_sums(bank, &pos, &neg, &in_act.full_rank);
    let delta = delta_max * sums.sigma_sum - delta_min * sums.nu_sum;
    let sign = match (pos.is_empty(), neg.is_empty()) {
        (false, true) if sums.pos_ever_nonzero => DeltaSign::Positive,
        (false, true) => DeltaSign::NonNegative,
        (true, false) if sums.neg_always_full_rank => DeltaSign::Negative,
        (true, false) => DeltaSign::NonPositive,
        (true, true) => DeltaSign::Zero,
        (false, false) => DeltaSign::Indeterminate,
    };
    let composed = QsrTriple::new(
        DMatrix::identity(n_y, n_y) * -epsilon,
        s.clone(),
        DMatrix::identity(n_u, n_u) * delta,
    )?;
    let mut report = CompositionReport::new(composed, Method::CommonS, subs);
    report.epsilon_min = eps_min;
    report.epsilon = Some(epsilon);
    report.delta = Some(delta);
    report.sigma_bar_psi = Some(sigma_psi);
    report.delta_max = Some(delta_max);
    report.delta_min = Some(delta_min);
    report.sigma_bar_u_sum = Some(sums.sigma_sum);
    report.nu_bar_u_sum = Some(sums.nu_sum);
    report.r_positive = pos.iter().map(|&i| bank[i].index()).collect();
    report.r_negative = neg.iter().map(|&i| bank[i].index()).collect();
    report.r_zero = zero.iter().map(|&i| bank[i].index()).collect();
    report.delta_sign = Some(sign);
    Ok(report)
}

/// Picks the common-`S` composition when all `S_i` agree, every `Q_i` is
/// negative semidefinite and the output scheduling is active; otherwise the
/// distinct-`S` composition.
pub fn compose_auto(triples: &[QsrTriple], bank: &[SchedulingFamily]) -> Result<CompositionReport> {
    check_inputs(triples, bank)?;
    let s = triples[0].s();
    let common = triples.iter().all(|t| (t.s() - s).abs().max() <= 1e-12);
    let semidef = triples.iter().all(|t| max_sym_eig(t.q()) <= SIGN_TOL);
    if common && semidef && activity(bank, Side::Output)?.active {
        compose_theorem2(triples, bank)
    } else {
        compose_theorem1(triples, bank)
    }
}

/// Closed-form composition of a bank whose subsystems all share one special
/// case (with per-subsystem parameters).
pub fn compose_special(cases: &[SpecialCase], bank: &[SchedulingFamily]) -> Result<CompositionReport> {
    let first = cases
        .first()
        .ok_or_else(|| Error::param("no subsystems to compose"))?
        .kind();
    if let Some(c) = cases.iter().find(|c| c.kind() != first) {
        return Err(Error::param(format!("mixed special cases: {first} and {}", c.kind())));
    }
    if first == SpecialKind::General {
        return Err(Error::param("the general case has no closed-form composition"));
    }
    if cases.len() != bank.len() {
        return Err(Error::dim(format!(
            "{} subsystems but {} scheduling families",
            cases.len(),
            bank.len()
        )));
    }
    check_bank(bank)?;
    let n_u = bank[0].n_u();
    let n_y = bank[0].n_y();
    let triples = cases
        .iter()
        .map(|&c| match c {
            SpecialCase::FiniteL2Gain { gamma } => QsrTriple::finite_l2_gain(gamma, n_y, n_u),
            _ if n_u != n_y => Err(Error::dim(format!(
                "{first} subsystems need square scheduling, got n_u={n_u}, n_y={n_y}"
            ))),
            _ => QsrTriple::special(c, n_u),
        })
        .collect::<Result<Vec<_>>>()?;
    check_inputs(&triples, bank)?;
    let n = n_u;
    let half = DMatrix::identity(n, n) * 0.5;

    match first {
        SpecialKind::Passive => {
            // Q_i = 0, so the output activity requirement is not needed.
            let mut report = compose_common_s(&triples, bank, &half)?;
            report.epsilon = Some(0.0);
            report.composed = QsrTriple::special(SpecialCase::Passive, n)?;
            report.classification = SpecialCase::Passive;
            report.method = Method::Special(SpecialKind::Passive);
            Ok(report)
        }
        SpecialKind::Isp => {
            let in_act = activity(bank, Side::Input)?;
            if !in_act.strongly_active {
                return Err(Error::theorem("input scheduling matrices are not strongly active"));
            }
            let mut report = compose_common_s(&triples, bank, &half)?;
            let delta = isp_delta(cases, bank, &in_act.full_rank);
            report.delta = Some(delta);
            report.composed = QsrTriple::new(DMatrix::zeros(n, n), half, DMatrix::identity(n, n) * -delta)?;
            finish_special(report, SpecialKind::Isp)
        }
        SpecialKind::Osp => {
            require_output_active(bank)?;
            let mut report = compose_common_s(&triples, bank, &half)?;
            let eps = report.epsilon.unwrap();
            report.composed = QsrTriple::new(DMatrix::identity(n, n) * -eps, half, DMatrix::zeros(n, n))?;
            report.delta = Some(0.0);
            finish_special(report, SpecialKind::Osp)
        }
        SpecialKind::Vsp => {
            require_output_active(bank)?;
            let in_act = activity(bank, Side::Input)?;
            if !in_act.strongly_active {
                return Err(Error::theorem("input scheduling matrices are not strongly active"));
            }
            let mut report = compose_common_s(&triples, bank, &half)?;
            let eps = report.epsilon.unwrap();
            let delta = isp_delta(cases, bank, &in_act.full_rank);
            report.delta = Some(delta);
            report.composed = QsrTriple::new(DMatrix::identity(n, n) * -eps, half, DMatrix::identity(n, n) * -delta)?;
            finish_special(report, SpecialKind::Vsp)
        }
        SpecialKind::FiniteL2Gain => {
            require_output_active(bank)?;
            let zero_s = DMatrix::zeros(n_y, n_u);
            let mut report = compose_common_s(&triples, bank, &zero_s)?;
            let psi = report.sigma_bar_psi.unwrap();
            let sigma_u = report.sigma_bar_u_sum.unwrap();
            let gamma_max = cases
                .iter()
                .map(|c| match c {
                    SpecialCase::FiniteL2Gain { gamma } => *gamma,
                    _ => unreachable!(),
                })
                .fold(0.0, f64::max);
            let gamma_sq = psi * psi * sigma_u * gamma_max * gamma_max;
            report.gamma = Some(gamma_sq.sqrt());
            report.composed = QsrTriple::new(
                -DMatrix::identity(n_y, n_y),
                zero_s,
                DMatrix::identity(n_u, n_u) * gamma_sq,
            )?;
            report
                .notes
                .push("supply rate scaled by sigma_bar_psi^2 to normalize Q = -I".into());
            finish_special(report, SpecialKind::FiniteL2Gain)
        }
        SpecialKind::Conic => compose_conic(cases, &triples, bank),
        SpecialKind::General => unreachable!(),
    }
}

fn require_output_active(bank: &[SchedulingFamily]) -> Result<()> {
    if activity(bank, Side::Output)?.active {
        Ok(())
    } else {
        Err(Error::theorem("output scheduling matrices are not active"))
    }
}

fn finish_special(mut report: CompositionReport, kind: SpecialKind) -> Result<CompositionReport> {
    report.method = Method::Special(kind);
    report.classification = classify(&report.composed, CLASSIFY_TOL);
    Ok(report)
}

/// `δ_min · inf_t Σ_{i∈F_u(t)} ν²_{u,i}(t)`.
fn isp_delta(cases: &[SpecialCase], bank: &[SchedulingFamily], full_rank: &[Vec<usize>]) -> f64 {
    let delta_min = cases
        .iter()
        .map(|c| match c {
            SpecialCase::Isp { delta } | SpecialCase::Vsp { delta, .. } => *delta,
            _ => unreachable!(),
        })
        .fold(f64::INFINITY, f64::min);
    let mut inf = f64::INFINITY;
    for (k, set) in full_rank.iter().enumerate() {
        let sum: f64 = set
            .iter()
            .map(|&i| {
                let (_, v) = sigma_nu(&bank[i].phi_u()[k]);
                v * v
            })
            .sum();
        inf = inf.min(sum);
    }
    delta_min * inf
}

fn compose_conic(cases: &[SpecialCase], triples: &[QsrTriple], bank: &[SchedulingFamily]) -> Result<CompositionReport> {
    let n = bank[0].n_u();
    let mut subs = Vec::with_capacity(cases.len());
    let mut notes = Vec::new();
    let mut center = 0.0;
    let mut r_sq_sum = 0.0;
    for ((case, t), f) in cases.iter().zip(triples).zip(bank) {
        let SpecialCase::Conic { center: c, radius: r } = *case else {
            unreachable!()
        };
        let res = commute_residual(f, t.s())?;
        let b = sv_bounds(f);
        let sy = b.sigma_bar_y;
        let nu = b.nu_bar_u;
        if c.abs() > SIGN_TOL && (b.nu_bar_u - b.nu_bar_y).abs() > 1e-9 {
            notes.push(format!(
                "subsystem {}: input and output infimum singular values differ ({:.6e} vs {:.6e})",
                f.index(),
                b.nu_bar_u,
                b.nu_bar_y
            ));
        }
        let r_bar = if r > c.abs() {
            if c.abs() <= SIGN_TOL {
                sy * b.sigma_bar_u * r
            } else {
                sy * sy * r
            }
        } else {
            sy * (nu * nu * r * r + (sy * sy - nu * nu) * c * c).sqrt()
        };
        center += c * sy * sy;
        r_sq_sum += r_bar * r_bar;
        let mut term = terms(t, f, &b, res);
        term.delta = r_bar * r_bar - sy.powi(4) * c * c;
        subs.push(term);
    }
    let radius = (cases.len() as f64 * r_sq_sum).sqrt();
    let composed = QsrTriple::new(
        -DMatrix::identity(n, n),
        DMatrix::identity(n, n) * center,
        DMatrix::identity(n, n) * (radius * radius - center * center),
    )?;
    let mut report = CompositionReport::new(composed, Method::Special(SpecialKind::Conic), subs);
    report.epsilon_min = 1.0;
    report.epsilon = Some(1.0);
    report.conic_center = Some(center);
    report.conic_radius = Some(radius);
    report.notes = notes;
    Ok(report)
}

/// `true` iff the supply integral is at least `(v_T − v_0) − tol` at every
/// grid prefix.
pub fn verify_dissipation(
    triple: &QsrTriple,
    u: &SampledSignal,
    y: &SampledSignal,
    v0: f64,
    v_t: f64,
    tol: f64,
) -> Result<bool> {
    let prefixes = supply_prefixes(u, y, triple)?;
    Ok(prefixes.iter().all(|&w| w >= (v_t - v0) - tol))
}

/// Storage-series form: `∫₀^{t_k} w dt ≥ V(t_k) − V(t_0) − tol` for every `k`.
/// Returns the smallest margin found.
pub fn dissipation_margin(triple: &QsrTriple, u: &SampledSignal, y: &SampledSignal, storage: &[f64]) -> Result<f64> {
    if storage.len() != u.len() {
        return Err(Error::dim("storage series does not match the signal grid"));
    }
    let prefixes = supply_prefixes(u, y, triple)?;
    Ok(prefixes
        .iter()
        .zip(storage)
        .map(|(w, v)| w - (v - storage[0]))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn grid() -> Vec<f64> {
        (0..=20).map(|k| k as f64 * 0.05).collect()
    }

    fn ident(index: usize, n: usize) -> SchedulingFamily {
        SchedulingFamily::constant(index, grid(), DMatrix::identity(n, n), DMatrix::identity(n, n)).unwrap()
    }

    fn scalar(q: f64, s: f64, r: f64) -> QsrTriple {
        QsrTriple::new(
            DMatrix::from_element(1, 1, q),
            DMatrix::from_element(1, 1, s),
            DMatrix::from_element(1, 1, r),
        )
        .unwrap()
    }

    fn entries(t: &QsrTriple) -> (f64, f64, f64) {
        (t.q()[(0, 0)], t.s()[(0, 0)], t.r()[(0, 0)])
    }

    #[test]
    fn theorem1_single_osp_identity() {
        let rep = compose_theorem1(&[scalar(-1.0, 0.5, 0.0)], &[ident(1, 1)]).unwrap();
        let (q, s, r) = entries(&rep.composed);
        assert_abs_diff_eq!(q, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
        assert_eq!(rep.classification, SpecialCase::Osp { epsilon: 1.0 });
        assert_abs_diff_eq!(rep.nu_s_bar.unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn theorem1_two_identical() {
        let t = scalar(-1.0, 0.5, 0.0);
        let rep = compose_theorem1(&[t.clone(), t], &[ident(1, 1), ident(2, 1)]).unwrap();
        let (q, s, r) = entries(&rep.composed);
        assert_abs_diff_eq!(q, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn theorem1_conic_positive_r() {
        let rep = compose_theorem1(&[scalar(-1.0, 1.0, 3.0)], &[ident(1, 1)]).unwrap();
        assert_abs_diff_eq!(rep.subsystems[0].delta, 3.0, epsilon = 1e-15);
        // R = 1·(3 + 1) − 1·1 = 3
        assert_abs_diff_eq!(rep.composed.r()[(0, 0)], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn theorem1_rejects_semidefinite_q() {
        let passive = QsrTriple::special(SpecialCase::Passive, 1).unwrap();
        assert!(matches!(
            compose_theorem1(&[passive], &[ident(1, 1)]),
            Err(Error::TheoremPrecondition(_))
        ));
    }

    #[test]
    fn theorem2_passive_bank() {
        let p = QsrTriple::special(SpecialCase::Passive, 2).unwrap();
        let rep = compose_theorem2(&[p.clone(), p], &[ident(1, 2), ident(2, 2)]).unwrap();
        assert_eq!(rep.classification, SpecialCase::Passive);
        assert_eq!(rep.delta_sign, Some(DeltaSign::Zero));
    }

    #[test]
    fn theorem2_isp_bank() {
        let t1 = QsrTriple::special(SpecialCase::Isp { delta: 0.5 }, 1).unwrap();
        let t2 = QsrTriple::special(SpecialCase::Isp { delta: 0.2 }, 1).unwrap();
        let zero = SchedulingFamily::constant(2, grid(), DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)).unwrap();
        let rep = compose_theorem2(&[t1, t2], &[ident(1, 1), zero]).unwrap();
        // δ = −δ_min ν̄_u with ν̄_u = inf(1 + 0) = 1.
        assert_abs_diff_eq!(rep.composed.r()[(0, 0)], -0.2, epsilon = 1e-15);
        assert_eq!(rep.delta_sign, Some(DeltaSign::Negative));
        assert_eq!(rep.classification, SpecialCase::Isp { delta: 0.2 });
    }

    #[test]
    fn theorem2_osp_scalar_signals() {
        let t1 = QsrTriple::special(SpecialCase::Osp { epsilon: 1.0 }, 1).unwrap();
        let t2 = QsrTriple::special(SpecialCase::Osp { epsilon: 2.0 }, 1).unwrap();
        let h = 0.5f64.sqrt();
        let f1 = SchedulingFamily::scalar(1, grid(), 1, 1, |_| h).unwrap();
        let f2 = SchedulingFamily::scalar(2, grid(), 1, 1, |_| h).unwrap();
        let rep = compose_theorem2(&[t1, t2], &[f1, f2]).unwrap();
        assert_abs_diff_eq!(rep.epsilon.unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn theorem2_preconditions() {
        let a = QsrTriple::special(SpecialCase::Osp { epsilon: 1.0 }, 1).unwrap();
        let b = scalar(-1.0, 0.4, 0.0);
        assert!(matches!(
            compose_theorem2(&[a.clone(), b], &[ident(1, 1), ident(2, 1)]),
            Err(Error::TheoremPrecondition(_))
        ));
        let zero = SchedulingFamily::constant(1, grid(), DMatrix::identity(1, 1), DMatrix::zeros(1, 1)).unwrap();
        assert!(compose_theorem2(&[a], &[zero]).is_err());
        let pos_q = scalar(0.1, 0.5, 0.0);
        assert!(compose_theorem2(&[pos_q], &[ident(1, 1)]).is_err());
    }

    #[test]
    fn theorem2_indeterminate_sign() {
        let a = scalar(-1.0, 0.5, 0.3);
        let b = scalar(-1.0, 0.5, -0.4);
        let rep = compose_theorem2(&[a, b], &[ident(1, 1), ident(2, 1)]).unwrap();
        assert_eq!(rep.delta_sign, Some(DeltaSign::Indeterminate));
        assert_abs_diff_eq!(rep.delta.unwrap(), 0.3 - 0.4, epsilon = 1e-15);
    }

    #[test]
    fn special_conic_example() {
        let rep = compose_special(
            &[SpecialCase::Conic {
                center: 1.0,
                radius: 2.0,
            }],
            &[ident(1, 1)],
        )
        .unwrap();
        assert_abs_diff_eq!(rep.conic_center.unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.conic_radius.unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn special_vsp_orthogonal_pair() {
        // Φ₁ = Φ₂ = I/√2 (orthogonal scaled), both full rank at every stamp.
        let h = 0.5f64.sqrt();
        let f1 = SchedulingFamily::scalar(1, grid(), 2, 2, |_| h).unwrap();
        let f2 = SchedulingFamily::scalar(2, grid(), 2, 2, |_| h).unwrap();
        let cases = [
            SpecialCase::Vsp {
                epsilon: 1.0,
                delta: 0.3,
            },
            SpecialCase::Vsp {
                epsilon: 2.0,
                delta: 0.4,
            },
        ];
        let rep = compose_special(&cases, &[f1, f2]).unwrap();
        assert_abs_diff_eq!(rep.epsilon.unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.delta.unwrap(), 0.3, epsilon = 1e-14);
        assert_eq!(rep.classification.kind(), SpecialKind::Vsp);
    }

    #[test]
    fn special_mixed_rejected() {
        let cases = [SpecialCase::Passive, SpecialCase::Isp { delta: 1.0 }];
        assert!(compose_special(&cases, &[ident(1, 1), ident(2, 1)]).is_err());
    }

    #[test]
    fn passive_special_waives_activity() {
        let zero = SchedulingFamily::constant(1, grid(), DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)).unwrap();
        let rep = compose_special(&[SpecialCase::Passive], &[zero]).unwrap();
        assert_eq!(rep.classification, SpecialCase::Passive);
    }

    #[test]
    fn dissipation_examples() {
        let g = grid();
        let z = SampledSignal::from_fn(g.clone(), |_| DVector::zeros(1)).unwrap();
        let p = QsrTriple::special(SpecialCase::Passive, 1).unwrap();
        assert!(verify_dissipation(&p, &z, &z, 0.0, 0.0, 0.0).unwrap());
        let u = SampledSignal::from_fn(g.clone(), |_| DVector::from_element(1, 1.0)).unwrap();
        let y = SampledSignal::from_fn(g, |_| DVector::from_element(1, -1.0)).unwrap();
        assert!(!verify_dissipation(&p, &u, &y, 0.0, 0.0, 1e-6).unwrap());
    }
}
