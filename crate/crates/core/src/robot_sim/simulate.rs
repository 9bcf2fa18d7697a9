//! Closed-loop simulation of the prewrapped manipulator
//! `M q̈ = f_non − D q̇ + B̂ū − K_p e` under a gain-scheduled controller bank.

use nalgebra::{DMatrix, DVector};

use super::dynamics::{mass_matrix, nonlinear_forces};
use super::signals::{matrix_schedule, scalar_schedule};
use super::trajectory::Trajectory;
use crate::certification::LtiSystem;
use crate::error::{Error, Result};
use crate::scheduling::SchedulingFamily;
use crate::synthesis::{PlantModel, INPUTS, JOINTS};

/// State norm above which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// How the controller bank is scheduled.
#[derive(Clone, Copy)]
pub enum Schedule<'a> {
    /// Every controller sees `Φ_u = I`, `Φ_y = I`.
    Identity,
    /// `Φ = s_i(t) I` from the quartic signals.
    Scalar,
    /// `Φ_u = V Z̄_i(t) Vᵀ`, `Φ_y = Z̄₁₁,ᵢ(t)ᵀ`.
    Matrix,
    /// Sampled families, linearly interpolated in time.
    Families(&'a [SchedulingFamily]),
}

impl Schedule<'_> {
    fn matrices(&self, t: f64, count: usize) -> Result<Vec<(DMatrix<f64>, DMatrix<f64>)>> {
        let m = match self {
            Schedule::Identity => {
                vec![(DMatrix::identity(JOINTS, JOINTS), DMatrix::identity(INPUTS, INPUTS)); count]
            }
            Schedule::Scalar => scalar_schedule(t),
            Schedule::Matrix => matrix_schedule(t),
            Schedule::Families(f) => f.iter().map(|f| f.at_time(t)).collect(),
        };
        if m.len() != count {
            return Err(Error::dim(format!(
                "schedule provides {} families for {count} controllers",
                m.len()
            )));
        }
        Ok(m)
    }
}

/// Source of the scheduled input `ū`.
#[derive(Clone, Copy)]
pub enum Feedback<'a> {
    /// `ū ≡ 0`: prewrap only.
    None,
    /// Prescribed `ū(t)`.
    OpenLoop(&'a dyn Fn(f64) -> DVector<f64>),
    /// `ū = −Σ Φ_{y,i} K_i x_i` with `ẋ_i = A_i x_i + B_i Φ_{u,i} y_fb`.
    Scheduled {
        controllers: &'a [LtiSystem],
        schedule: Schedule<'a>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub dt: f64,
    pub horizon: f64,
    /// Feed `q̇ − θ̇_d` to the controllers instead of `q̇`.
    pub rate_feedforward: bool,
    /// Initial `(q, q̇)`; defaults to `(θ_d(0), 0)`.
    pub initial: Option<(DVector<f64>, DVector<f64>)>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            dt: 1e-3,
            horizon: 12.0,
            rate_feedforward: true,
            initial: None,
        }
    }
}

/// Time series of one closed-loop run; every series shares `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub t: Vec<f64>,
    pub q: Vec<DVector<f64>>,
    pub q_dot: Vec<DVector<f64>>,
    pub theta_d: Vec<DVector<f64>>,
    pub theta_d_dot: Vec<DVector<f64>>,
    pub u_bar: Vec<DVector<f64>>,
    pub tau: Vec<DVector<f64>>,
    /// `½q̇ᵀMq̇ + ½eᵀK_p e` with the true mass matrix.
    pub storage: Vec<f64>,
    /// `∫ (−q̇ᵀDq̇ + q̇ᵀB̂ū) dt`.
    pub supply: Vec<f64>,
}

impl SimResult {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn error(&self, k: usize) -> DVector<f64> {
        &self.q[k] - &self.theta_d[k]
    }

    pub fn error_rate(&self, k: usize) -> DVector<f64> {
        &self.q_dot[k] - &self.theta_d_dot[k]
    }

    pub fn max_abs_torque(&self) -> f64 {
        self.tau.iter().map(|v| v.amax()).fold(0.0, f64::max)
    }
}

struct Loop<'a> {
    model: &'a PlantModel,
    trajectory: &'a Trajectory,
    feedback: Feedback<'a>,
    rate_feedforward: bool,
    d: DMatrix<f64>,
    kp: DMatrix<f64>,
    b_hat: DMatrix<f64>,
    n_c: Vec<usize>,
}

struct Outputs {
    u_bar: DVector<f64>,
    tau: DVector<f64>,
}

impl Loop<'_> {
    fn state_len(&self) -> usize {
        2 * JOINTS + self.n_c.iter().sum::<usize>() + 1
    }

    fn deriv(&self, t: f64, x: &DVector<f64>) -> Result<(DVector<f64>, Outputs)> {
        let n = JOINTS;
        let q = x.rows(0, n).clone_owned();
        let qd = x.rows(n, n).clone_owned();
        let (th, th_dot) = self.trajectory.eval(t);
        let e = &q - &th;
        let mut dx = DVector::zeros(x.len());
        let u_bar = match self.feedback {
            Feedback::None => DVector::zeros(INPUTS),
            Feedback::OpenLoop(f) => f(t),
            Feedback::Scheduled { controllers, schedule } => {
                let y_fb = if self.rate_feedforward {
                    &qd - &th_dot
                } else {
                    qd.clone()
                };
                let phis = schedule.matrices(t, controllers.len())?;
                let mut u = DVector::zeros(INPUTS);
                let mut off = 2 * n;
                for (c, (phi_u, phi_y)) in controllers.iter().zip(&phis) {
                    let nc = c.n_x();
                    let xc = x.rows(off, nc);
                    let dxc = &c.a * xc + &c.b * (phi_u * &y_fb);
                    dx.rows_mut(off, nc).copy_from(&dxc);
                    u -= phi_y * (&c.c * xc);
                    off += nc;
                }
                u
            }
        };
        let tau = &self.b_hat * &u_bar - &self.kp * &e;
        let m = mass_matrix(self.model, q.as_slice(), false);
        let f = nonlinear_forces(self.model, q.as_slice(), qd.as_slice(), false);
        let rhs = f - &self.d * &qd + &tau;
        let qdd = m
            .cholesky()
            .ok_or_else(|| Error::Numerical(format!("mass matrix not positive definite at t = {t}")))?
            .solve(&rhs);
        dx.rows_mut(0, n).copy_from(&qd);
        dx.rows_mut(n, n).copy_from(&qdd);
        let last = x.len() - 1;
        dx[last] = qd.dot(&(&self.b_hat * &u_bar - &self.d * &qd));
        Ok((dx, Outputs { u_bar, tau }))
    }
}

fn check_model(model: &PlantModel) -> Result<()> {
    let pos = model
        .length
        .iter()
        .chain(&model.mass)
        .all(|v| v.is_finite() && *v > 0.0);
    let nonneg = model
        .damping
        .iter()
        .chain(&model.proportional_gain)
        .all(|v| v.is_finite() && *v >= 0.0);
    if pos && nonneg {
        Ok(())
    } else {
        Err(Error::param(
            "simulation needs positive lengths and masses, non-negative damping and gains",
        ))
    }
}

/// Fixed-step RK4 on the plant, controller and supply states together,
/// with the plant using the true link parameters.
pub fn simulate_closed_loop(
    model: &PlantModel,
    trajectory: &Trajectory,
    feedback: Feedback<'_>,
    opts: &SimOptions,
) -> Result<SimResult> {
    check_model(model)?;
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::param(format!("time step must be positive, got {}", opts.dt)));
    }
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::param(format!("horizon must be positive, got {}", opts.horizon)));
    }
    if trajectory.angles()[0].len() != JOINTS {
        return Err(Error::dim(format!("trajectory must have {JOINTS} joints")));
    }
    let n_c = match feedback {
        Feedback::Scheduled { controllers, .. } => {
            for c in controllers {
                if c.n_u() != JOINTS || c.n_y() != INPUTS {
                    return Err(Error::dim(format!(
                        "controllers must map {JOINTS} rates to {INPUTS} inputs, got {}→{}",
                        c.n_u(),
                        c.n_y()
                    )));
                }
            }
            controllers.iter().map(|c| c.n_x()).collect()
        }
        _ => Vec::new(),
    };
    let sys = Loop {
        model,
        trajectory,
        feedback,
        rate_feedforward: opts.rate_feedforward,
        d: model.damping_matrix(),
        kp: model.kp_matrix(),
        b_hat: PlantModel::b_hat(),
        n_c,
    };
    let steps = (opts.horizon / opts.dt).round() as usize;
    if steps == 0 {
        return Err(Error::param("horizon shorter than one time step"));
    }
    let dt = opts.horizon / steps as f64;

    let mut x = DVector::zeros(sys.state_len());
    let (q0, qd0) = match &opts.initial {
        Some((q, qd)) => (q.clone(), qd.clone()),
        None => (trajectory.eval(0.0).0, DVector::zeros(JOINTS)),
    };
    if q0.len() != JOINTS || qd0.len() != JOINTS {
        return Err(Error::dim("initial state must have one entry per joint"));
    }
    x.rows_mut(0, JOINTS).copy_from(&q0);
    x.rows_mut(JOINTS, JOINTS).copy_from(&qd0);

    let mut res = SimResult {
        t: Vec::with_capacity(steps + 1),
        q: Vec::with_capacity(steps + 1),
        q_dot: Vec::with_capacity(steps + 1),
        theta_d: Vec::with_capacity(steps + 1),
        theta_d_dot: Vec::with_capacity(steps + 1),
        u_bar: Vec::with_capacity(steps + 1),
        tau: Vec::with_capacity(steps + 1),
        storage: Vec::with_capacity(steps + 1),
        supply: Vec::with_capacity(steps + 1),
    };
    let kp = model.kp_matrix();
    let mut record = |t: f64, x: &DVector<f64>, out: &Outputs| {
        let q = x.rows(0, JOINTS).clone_owned();
        let qd = x.rows(JOINTS, JOINTS).clone_owned();
        let (th, th_dot) = trajectory.eval(t);
        let e = &q - &th;
        let m = mass_matrix(model, q.as_slice(), false);
        res.storage.push(0.5 * qd.dot(&(&m * &qd)) + 0.5 * e.dot(&(&kp * &e)));
        res.supply.push(x[x.len() - 1]);
        res.t.push(t);
        res.q.push(q);
        res.q_dot.push(qd);
        res.theta_d.push(th);
        res.theta_d_dot.push(th_dot);
        res.u_bar.push(out.u_bar.clone());
        res.tau.push(out.tau.clone());
    };

    let (mut k1, out0) = sys.deriv(0.0, &x)?;
    record(0.0, &x, &out0);
    for step in 0..steps {
        let t = step as f64 * dt;
        let (k2, _) = sys.deriv(t + 0.5 * dt, &(&x + &k1 * (0.5 * dt)))?;
        let (k3, _) = sys.deriv(t + 0.5 * dt, &(&x + &k2 * (0.5 * dt)))?;
        let (k4, _) = sys.deriv(t + dt, &(&x + &k3 * dt))?;
        x += (&k1 + (&k2 + &k3) * 2.0 + &k4) * (dt / 6.0);
        let t_next = (step + 1) as f64 * dt;
        let norm = x.norm();
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            return Err(Error::Diverged { t: t_next, norm });
        }
        let (k_next, out) = sys.deriv(t_next, &x)?;
        record(t_next, &x, &out);
        k1 = k_next;
    }
    Ok(res)
}

/// Per-joint RMS of the tracking errors over the whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsMetrics {
    /// Angle error RMS (deg).
    pub angle_deg: Vec<f64>,
    /// Rate error RMS (deg/s).
    pub rate_deg: Vec<f64>,
}

/// `sqrt((1/T) ∫ v² dt)` by the trapezoid rule.
pub fn rms_trapezoid(t: &[f64], v: &[f64]) -> f64 {
    if t.len() < 2 {
        return v.first().map_or(0.0, |x| x.abs());
    }
    let integral: f64 = t
        .windows(2)
        .zip(v.windows(2))
        .map(|(tw, vw)| 0.5 * (tw[1] - tw[0]) * (vw[0] * vw[0] + vw[1] * vw[1]))
        .sum();
    (integral / (t[t.len() - 1] - t[0])).sqrt()
}

pub fn rms_metrics(result: &SimResult) -> Result<RmsMetrics> {
    if result.is_empty() {
        return Err(Error::param("empty simulation result"));
    }
    let n = result.q[0].len();
    let mut angle_deg = Vec::with_capacity(n);
    let mut rate_deg = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<f64> = (0..result.len())
            .map(|k| result.q[k][j] - result.theta_d[k][j])
            .collect();
        let ed: Vec<f64> = (0..result.len())
            .map(|k| result.q_dot[k][j] - result.theta_d_dot[k][j])
            .collect();
        angle_deg.push(rms_trapezoid(&result.t, &e).to_degrees());
        rate_deg.push(rms_trapezoid(&result.t, &ed).to_degrees());
    }
    Ok(RmsMetrics { angle_deg, rate_deg })
}
