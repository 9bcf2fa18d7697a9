//! Randomized harnesses shared by the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qsrgs_core::certification::{DissipativeDesign, LtiSystem};
use qsrgs_core::composition::{compose_special, compose_theorem1, compose_theorem2};
use qsrgs_core::qsr::{supply_prefixes, QsrTriple, SampledSignal, SpecialCase};
use qsrgs_core::scheduling::{build_pseudo_commuting, verify_pseudo_commute, FactorBlocks, SchedulingFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let m = random_matrix(rng, n, n);
    m.transpose() * m + DMatrix::identity(n, n) * floor
}

/// `−LLᵀ` with `L` of random rank (possibly zero).
pub fn random_nsd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let k = rng.random_range(0..=n);
    let l = random_matrix(rng, n, k);
    -(&l * l.transpose())
}

pub fn random_skew(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = random_matrix(rng, n, n) * 2.0;
    &m - m.transpose()
}

/// Random `S` of the requested shape, rank-deficient about a third of the time.
pub fn random_s(rng: &mut ChaCha8Rng, n_y: usize, n_u: usize) -> DMatrix<f64> {
    let full = n_y.min(n_u);
    let rank = if full > 1 && rng.random_bool(0.35) {
        rng.random_range(1..full)
    } else {
        full
    };
    random_matrix(rng, n_y, rank) * random_matrix(rng, rank, n_u)
}

/// Smooth random matrix function `M₀ + M₁ sin(ωt + φ)`.
fn smooth(rng: &mut ChaCha8Rng, r: usize, c: usize) -> impl Fn(f64) -> DMatrix<f64> {
    let m0 = random_matrix(rng, r, c);
    let m1 = random_matrix(rng, r, c);
    let w = rng.random_range(0.5..3.0);
    let ph = rng.random_range(0.0..std::f64::consts::TAU);
    move |t| &m0 + &m1 * (w * t + ph).sin()
}

/// Scalar weight that is either 1 or a raised sine that vanishes on intervals.
fn window(rng: &mut ChaCha8Rng, always_on: bool) -> impl Fn(f64) -> f64 {
    let gated = !always_on && rng.random_bool(0.5);
    let w = rng.random_range(0.8..2.5);
    let ph = rng.random_range(0.0..std::f64::consts::TAU);
    move |t| if gated { (w * t + ph).sin().max(0.0) } else { 1.0 }
}

pub fn random_blocks(
    rng: &mut ChaCha8Rng,
    rank: usize,
    n_u: usize,
    n_y: usize,
    grid: &[f64],
    always_on: bool,
) -> FactorBlocks {
    let z11 = smooth(rng, rank, rank);
    let z21 = smooth(rng, n_u - rank, rank);
    let z22 = smooth(rng, n_u - rank, n_u - rank);
    let w21 = smooth(rng, n_y - rank, rank);
    let w22 = smooth(rng, n_y - rank, n_y - rank);
    let gate = window(rng, always_on);
    FactorBlocks::from_fn(grid.to_vec(), move |t| {
        let g = gate(t);
        (z11(t) * g, z21(t) * g, z22(t) * g, w21(t) * g, w22(t) * g)
    })
}

pub fn numerical_rank(s: &DMatrix<f64>) -> usize {
    qsrgs_core::scheduling::svd_reduced(s).map(|d| d.rank).unwrap_or(0)
}

/// Largest pseudo-commutation residual `‖Φ_yᵀS − SΦ_u‖₂` over `count`
/// random `(S, FactorBlocks)` instances cycling through the tested shapes.
pub fn pseudo_commute_worst(seed: u64, count: usize) -> f64 {
    const SHAPES: [(usize, usize); 4] = [(1, 1), (2, 3), (3, 2), (3, 3)];
    let mut rng = rng(seed);
    let grid: Vec<f64> = (0..5).map(|k| k as f64 * 0.25).collect();
    let mut worst = 0.0f64;
    for trial in 0..count {
        let (n_y, n_u) = SHAPES[trial % SHAPES.len()];
        let s = random_s(&mut rng, n_y, n_u) * rng.random_range(0.1..10.0);
        let rank = numerical_rank(&s);
        let blocks = random_blocks(&mut rng, rank, n_u, n_y, &grid, true);
        let fam = build_pseudo_commuting(trial, &s, &blocks).expect("construction succeeds");
        let (_, res) = verify_pseudo_commute(&fam, &s, f64::INFINITY);
        worst = worst.max(res);
    }
    worst
}

/// One subsystem of a randomized bank: realization, its triple and family.
pub struct Member {
    pub sys: LtiSystem,
    pub triple: QsrTriple,
    pub family: SchedulingFamily,
}

fn design(
    rng: &mut ChaCha8Rng,
    q: DMatrix<f64>,
    s: DMatrix<f64>,
    d: DMatrix<f64>,
    r_extra: DMatrix<f64>,
) -> DissipativeDesign {
    let n_x = rng.random_range(1..=4);
    let n_y = q.nrows();
    DissipativeDesign {
        q,
        s,
        d,
        p: random_spd(rng, n_x, 0.2),
        c: random_matrix(rng, n_y, n_x),
        r_extra,
        gamma: rng.random_range(0.05..1.0),
        skew: random_skew(rng, n_x),
    }
}

/// Design data of a passive, ISP, OSP or VSP subsystem with `S = ½I`.
fn passivity_design(rng: &mut ChaCha8Rng, n: usize, kind: usize) -> DissipativeDesign {
    let eye = DMatrix::<f64>::identity(n, n);
    let half = &eye * 0.5;
    let zero = DMatrix::zeros(n, n);
    match kind {
        // Passive.
        0 => design(rng, zero.clone(), half, zero.clone(), zero),
        // ISP: D = δI gives R = −δI.
        1 => {
            let delta = rng.random_range(0.05..1.0);
            design(rng, zero.clone(), half, &eye * delta, zero)
        }
        // OSP.
        2 => {
            let eps = rng.random_range(0.1..2.0);
            design(rng, &eye * -eps, half, zero.clone(), zero)
        }
        // VSP: D = dI with d < 1/ε gives R = −(d − εd²)I.
        _ => {
            let eps = rng.random_range(0.1..2.0);
            let d = rng.random_range(0.05..0.5) / eps;
            design(rng, &eye * -eps, half, &eye * d, zero)
        }
    }
}

fn member(design: DissipativeDesign, family: SchedulingFamily) -> Member {
    let (sys, triple) = design.realize().expect("valid design");
    Member { sys, triple, family }
}

/// Bank satisfying the distinct-`S` theorem: every `Q_i ≺ 0`.
pub fn theorem1_bank(rng: &mut ChaCha8Rng, grid: &[f64]) -> Vec<Member> {
    let n_sub = rng.random_range(2..=3);
    let square = rng.random_bool(0.5);
    let n_y = rng.random_range(1..=3);
    let n_u = if square { n_y } else { rng.random_range(1..=3) };
    (0..n_sub)
        .map(|i| {
            let d = if square && rng.random_bool(0.5) {
                // OSP or VSP member.
                let kind = 2 + rng.random_range(0..2);
                passivity_design(rng, n_y, kind)
            } else {
                let q = -random_spd(rng, n_y, 0.1);
                let s = random_s(rng, n_y, n_u);
                let dm = random_matrix(rng, n_y, n_u) * 0.3;
                let r_extra = random_spd(rng, n_u, 0.0) * 0.1;
                design(rng, q, s, dm, r_extra)
            };
            let rank = numerical_rank(&d.s);
            let blocks = random_blocks(rng, rank, n_u, n_y, grid, i == 0);
            let family = build_pseudo_commuting(i + 1, &d.s, &blocks).expect("construction succeeds");
            member(d, family)
        })
        .collect()
}

/// Bank satisfying the common-`S` theorem: every `Q_i ⪯ 0`, one shared `S`,
/// output scheduling active (the first family never vanishes).
pub fn theorem2_bank(rng: &mut ChaCha8Rng, grid: &[f64]) -> Vec<Member> {
    let n_sub = rng.random_range(2..=3);
    if rng.random_bool(0.5) {
        // Passivity mix with S = ½I and Φ_u = Φ_yᵀ.
        let n = rng.random_range(1..=3);
        (0..n_sub)
            .map(|i| {
                let kind = rng.random_range(0..4);
                let d = passivity_design(rng, n, kind);
                let m = smooth(rng, n, n);
                let gate = window(rng, i == 0);
                let phi_y: Vec<DMatrix<f64>> = grid.iter().map(|&t| m(t) * gate(t)).collect();
                let phi_u = phi_y.iter().map(|p| p.transpose()).collect();
                let family = SchedulingFamily::new(i + 1, grid.to_vec(), phi_u, phi_y).unwrap();
                member(d, family)
            })
            .collect()
    } else {
        let n_y = rng.random_range(1..=3);
        let n_u = rng.random_range(1..=3);
        let s = random_s(rng, n_y, n_u);
        let rank = numerical_rank(&s);
        (0..n_sub)
            .map(|i| {
                let q = random_nsd(rng, n_y);
                let dm = random_matrix(rng, n_y, n_u) * 0.3;
                let r_extra = random_spd(rng, n_u, 0.0) * 0.1;
                let d = design(rng, q, s.clone(), dm, r_extra);
                let blocks = random_blocks(rng, rank, n_u, n_y, grid, i == 0);
                let family = build_pseudo_commuting(i + 1, &s, &blocks).expect("construction succeeds");
                member(d, family)
            })
            .collect()
    }
}

/// Sum of sines per channel, zero at `t = 0`.
pub fn random_input(rng: &mut ChaCha8Rng, n: usize) -> impl Fn(f64) -> DVector<f64> {
    let terms: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|_| {
            (0..3)
                .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(0.3..6.0)))
                .collect()
        })
        .collect();
    move |t| {
        DVector::from_iterator(
            n,
            terms.iter().map(|ch| ch.iter().map(|(a, w)| a * (w * t).sin()).sum()),
        )
    }
}

/// Composite input/output of the scheduled interconnection
/// `u_i = Φ_{u,i} u`, `y = Σ Φ_{y,i} y_i`, from zero initial state.
pub fn scheduled_response(
    bank: &[Member],
    input: &dyn Fn(f64) -> DVector<f64>,
    dt: f64,
    steps: usize,
) -> (SampledSignal, SampledSignal) {
    let n_y = bank[0].triple.n_y();
    let mut y: Vec<DVector<f64>> = vec![DVector::zeros(n_y); steps + 1];
    let mut grid = Vec::new();
    let mut u = Vec::new();
    for m in bank {
        let fam = &m.family;
        let resp = m
            .sys
            .simulate(&DVector::zeros(m.sys.n_x()), dt, steps, |t| fam.at_time(t).0 * input(t))
            .expect("simulation succeeds");
        for (k, yi) in resp.y.values().iter().enumerate() {
            y[k] += fam.at_time(resp.y.grid()[k]).1 * yi;
        }
        grid = resp.y.grid().to_vec();
    }
    for &t in &grid {
        u.push(input(t));
    }
    (
        SampledSignal::new(grid.clone(), u).unwrap(),
        SampledSignal::new(grid, y).unwrap(),
    )
}

/// Smallest composed supply-integral prefix over `banks` random banks
/// (alternating theorems) and `inputs` inputs each.
pub fn soundness_worst(seed: u64, banks: usize, inputs: usize) -> f64 {
    let dt = 1e-2;
    let steps = 400;
    // Stamps every dt/2 so each RK4 stage lands on a stamp.
    let grid: Vec<f64> = (0..=2 * steps).map(|k| k as f64 * dt * 0.5).collect();
    let mut rng = rng(seed);
    let mut worst = f64::INFINITY;
    for b in 0..banks {
        let bank = if b % 2 == 0 {
            theorem1_bank(&mut rng, &grid)
        } else {
            theorem2_bank(&mut rng, &grid)
        };
        let triples: Vec<QsrTriple> = bank.iter().map(|m| m.triple.clone()).collect();
        let families: Vec<SchedulingFamily> = bank.iter().map(|m| m.family.clone()).collect();
        let report = if b % 2 == 0 {
            compose_theorem1(&triples, &families)
        } else {
            compose_theorem2(&triples, &families)
        }
        .unwrap_or_else(|e| panic!("bank {b}: {e}"));
        let n_u = triples[0].n_u();
        for _ in 0..inputs {
            let input = random_input(&mut rng, n_u);
            let (u, y) = scheduled_response(&bank, &input, dt, steps);
            let prefixes = supply_prefixes(&u, &y, &report.composed).unwrap();
            worst = prefixes.iter().copied().fold(worst, f64::min);
        }
    }
    worst
}

/// Largest deviation between the matrix compositions of `s_i(t)·I`
/// schedules and the scalar formulas evaluated directly on `s_i`.
pub fn base_case_worst(seed: u64, trials: usize) -> f64 {
    let mut rng = rng(seed);
    let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 0.02).collect();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = rng.random_range(1..=3);
        let n_sub = rng.random_range(2..=4);
        let signals: Vec<Box<dyn Fn(f64) -> f64>> = (0..n_sub)
            .map(|i| {
                let a = rng.random_range(0.2..1.5);
                let w = rng.random_range(0.5..3.0);
                let ph = rng.random_range(0.0..std::f64::consts::TAU);
                let gated = i > 0 && rng.random_bool(0.5);
                Box::new(move |t: f64| {
                    let v = a * (1.2 + (w * t + ph).sin());
                    if gated {
                        v * (w * t).sin().max(0.0)
                    } else {
                        v
                    }
                }) as Box<dyn Fn(f64) -> f64>
            })
            .collect();
        let bank: Vec<SchedulingFamily> = signals
            .iter()
            .enumerate()
            .map(|(i, s)| SchedulingFamily::scalar(i + 1, grid.clone(), n, n, s).unwrap())
            .collect();
        let samples: Vec<Vec<f64>> = grid.iter().map(|&t| signals.iter().map(|s| s(t)).collect()).collect();
        let sum_sq = |row: &Vec<f64>| row.iter().map(|v| v * v).sum::<f64>();
        let sup_sum = samples.iter().map(sum_sq).fold(0.0, f64::max);
        let inf_active = samples
            .iter()
            .map(|row| row.iter().filter(|v| v.abs() > 1e-8).map(|v| v * v).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let sup_abs: Vec<f64> = (0..n_sub)
            .map(|i| samples.iter().map(|row| row[i].abs()).fold(0.0, f64::max))
            .collect();
        let params: Vec<f64> = (0..n_sub).map(|_| rng.random_range(0.1..2.0)).collect();
        let min_p = params.iter().copied().fold(f64::INFINITY, f64::min);
        let max_p = params.iter().copied().fold(0.0, f64::max);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);

        let isp: Vec<SpecialCase> = params.iter().map(|&d| SpecialCase::Isp { delta: d }).collect();
        let r = compose_special(&isp, &bank).unwrap();
        worst = worst.max(rel(r.delta.unwrap(), min_p * inf_active));

        let osp: Vec<SpecialCase> = params.iter().map(|&e| SpecialCase::Osp { epsilon: e }).collect();
        let r = compose_special(&osp, &bank).unwrap();
        worst = worst.max(rel(r.epsilon.unwrap(), min_p / sup_sum));

        let l2: Vec<SpecialCase> = params.iter().map(|&g| SpecialCase::FiniteL2Gain { gamma: g }).collect();
        let r = compose_special(&l2, &bank).unwrap();
        worst = worst.max(rel(r.gamma.unwrap(), max_p * sup_sum));

        let centers: Vec<f64> = (0..n_sub).map(|_| rng.random_range(-1.0..1.0)).collect();
        let conic: Vec<SpecialCase> = centers
            .iter()
            .zip(&params)
            .map(|(&c, &r)| SpecialCase::Conic { center: c, radius: r })
            .collect();
        let r = compose_special(&conic, &bank).unwrap();
        let direct: f64 = centers.iter().zip(&sup_abs).map(|(c, s)| c * s * s).sum();
        worst = worst.max(rel(r.conic_center.unwrap(), direct));
    }
    worst
}

pub mod mechanics {
    use nalgebra::DVector;
    use qsrgs_core::robot_sim::dynamics::{chain_mass_rate, chain_nonlinear_forces, Links};
    use qsrgs_core::robot_sim::{simulate_closed_loop, Feedback, Schedule, SimOptions, Trajectory};
    use qsrgs_core::synthesis::{synthesize_bank, LqrWeights, PlantModel};
    use rand::Rng;

    pub fn hold(q: [f64; 3]) -> Trajectory {
        Trajectory::new(vec![0.0], vec![DVector::from_column_slice(&q)]).unwrap()
    }

    /// Largest relative change of kinetic energy over 10 s of the undamped,
    /// unforced arm.
    pub fn energy_drift() -> f64 {
        let model = PlantModel {
            damping: [0.0; 3],
            proportional_gain: [0.0; 3],
            ..Default::default()
        };
        let opts = SimOptions {
            horizon: 10.0,
            dt: 1e-3,
            initial: Some((
                DVector::from_column_slice(&[0.3, 1.2, -0.7]),
                DVector::from_column_slice(&[0.4, -1.5, 2.0]),
            )),
            ..Default::default()
        };
        let r = simulate_closed_loop(&model, &hold([0.0; 3]), Feedback::None, &opts).unwrap();
        let v0 = r.storage[0];
        r.storage.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max) / v0
    }

    /// Largest `|V(t) − V(0) − ∫ supply| / max(1, V(0))` for a constant
    /// reference under the scheduled controller bank, starting at rest away
    /// from the reference.
    pub fn storage_identity_worst() -> f64 {
        let model = PlantModel::default();
        let points = qsrgs_core::robot_sim::reference_points();
        let bank = synthesize_bank(&model, &points, &LqrWeights::default()).unwrap();
        let controllers: Vec<_> = bank.iter().map(|c| c.realization().clone()).collect();
        let mut worst = 0.0f64;
        for schedule in [Schedule::Identity, Schedule::Scalar, Schedule::Matrix] {
            let opts = SimOptions {
                horizon: 6.0,
                initial: Some((DVector::from_column_slice(&[0.2, 0.9, 0.4]), DVector::zeros(3))),
                ..Default::default()
            };
            let fb = Feedback::Scheduled {
                controllers: &controllers,
                schedule,
            };
            let r = simulate_closed_loop(&model, &hold([0.0, 0.7, 0.6]), fb, &opts).unwrap();
            let v0 = r.storage[0];
            for (v, w) in r.storage.iter().zip(&r.supply) {
                worst = worst.max((v - v0 - w).abs() / v0.abs().max(1.0));
            }
        }
        worst
    }

    /// Largest scaled `|q̇ᵀ(f_non + ½Ṁq̇)|` over random states.
    pub fn skew_identity_worst(seed: u64, count: usize) -> f64 {
        let model = PlantModel::default();
        let links = Links::of(&model, false);
        let mut rng = super::rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..count {
            let q: Vec<f64> = (0..3)
                .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect();
            let qd: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
            let v = DVector::from_column_slice(&qd);
            let f = chain_nonlinear_forces(links, &q, &qd);
            let half = chain_mass_rate(links, &q, &qd) * &v * 0.5;
            let scale = v.norm() * (f.norm() + half.norm()).max(1.0);
            worst = worst.max(v.dot(&(f + half)).abs() / scale);
        }
        worst
    }
}

pub mod solvers {
    use super::random_matrix;
    use nalgebra::DMatrix;
    use qsrgs_core::certification::{are_residual, lyapunov_residual, solve_are, solve_lyapunov};
    use qsrgs_core::linalg::{min_sym_eig, spectral_abscissa};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn random_stable(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let a = random_matrix(rng, n, n) * 2.0;
        let shift = spectral_abscissa(&a).unwrap() + rng.random_range(0.05..1.0);
        a - DMatrix::identity(n, n) * shift
    }

    /// Worst scaled Lyapunov residual over random stable systems, `n_x ≤ 12`.
    pub fn lyapunov_worst(seed: u64, count: usize) -> f64 {
        let mut rng = super::rng(seed);
        let mut worst = 0.0f64;
        for trial in 0..count {
            let n = 1 + trial % 12;
            let a = random_stable(&mut rng, n);
            let m = random_matrix(&mut rng, n, n);
            let m = &m + m.transpose();
            let p = solve_lyapunov(&a, &m).unwrap();
            assert_eq!(p, p.transpose());
            worst = worst.max(lyapunov_residual(&a, &p, &m));
        }
        worst
    }

    /// Worst scaled Riccati residual over random stabilizable systems; also
    /// asserts a Hurwitz closed loop and `P ⪰ 0`.
    pub fn are_worst(seed: u64, count: usize) -> f64 {
        let mut rng = super::rng(seed);
        let mut worst = 0.0f64;
        for trial in 0..count {
            let n = 1 + trial % 12;
            let m = 1 + rng.random_range(0..n.min(4));
            let a = random_matrix(&mut rng, n, n) * 1.5;
            let b = random_matrix(&mut rng, n, m);
            let cq = random_matrix(&mut rng, n, n);
            let q = cq.transpose() * cq + DMatrix::identity(n, n) * 1e-3;
            let rr = random_matrix(&mut rng, m, m);
            let r = rr.transpose() * rr + DMatrix::identity(m, m) * 0.1;
            let sol = solve_are(&a, &b, &q, &r).unwrap();
            assert!(spectral_abscissa(&(&a - &b * &sol.k)).unwrap() < 0.0);
            assert!(min_sym_eig(&sol.p) > -1e-9 * sol.p.norm());
            worst = worst.max(are_residual(&a, &b, &q, &r, &sol.p));
        }
        worst
    }
}
